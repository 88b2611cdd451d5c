"""Estimators for exponents, rotation numbers, deviations, sensitivity and pinching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .graphs import GraphTable, bin_centers
from .maps import (
    FiberMap,
    HermanParams,
    LambdaParams,
    LambdaTilde,
    circle_distance,
    wrap,
)
from .orbit import DivergenceError, iterate, matrix_cocycle_product
from .parallel import pmap
from .report import DiagnosticsReport, rng_for

DEFAULT_SCHEDULE = tuple(2**k for k in range(10, 21))


def _batch_stats(batch_sums: np.ndarray, n: int) -> tuple[float, float]:
    est = math.fsum(batch_sums) / n
    per = n // len(batch_sums)
    sizes = np.full(len(batch_sums), per, dtype=float)
    sizes[-1] = n - per * (len(batch_sums) - 1)
    means = batch_sums / sizes
    if len(means) < 2:
        return est, float("nan")
    return est, float(np.std(means, ddof=1) / math.sqrt(len(means)))


# --- exponents ------------------------------------------------------------------

def fiber_lyapunov(m: FiberMap, x0, n: int, transient: int = 0, batches: int = 32) -> DiagnosticsReport:
    """(1/n) sum of log|d_xi f| along the orbit of x0, with a batch-means error bar."""
    theta0, xi0 = x0
    batches = max(1, min(batches, n))
    sums, clamps, bad = K.log_deriv_sums(m.kind, m.params, m.omega, float(theta0), float(xi0), n, transient, batches)
    if bad >= 0:
        raise DivergenceError(int(bad), "non-finite fiber value")
    est, err = _batch_stats(sums, n)
    return DiagnosticsReport(
        "fiber_lyapunov", est, err, n,
        flags={"clamped_zero_derivatives": int(clamps)},
        details={"map": m.describe(), "theta0": theta0, "xi0": xi0, "transient": transient, "batches": batches},
    )


def cocycle_lyapunov(p: HermanParams, n: int = 10**6, theta_samples: int = 32, seed: int = 0,
                     threads: int | None = None) -> DiagnosticsReport:
    """Average of (1/n) log||A_n(theta)|| over stratified theta samples."""
    if n < 10**3:
        raise ValueError("cocycle_lyapunov needs n >= 1000")
    offset = rng_for(seed).random()
    thetas = (np.arange(theta_samples) + offset) / theta_samples
    vals = np.array(pmap(lambda t: matrix_cocycle_product(p, t, n).log_norm_sum / n, thetas, threads))
    err = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else float("nan")
    return DiagnosticsReport(
        "cocycle_lyapunov", float(np.mean(vals)), err, n * theta_samples, seed,
        details={"gamma": p.gamma, "omega": p.omega, "n": n, "theta_samples": theta_samples,
                 "per_sample": vals},
    )


# --- rotation numbers and deviations ------------------------------------------

def _displacements(m: FiberMap, x0, n: int) -> np.ndarray:
    if not m.circle:
        raise TypeError("rotation numbers need a circle-fiber map with a lift")
    theta0, xi0 = x0
    return K.displacements(m.kind, m.params, m.omega, float(theta0), float(xi0), n)


def rotation_number(m: FiberMap, x0, n: int) -> DiagnosticsReport:
    """(F^n(xi) - xi) / n for the map's lift.

    The integer lift shift is added after the average so that shifting the lift
    by m shifts the estimate by exactly m.  The error bound is the spread of
    the deviations over the run divided by n.
    """
    cum = _displacements(m, x0, n)
    base = cum[n] / n
    d = cum - np.arange(n + 1) * base
    return DiagnosticsReport(
        "rotation_number", base + m.shift, float((d.max() - d.min()) / n), n,
        details={"map": m.describe(), "theta0": x0[0], "xi0": x0[1]},
    )


@dataclass
class DeviationProfile:
    rho_estimate: float
    deviations: np.ndarray
    window_sups: list[tuple[int, float, float]]

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.deviations)))


def deviations_against(cumulative: np.ndarray, rho: float) -> np.ndarray:
    """D_k = (F^k(xi) - xi) - k rho for k = 0..n."""
    return cumulative - np.arange(len(cumulative)) * rho


def dyadic_window_sups(dev: np.ndarray) -> list[tuple[int, float, float]]:
    n = len(dev) - 1
    run_max = np.maximum.accumulate(dev)
    run_min = np.minimum.accumulate(dev)
    lengths = [1 << j for j in range(max(n, 1).bit_length()) if (1 << j) <= n]
    if n not in lengths:
        lengths.append(n)
    return [(L, float(run_max[L]), float(run_min[L])) for L in lengths]


def weighted_rho(cumulative: np.ndarray) -> float:
    """Exponentially weighted Birkhoff average of the lift increments.

    The bump weight exp(-1/(t(1-t))) removes the boundary terms that make the
    plain average (F^n - xi)/n converge only like 1/n for quasiperiodic
    increments.
    """
    d = np.diff(cumulative)
    t = (np.arange(len(d)) + 0.5) / len(d)
    w = np.exp(-1.0 / (t * (1.0 - t)))
    return float(K.neumaier_sum(w * d) / K.neumaier_sum(w))


def deviation_profile(m: FiberMap, x0, n: int, rho: float | None = None) -> DeviationProfile:
    """D_k against the run's rotation-number estimate (or a supplied `rho`)."""
    cum = _displacements(m, x0, n)
    if rho is None:
        rho = weighted_rho(cum)
    else:
        rho = rho - m.shift
    dev = deviations_against(cum, rho)
    return DeviationProfile(rho + m.shift, dev, dyadic_window_sups(dev))


@dataclass
class RhoClassification:
    thetas: np.ndarray
    labels: list[str]
    growth_above: np.ndarray
    growth_below: np.ndarray
    rho_estimate: float
    threshold: float
    n: int

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for lab in self.labels:
            out[lab] = out.get(lab, 0) + 1
        return out


def _growth(sup_now: float, sup_then: float, atol: float) -> float:
    if sup_now <= atol:
        return 1.0
    if sup_then <= atol:
        return math.inf
    return (sup_now / sup_then) ** (1.0 / 3.0)


def rho_classify(m: FiberMap, theta_grid, n: int, xi0: float = 0.0, threshold: float = 1.3,
                 threads: int | None = None) -> RhoClassification:
    """Heuristic bounded/unbounded labels for the deviations over each theta.

    The statistic is the per-doubling growth of the running sup (and of the
    running sup of -D) over the last three doublings, D measured against one
    grid-wide rotation number.  A finite run cannot prove unboundedness; the
    statistics are returned with the labels.
    """
    thetas = np.asarray(theta_grid, dtype=float)
    cums = pmap(lambda t: _displacements(m, (t, xi0), n), thetas, threads)
    rho = float(np.mean([weighted_rho(c) for c in cums]))
    atol = 64 * np.finfo(float).eps * n * (1.0 + abs(rho))
    eighth = max(n // 8, 1)
    labels, ga, gb = [], [], []
    for c in cums:
        dev = deviations_against(c, rho)
        up = np.maximum.accumulate(dev)
        dn = np.maximum.accumulate(-dev)
        a = _growth(up[n], up[eighth], atol)
        b = _growth(dn[n], dn[eighth], atol)
        ga.append(a)
        gb.append(b)
        above, below = a > threshold, b > threshold
        labels.append(
            "unbounded-both" if above and below
            else "unbounded-above" if above
            else "unbounded-below" if below
            else "bounded"
        )
    return RhoClassification(thetas, labels, np.array(ga), np.array(gb), rho + m.shift, threshold, n)


# --- phase sensitivity --------------------------------------------------------------

@dataclass
class PhaseSensitivity:
    N: np.ndarray
    S: np.ndarray
    mu: float | None
    residual: float | None

    @property
    def defined(self) -> bool:
        return self.mu is not None


def phase_sensitivity(m: FiberMap, x0, N_schedule=DEFAULT_SCHEDULE) -> PhaseSensitivity:
    """S_N = max_{n<=N} |d xi_n / d theta_0| and a log-log least-squares exponent.

    mu is None when every p_n vanishes (no phase dependence at all).
    """
    N = np.asarray(sorted(set(int(k) for k in N_schedule)), dtype=np.int64)
    theta0, xi0 = x0
    S = K.tangent_running_max(m.kind, m.params, m.omega, float(theta0), float(xi0), N)
    if not np.all(S > 0) or not np.all(np.isfinite(S)):
        return PhaseSensitivity(N, S, None, None)
    x, y = np.log(N.astype(float)), np.log(S)
    coef = np.polyfit(x, y, 1)
    res = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    return PhaseSensitivity(N, S, float(coef[0]), res)


def phase_sensitivity_sweep(m: FiberMap, seeds: int = 32, master_seed: int = 0,
                            N_schedule=DEFAULT_SCHEDULE, depth: int = 10**4,
                            threads: int | None = None) -> DiagnosticsReport:
    """Median exponent over orbits started on the attractor at seeded random phases."""
    def one(i):
        rng = rng_for(master_seed, i)
        t0 = rng.random()
        start = K.pullback(m.kind, m.params, m.circle, m.omega, t0, depth, 1.0 if not m.circle else rng.random())
        return phase_sensitivity(m, (t0, start), N_schedule)

    runs = pmap(one, range(seeds), threads)
    mus = np.array([r.mu if r.defined else np.nan for r in runs])
    finite = mus[np.isfinite(mus)]
    med = float(np.median(finite)) if finite.size else float("nan")
    return DiagnosticsReport(
        "phase_sensitivity", med, float(np.std(finite) if finite.size else np.nan), seeds, master_seed,
        flags={"undefined_fits": int(np.sum(~np.isfinite(mus)))},
        details={"mu": mus, "residual": [r.residual for r in runs],
                 "N": list(N_schedule), "map": m.describe()},
    )


# --- attractor sampling and pinching -------------------------------------------

@dataclass
class AttractorSample:
    thetas: np.ndarray
    xis: np.ndarray
    from_pullback: np.ndarray

    def __len__(self):
        return len(self.thetas)


def attractor_sample(m: FiberMap, bins: int = 4096, seeds_per_bin: int = 64, depth: int = 10**4,
                     occupation: int = 10**7, transient: int = 10**4, seed: int = 0,
                     merge_tol: float = 1e-13, threads: int | None = None) -> AttractorSample:
    """Union of per-bin pullbacks of spread-out seeds and one long orbit.

    Seeds that have merged to within merge_tol are iterated once; this only
    removes duplicated work.
    """
    lo, hi = getattr(m, "interval", (0.0, 1.0))
    seeds = lo + (np.arange(seeds_per_bin) + 0.5) / seeds_per_bin * (hi - lo)
    centers = bin_centers(bins)

    def pull(t):
        return K.pullback_seeds(m.kind, m.params, m.circle, m.omega, t, depth, seeds, merge_tol)

    pulled = np.concatenate(pmap(pull, centers, threads)) if seeds_per_bin else np.empty(0)
    pth = np.repeat(centers, seeds_per_bin)
    parts_t, parts_x, prov = [pth], [pulled], [np.ones(len(pth), dtype=bool)]
    if occupation:
        rng = rng_for(seed)
        tr = iterate(m, (rng.random(), hi if not m.circle else rng.random()), occupation, transient)
        xs = tr.fibers % 1.0 if m.circle else tr.fibers
        parts_t.append(tr.thetas)
        parts_x.append(xs)
        prov.append(np.zeros(occupation, dtype=bool))
    return AttractorSample(np.concatenate(parts_t), np.concatenate(parts_x), np.concatenate(prov))


@dataclass
class PinchProfile:
    bin_width: float
    diameters: np.ndarray
    counts: np.ndarray
    empty: np.ndarray

    @property
    def bins(self) -> int:
        return len(self.diameters)

    @property
    def min_bin(self) -> int:
        d = np.where(self.empty, np.inf, self.diameters)
        return int(np.argmin(d))

    @property
    def min_location(self) -> float:
        return (self.min_bin + 0.5) * self.bin_width

    @property
    def max_diameter(self) -> float:
        return float(np.max(self.diameters))

    def diameter_at(self, theta: float) -> float:
        j = min(int(wrap(theta) / self.bin_width), self.bins - 1)
        return float(self.diameters[j])


def pinching_profile(sample: AttractorSample, bin_width: float) -> PinchProfile:
    """Per-bin fiber diameter (max - min) of an attractor sample; empty bins are flagged."""
    nb = int(round(1.0 / bin_width))
    if abs(nb * bin_width - 1.0) > 1e-12:
        raise ValueError("bin_width must divide the circle")
    lo, hi, cnt = K.bin_minmax(np.ascontiguousarray(sample.thetas), np.ascontiguousarray(sample.xis), nb)
    empty = cnt == 0
    diam = np.where(empty, 0.0, hi - lo)
    return PinchProfile(1.0 / nb, diam, cnt, empty)


# --- sensitive dependence -----------------------------------------------------------

@dataclass
class SdicQuery:
    epsilon: float
    delta: float
    n_max: int = 10**5
    sample_count: int = 64
    seed: int = 0

    def __post_init__(self):
        if not (self.epsilon > 0 and self.delta > 0):
            raise ValueError("epsilon and delta must be positive")


@dataclass
class SdicWitness:
    x: tuple
    y: tuple
    n: int
    separation: float
    verified: bool = False
    verified_separation: float = float("nan")


@dataclass
class SdicNotFound:
    x: tuple
    tried: int
    n_max: int
    max_separation: float


def _state_distance(m, x, y) -> float:
    (t1, s1), (t2, s2) = x, y
    dt = circle_distance(t1, t2)
    if isinstance(m, LambdaParams):
        return max(dt, math.hypot(s1[0] - s2[0], s1[1] - s2[1]))
    if isinstance(m, LambdaTilde):
        return max(dt, circle_distance(s1[0], s2[0]), abs(s1[1] - s2[1]))
    if m.circle:
        return max(dt, circle_distance(s1, s2))
    return max(dt, abs(s1 - s2))


def _pair_search(m, x, y, eps, n_max):
    (t1, s1), (t2, s2) = x, y
    if isinstance(m, LambdaParams):
        return K.sdic_pair_lambda(m.beta, m.gamma, m.omega, t1, s1[0], s1[1], t2, s2[0], s2[1], eps, n_max)
    if isinstance(m, LambdaTilde):
        p = m.params
        return K.sdic_pair_polar(p.beta, p.gamma, p.omega, t1, s1[0], s1[1], t2, s2[0], s2[1], eps, n_max)
    return K.sdic_pair_fiber(m.kind, m.params, m.circle, m.omega, t1, float(s1), t2, float(s2), eps, n_max)


def _state_after(m, x, n):
    tr = iterate(m, x, 1, n)
    fib = tr.fibers[0]
    if isinstance(m, (LambdaParams, LambdaTilde)):
        return tr.thetas[0], (float(fib[0]), float(fib[1]))
    return tr.thetas[0], float(fib % 1.0) if m.circle else float(fib)


def _ball_candidates(m, x, delta, count, rng):
    theta, s = x
    out = []
    while len(out) < count:
        r = 0.999 * delta
        t = wrap(theta + rng.uniform(-r, r))
        if isinstance(m, LambdaParams):
            ang, rad = rng.uniform(0, 2 * math.pi), r * math.sqrt(rng.random())
            y = (t, (s[0] + rad * math.cos(ang), s[1] + rad * math.sin(ang)))
            if math.hypot(*y[1]) > m.C:
                continue
        elif isinstance(m, LambdaTilde):
            rr = s[1] + rng.uniform(-r, r)
            if not 0.0 <= rr <= 1.0:
                continue
            y = (t, (wrap(s[0] + rng.uniform(-r, r)), rr))
        elif m.circle:
            y = (t, wrap(s + rng.uniform(-r, r)))
        else:
            y = (t, s + rng.uniform(-r, r))
        out.append(y)
    return out


def _sample_candidates(x, sample: AttractorSample, delta, count, rng):
    theta, s = x
    dt = np.abs(sample.thetas - theta)
    dt = np.minimum(dt, 1.0 - dt)
    near = np.flatnonzero((dt < delta) & (np.abs(sample.xis - s) < delta) & ((dt > 0) | (sample.xis != s)))
    if near.size > count:
        near = rng.choice(near, size=count, replace=False)
    return [(float(sample.thetas[i]), float(sample.xis[i])) for i in near]


def sdic_witness(m, x, q: SdicQuery, attractor: AttractorSample | None = None):
    """Search the delta-ball around x for an orbit that separates beyond epsilon.

    Candidates are drawn uniformly from the ball with a seeded generator; with
    an attractor sample they are drawn from the sample points inside the ball
    instead.  A returned witness has been re-simulated from scratch.
    """
    rng = rng_for(q.seed)
    if attractor is not None:
        cands = _sample_candidates(x, attractor, q.delta, q.sample_count, rng)
    else:
        cands = _ball_candidates(m, x, q.delta, q.sample_count, rng)
    best = 0.0
    for y in cands:
        if _state_distance(m, x, y) >= q.delta:
            continue
        n, sep, mx = _pair_search(m, x, y, q.epsilon, q.n_max)
        best = max(best, mx)
        if n >= 0:
            w = SdicWitness(x, y, int(n), float(sep))
            vsep = _state_distance(m, _state_after(m, x, n), _state_after(m, y, n))
            w.verified_separation = vsep
            w.verified = vsep > q.epsilon and abs(vsep - sep) < 1e-9
            return w
    return SdicNotFound(x, len(cands), q.n_max, best)


# --- topology ---------------------------------------------------------------------

class WindingError(RuntimeError):
    pass


def homotopy_winding(m: FiberMap, xi0: float = 0.0, grid: int = 256, max_grid: int = 2**20) -> int:
    """Number of turns of theta -> f_theta(xi0) - xi0 as theta runs once around.

    The grid is doubled until consecutive images differ by less than a
    quarter turn, so that the continuous lift is unambiguous.
    """
    if not m.circle:
        raise TypeError("winding needs a circle-fiber map")
    while grid <= max_grid:
        th = np.arange(grid + 1) / grid
        th[-1] = 0.0
        img = K.fiber_images(m.kind, m.params, th, wrap(xi0))
        inc = np.diff(img)
        inc -= np.round(inc)
        if np.max(np.abs(inc)) < 0.25:
            total = math.fsum(inc)
            k = int(round(total))
            if abs(total - k) > 1e-6:
                raise WindingError(f"lift did not close: total {total}")
            return k
        grid *= 2
    raise WindingError("grid refinement exceeded the limit")


# --- graphs and basins ------------------------------------------------------------

def basin_infimum(m: FiberMap, x, graph: GraphTable, n: int, running: bool = False):
    """inf_{k<=n} |f^k_theta(xi) - phi(theta + k omega)| with phi looked up per bin."""
    tr = iterate(m, x, n + 1)
    d = np.abs(tr.fibers - graph(tr.thetas))
    if graph.circle:
        d = np.minimum(d % 1.0, 1.0 - d % 1.0)
    run = np.minimum.accumulate(d)
    return run if running else float(run[-1])


def bounding_graphs(m: FiberMap, grid: int, depth: int = 10**4, interval: tuple[float, float] | None = None,
                    tol: float = 1e-10, threads: int | None = None) -> tuple[GraphTable, GraphTable]:
    """Upper/lower bounding graphs of the global attractor via endpoint pullbacks.

    The fiber maps may reverse orientation; the image of [a, b] is always the
    interval spanned by the images of a and b, so the bounds are the max/min
    of the two endpoint pullbacks.  The invariance residual compares
    f_theta(phi+(theta)) with phi+(theta+omega) where f_theta preserves order
    and with phi-(theta+omega) where it reverses it (and likewise for phi-).
    """
    if m.circle:
        raise TypeError("bounding graphs need interval fibers")
    a, b = interval if interval is not None else m.interval
    centers = bin_centers(grid)

    def bounds(ts, d):
        va = K.pullback_grid(m.kind, m.params, False, m.omega, ts, d, float(a))
        vb = K.pullback_grid(m.kind, m.params, False, m.omega, ts, d, float(b))
        return np.maximum(va, vb), np.minimum(va, vb)

    # the residual is taken on the bounds: a single endpoint's pullback can
    # land on either bound depending on the sign pattern along the chain
    up, lo = bounds(centers, depth)
    uh, lh = bounds(centers, max(depth // 2, 1))
    res = np.maximum(np.abs(up - uh), np.abs(lo - lh))
    nxt = np.array([wrap(t + m.omega) for t in centers])
    up1, lo1 = bounds(nxt, depth)
    img_up = np.array([K.fiber_step(m.kind, m.params, t, v) for t, v in zip(centers, up)])
    img_lo = np.array([K.fiber_step(m.kind, m.params, t, v) for t, v in zip(centers, lo)])
    keeps = np.array([K.fiber_partials(m.kind, m.params, t, 0.0)[0] >= 0 for t in centers])
    inv_up = np.where(keeps, np.abs(img_up - up1), np.abs(img_up - lo1))
    inv_lo = np.where(keeps, np.abs(img_lo - lo1), np.abs(img_lo - up1))
    src = {"graph": "bounding", "map": m.describe(), "depth": depth, "interval": [a, b]}
    bad = int(np.sum(res >= tol))
    warn = [f"{bad} bins did not converge to {tol}"] if bad else []
    return (
        GraphTable(up, res, False, inv_up, dict(src, side="upper"), warnings=list(warn)),
        GraphTable(lo, res, False, inv_lo, dict(src, side="lower"), warnings=list(warn)),
    )
