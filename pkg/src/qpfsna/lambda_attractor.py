"""Radial graphs, the invariant torus and the two-point attractor of the Lambda map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .graphs import GraphTable, bin_centers, check_grid
from .maps import (
    DomainError,
    LambdaParams,
    LambdaTilde,
    circle_distance,
    factor_map,
    lambda_step,
    lambda_tilde_step,
)
from .orbit import iterate
from .parallel import chunks, pmap
from .report import DiagnosticsReport, rng_for

RADIAL_WARM = 10**3


class RefusedError(RuntimeError):
    """A precondition checked numerically did not hold."""


@dataclass(frozen=True)
class RadialFiberSpec:
    """h_theta(r) = a(theta, phi(theta)) b(r) over the projective graph phi.

    ``side`` picks phi = phi^u ("unstable") or phi^s ("stable").  With
    ``a_const`` set, a is replaced by that constant (synthetic base graph).
    """

    params: LambdaParams = field(default_factory=LambdaParams)
    side: str = "unstable"
    a_const: float | None = None

    def __post_init__(self):
        if self.side not in ("unstable", "stable"):
            raise ValueError("side must be 'unstable' or 'stable'")
        if self.a_const is not None and not self.a_const > 0:
            raise DomainError("a_const must be positive")

    @classmethod
    def over(cls, graph: GraphTable, params: LambdaParams) -> RadialFiberSpec:
        side = graph.source.get("graph", "unstable")
        if graph.converged_fraction() < 0.99:
            raise ValueError("base graph is not converged")
        return cls(params, side)

    @property
    def stable(self) -> bool:
        return self.side == "stable"

    @property
    def _a(self) -> float:
        return -1.0 if self.a_const is None else float(self.a_const)


def _radial_grid(spec: RadialFiberSpec, thetas, depth, threads, warm=RADIAL_WARM, r0=1.0):
    p = spec.params
    thetas = np.ascontiguousarray(thetas, dtype=float)
    parts = chunks(len(thetas), max(1, threads or 1) * 4)
    res = pmap(
        lambda s: K.radial_pullback_grid(p.beta, p.gamma, p.omega, thetas[s], depth, warm,
                                         spec.stable, spec._a, r0),
        parts, threads,
    )
    return np.concatenate([a for a, _ in res]), np.concatenate([r for _, r in res])


def radial_lyapunov(spec: RadialFiberSpec, which: str = "graph", n: int = 10**6, starts: int = 8,
                    threads: int | None = None) -> DiagnosticsReport:
    """Radial exponent of the zero line (log a) or of the radial graph (log a|b'(rho)|).

    Evaluated on orbits: phi by forward iteration or backward sweep, r by
    forward iteration after a settling run.
    """
    if which not in ("graph", "zero"):
        raise ValueError("which must be 'graph' or 'zero'")
    p = spec.params
    ts = (np.arange(starts) + 0.5) / starts
    out = pmap(lambda t: K.radial_exponent(p.beta, p.gamma, p.omega, t, n, RADIAL_WARM, spec.stable,
                                           spec._a, which == "zero"), ts, threads)
    vals = np.array([s / n for s, _ in out])
    clamps = int(sum(c for _, c in out))
    err = float(np.std(vals, ddof=1) / math.sqrt(starts)) if starts > 1 else float("nan")
    return DiagnosticsReport(
        f"radial_lyapunov_{which}_{spec.side}", float(vals.mean()), err, n * starts,
        flags={"clamped_zero_derivatives": clamps}, details={"per_start": vals},
    )


def radial_graph(spec: RadialFiberSpec, grid: int = 4096, depth: int = 10**4, threads: int | None = None,
                 check_n: int = 10**5) -> GraphTable:
    """rho(theta) by pullback of r = 1 under h; refuses if the zero line is not repelling."""
    check_grid(grid)
    zl = radial_lyapunov(spec, "zero", check_n, starts=4, threads=threads)
    if not zl.estimate > 0:
        raise RefusedError(f"zero-line radial exponent {zl.estimate:.6g} is not positive")
    centers = bin_centers(grid)
    alpha, rho = _radial_grid(spec, centers, depth, threads)
    _, half = _radial_grid(spec, centers, max(depth // 2, 1), threads)
    _, rho1 = _radial_grid(spec, (centers + spec.params.omega) % 1.0, depth, threads)
    p = spec.params
    if spec.a_const is None:
        a = np.array([K.a_coeff(p.beta, p.gamma, t, al) for t, al in zip(centers, alpha)])
    else:
        a = np.full(grid, float(spec.a_const))
    img = a * rho / (1.0 + rho * rho)
    return GraphTable(
        rho, np.abs(rho - half), circle=False, invariance=np.abs(img - rho1),
        source={"graph": f"radial-{spec.side}", "beta": p.beta, "gamma": p.gamma, "omega": p.omega,
                "a_const": spec.a_const, "depth": depth, "zero_line_exponent": zl.estimate,
                "base_values": alpha, "a_values": a},
    )


# --- invariant torus -------------------------------------------------------------

class EpsilonValidationError(RuntimeError):
    def __init__(self, eps, margin):
        super().__init__(f"slab [eps, 1] not mapped inside itself (eps={eps:g}, margin={margin:.3g})")
        self.eps = eps
        self.margin = margin


def validate_epsilon(p: LambdaParams, eps: float, steps: int = 64, sample: int = 128) -> tuple[int, float]:
    """Smallest k <= steps with min pi_r of the k-th image of {r = eps} above eps.

    b is increasing on [0, 1], so the image of [eps, 1] lies above the image of
    its lower edge.  Returns (k, margin); k = 0 when no k works.
    """
    c = bin_centers(sample)
    th, al = np.meshgrid(c, c, indexing="ij")
    mins = K.torus_validate(p.beta, p.gamma, p.omega, th.ravel().copy(), al.ravel().copy(), eps, steps)
    ok = np.flatnonzero(mins > eps)
    if ok.size:
        k = int(ok[0])
        return k + 1, float(mins[k] - eps)
    return 0, float(np.max(mins) - eps)


@dataclass
class TorusTable:
    """T(theta, alpha) on a grid x grid table of cell centers (theta on axis 0)."""

    params: LambdaParams
    values: np.ndarray
    residuals: np.ndarray
    invariance: np.ndarray
    epsilon: float
    depth: int
    validation_steps: int
    validation_margin: float

    @property
    def grid(self) -> int:
        return self.values.shape[0]

    def __call__(self, theta, alpha):
        g = self.grid
        i = np.minimum((np.asarray(theta) % 1.0 * g).astype(np.int64), g - 1)
        j = np.minimum((np.asarray(alpha) % 1.0 * g).astype(np.int64), g - 1)
        return self.values[i, j]

    def exact(self, theta, alpha) -> np.ndarray:
        """T evaluated by pullback at the given points rather than looked up."""
        return torus_values(self.params, np.atleast_1d(theta), np.atleast_1d(alpha), self.depth)

    def invariant_fraction(self, tol: float = 1e-5) -> float:
        return float(np.mean(self.invariance < tol))


def torus_values(p: LambdaParams, thetas, alphas, depth, threads=None, r0: float = 1.0) -> np.ndarray:
    th = np.ascontiguousarray(thetas, dtype=float)
    al = np.ascontiguousarray(alphas, dtype=float)
    parts = chunks(len(th), max(1, threads or 1) * 4)
    return np.concatenate(pmap(lambda s: K.torus_grid(p.beta, p.gamma, p.omega, th[s], al[s], depth, r0),
                               parts, threads))


def invariant_torus(p: LambdaParams, grid: int = 1024, epsilon: float = 0.05, depth: int = 128,
                    threads: int | None = None, max_halvings: int = 5, validation_steps: int = 64) -> TorusTable:
    """Upper boundary of the global attractor, by pullback of r = 1 over T^2 x [eps, 1]."""
    eps = epsilon
    for _ in range(max_halvings + 1):
        k, margin = validate_epsilon(p, eps, validation_steps)
        if k:
            break
        eps /= 2
    else:
        raise EpsilonValidationError(eps * 2, margin)
    c = bin_centers(grid)
    th, al = np.meshgrid(c, c, indexing="ij")
    th, al = th.ravel(), al.ravel()
    v = torus_values(p, th, al, depth, threads)
    h = torus_values(p, th, al, max(depth // 2, 1), threads)
    th2, al2, img = K.torus_step_grid(p.beta, p.gamma, p.omega, th, al, v)
    v1 = torus_values(p, th2, al2, depth, threads)
    shape = (grid, grid)
    return TorusTable(p, v.reshape(shape), np.abs(v - h).reshape(shape), np.abs(img - v1).reshape(shape),
                      eps, depth, k, margin)


def torus_pointwise_error(table: TorusTable, n: int = 200, samples: int = 1000, seed: int = 0) -> float:
    """sup over random (Theta, r=1) of |pi_r of the n-th image - T(f^n Theta)|."""
    p = table.params
    rng = rng_for(seed)
    th = rng.random(samples)
    al = rng.random(samples)
    worst = 0.0
    for t, a in zip(th, al):
        tr = iterate(LambdaTilde(p), (t, (a, 1.0)), 1, n)
        tn, (an, rn) = tr.thetas[0], tr.fibers[0]
        worst = max(worst, abs(rn - table.exact(tn, an)[0]))
    return worst


# --- two-point attractor ------------------------------------------------------------

@dataclass
class AttractorPointSet:
    """Per theta: the pair of antipodal fiber points over (phi^u, rho^u)."""

    thetas: np.ndarray
    alphas: np.ndarray
    rs: np.ndarray
    u: np.ndarray  # shape (m, 2)
    v: np.ndarray
    provenance: str = "pullback"
    invariance: np.ndarray | None = None
    branch_consistency: float = float("nan")

    def __len__(self):
        return len(self.thetas)

    def polar_rows(self):
        return self.thetas, self.alphas, self.rs

    def cartesian_rows(self):
        th = np.repeat(self.thetas, 2)
        return th, self.u.ravel(), self.v.ravel()


def _pairs(alphas, rs):
    u = rs * np.cos(np.pi * alphas)
    v = rs * np.sin(np.pi * alphas)
    return np.column_stack([u, -u]), np.column_stack([v, -v])


def two_point_attractor(p: LambdaParams, grid: int = 4096, depth: int = 2000,
                        threads: int | None = None, check_invariance: bool = True) -> AttractorPointSet:
    """Points +-rho^u(theta) (cos pi phi^u, sin pi phi^u) at each bin center."""
    check_grid(grid)
    spec = RadialFiberSpec(p, "unstable")
    centers = bin_centers(grid)
    alpha, rho = _radial_grid(spec, centers, depth, threads)
    u, v = _pairs(alpha, rho)
    out = AttractorPointSet(centers, alpha, rho, u, v)
    if check_invariance:
        a1, r1 = _radial_grid(spec, (centers + p.omega) % 1.0, depth, threads)
        u1, v1 = _pairs(a1, r1)
        res = np.empty(grid)
        keep = 0
        for i in range(grid):
            iu, iv = K.lambda_step(p.beta, p.gamma, centers[i], u[i, 0], v[i, 0])
            d = np.hypot(iu - u1[i], iv - v1[i])
            res[i] = d.min()
            keep += int(np.argmin(d) == 0)
        out.invariance = res
        out.branch_consistency = keep / grid
    return out


def occupation_near_fraction(p: LambdaParams, pts: AttractorPointSet, n: int = 10**7,
                             transient: int = 10**4, tol: float = 1e-2, seed: int = 0):
    """Fraction of a post-transient Lambda orbit within tol of the two-point set.

    Returns (fraction, orbit) so callers can also emit the orbit.
    """
    rng = rng_for(seed)
    ang = 2 * math.pi * rng.random()
    rad = 0.5 * rng.random() + 0.25
    tr = iterate(p, (rng.random(), (rad * math.cos(ang), rad * math.sin(ang))), n, transient)
    u = np.ascontiguousarray(tr.fibers[:, 0])
    v = np.ascontiguousarray(tr.fibers[:, 1])
    cnt = K.near_set_count(tr.thetas, u, v, pts.u, pts.v, tol)
    return cnt / n, tr


def projection_consistency(p: LambdaParams, graph_u: GraphTable, n: int = 10**6, transient: int = 10**4,
                           tol: float = 1e-2, seed: int = 0) -> float:
    """Fraction of Lambda-tilde orbit alpha-values within tol of the phi^u bin value."""
    rng = rng_for(seed)
    tr = iterate(LambdaTilde(p), (rng.random(), (rng.random(), 0.5)), n, transient)
    d = np.abs(tr.fibers[:, 0] - graph_u(tr.thetas)) % 1.0
    d = np.minimum(d, 1.0 - d)
    return float(np.mean(d < tol))


def semiconjugacy_residual(p: LambdaParams, sample_count: int = 10**4, seed: int = 0) -> float:
    """max distance between factor(Lambda(x)) and Lambda-tilde(factor(x)) over random x, |xi| >= 1e-3."""
    rng = rng_for(seed)
    worst = 0.0
    for _ in range(sample_count):
        th = rng.random()
        r = rng.uniform(1e-3, 1.0)
        ang = 2 * math.pi * rng.random()
        xi = (r * math.cos(ang), r * math.sin(ang))
        t1, s1 = factor_map(*lambda_step(th, xi, p))
        t2, s2 = lambda_tilde_step(*factor_map(th, xi), p)
        d = max(circle_distance(t1, t2), circle_distance(s1.alpha, s2.alpha), abs(s1.r - s2.r))
        worst = max(worst, d)
    return worst
