"""Stable and unstable invariant graphs of the Herman projective cocycle."""

from __future__ import annotations

import math
import warnings

import numpy as np

from . import _kernels as K
from .diagnostics import cocycle_lyapunov
from .graphs import GraphTable, bin_centers, check_grid
from .maps import DomainError, HermanParams
from .parallel import chunks, pmap
from .report import DiagnosticsReport

CERTIFY_MIN_EXPONENT = 1e-3


class UntrustedGraphWarning(UserWarning):
    pass


def lyap_lower_bound(gamma: float) -> float:
    """log(sqrt(gamma)/2 + 1/(2 sqrt(gamma)))."""
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    g = math.sqrt(gamma)
    return math.log(g / 2 + 1 / (2 * g))


def _circle_abs(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.minimum(d, 1.0 - d)


def _pull(q: HermanParams, thetas, depth, seed, threads):
    thetas = np.ascontiguousarray(thetas, dtype=float)
    parts = chunks(len(thetas), max(1, threads or 1) * 4)
    out = pmap(
        lambda s: K.graph_pullback_grid(q.gamma, q.inverse, q.omega, thetas[s], depth, seed, False),
        parts, threads,
    )
    return np.concatenate(out)


def _attracting_graph(q: HermanParams, grid, depth, seed, threads, side, exponent_n):
    check_grid(grid)
    centers = bin_centers(grid)
    v = _pull(q, centers, depth, seed, threads)
    h = _pull(q, centers, max(depth // 2, 1), seed, threads)
    nxt = (centers + q.rotation) % 1.0
    v1 = _pull(q, nxt, depth, seed, threads)
    img = np.array([K.proj_fwd(q.gamma, q.inverse, q.omega, t, a) for t, a in zip(centers, v)])
    table = GraphTable(
        v, _circle_abs(v, h), circle=True, invariance=_circle_abs(img, v1),
        source={"graph": side, "gamma": q.gamma, "omega": q.omega, "inverse": q.inverse,
                "depth": depth, "seed": seed},
    )
    lam = cocycle_lyapunov(HermanParams(omega=q.omega, gamma=q.gamma), n=exponent_n, theta_samples=8,
                           threads=threads).estimate
    table.source["cocycle_exponent"] = lam
    if lam < CERTIFY_MIN_EXPONENT:
        msg = f"cocycle exponent {lam:.3g} < {CERTIFY_MIN_EXPONENT}: no hyperbolic splitting, {side} graph not certified"
        table.trusted = False
        table.warnings.append(msg)
        warnings.warn(msg, UntrustedGraphWarning, stacklevel=3)
    bad = int(np.sum(table.residuals >= 1e-10))
    if bad:
        table.warnings.append(f"{bad} of {grid} bins did not converge")
    return table


def unstable_graph(p: HermanParams, grid: int = 4096, depth: int = 10**4, seed: float = 0.25,
                   threads: int | None = None, exponent_n: int = 10**4) -> GraphTable:
    """phi^u of the system p: pullback of a fixed direction under its forward projective map.

    For ``p.inverse`` the system is the inverse cocycle, whose unstable graph is
    the stable graph of the forward cocycle.
    """
    return _attracting_graph(p, grid, depth, seed, threads, "unstable", exponent_n)


def stable_graph(p: HermanParams, grid: int = 4096, depth: int = 10**4, seed: float = 0.25,
                 threads: int | None = None, exponent_n: int = 10**4) -> GraphTable:
    """phi^s of p, computed as the unstable graph of the inverse cocycle."""
    t = _attracting_graph(p.inverse_cocycle(), grid, depth, seed, threads, "stable", exponent_n)
    # invariance is re-measured in the forward system of p
    centers = t.centers
    nxt = (centers + p.rotation) % 1.0
    q = p.inverse_cocycle()
    v1 = _pull(q, nxt, depth, seed, threads)
    img = np.array([K.proj_fwd(p.gamma, p.inverse, p.omega, th, a) for th, a in zip(centers, t.values)])
    t.invariance = _circle_abs(img, v1)
    t.source["inverse"] = p.inverse
    return t


def graph_fiber_exponent(graph: GraphTable, p: HermanParams, n: int = 10**6, starts: int = 8,
                         warm: int = 10**3, threads: int | None = None) -> DiagnosticsReport:
    """Birkhoff average of log f'_theta along the graph, evaluated exactly on orbits.

    The table only seeds the orbit; graph values along theta0 + k omega come
    from forward iteration (unstable graph) or a backward sweep (stable
    graph), which is how they were defined.
    """
    if graph.converged_fraction() < 0.99:
        raise ValueError("graph converged on fewer than 99% of bins")
    stable = graph.source.get("graph") == "stable"
    starts_t = (np.arange(starts) + 0.5) / starts

    def one(t0):
        seed = float(graph(t0))
        al = K.graph_along(p.gamma, p.inverse, p.omega, t0, n, warm, seed, stable)
        logs = K.graph_log_derivs(p.gamma, p.inverse, p.omega, t0, al)
        return K.neumaier_sum(logs) / n

    vals = np.array(pmap(one, starts_t, threads))
    err = float(np.std(vals, ddof=1) / math.sqrt(starts)) if starts > 1 else float("nan")
    return DiagnosticsReport(
        f"graph_exponent_{graph.source.get('graph', '?')}", float(np.mean(vals)), err, n * starts,
        details={"per_start": vals, "gamma": p.gamma, "trusted": graph.trusted},
    )


def occupation_coverage(p: HermanParams, n: int = 10**6, cells: int = 64, theta0: float = 0.1,
                        alpha0: float = 0.3) -> float:
    """Fraction of (theta, alpha) cells on a cells x cells grid visited by one projective orbit.

    Reported only as a statistic; a finite orbit cannot decide whether the
    closure of the unstable graph fills the torus.
    """
    al = K.graph_along(p.gamma, p.inverse, p.omega, theta0, n, 0, alpha0, False)
    th = (theta0 + np.arange(n) * p.rotation) % 1.0
    i = np.minimum((th * cells).astype(np.int64), cells - 1)
    j = np.minimum((al * cells).astype(np.int64), cells - 1)
    hit = np.zeros((cells, cells), dtype=bool)
    hit[i, j] = True
    return float(hit.mean())
