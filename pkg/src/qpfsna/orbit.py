"""Long-horizon iteration: orbits, tangents, cocycle products and pullbacks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .maps import (
    FiberMap,
    HermanParams,
    LambdaParams,
    LambdaTilde,
    Matrix2,
    circle_distance,
)

PULLBACK_TOL = 1e-10
PULLBACK_DEPTH = 10**4
PULLBACK_MAX_DEPTH = 10**6


class DivergenceError(RuntimeError):
    """An orbit left the declared phase space."""

    def __init__(self, step: int, state):
        super().__init__(f"orbit left the phase space at step {step}: {state!r}")
        self.step = step
        self.state = state


@dataclass
class OrbitTrace:
    """Orbit record; ``fibers`` has shape (n,) or (n, 2)."""

    thetas: np.ndarray
    fibers: np.ndarray
    transient_discarded: int = 0

    @property
    def length(self) -> int:
        return len(self.thetas)

    def __len__(self):
        return self.length

    def fiber_columns(self) -> list[np.ndarray]:
        if self.fibers.ndim == 1:
            return [self.fibers]
        return [self.fibers[:, j] for j in range(self.fibers.shape[1])]


def iterate(m, x0, n: int, transient: int = 0) -> OrbitTrace:
    """Orbit of length n starting after `transient` discarded steps.

    ``x0`` is ``(theta0, xi0)`` with ``xi0`` a float, ``(u, v)`` for Lambda or
    ``(alpha, r)`` for Lambda-tilde.  Circle fibers are reported as lifts.
    """
    if n < 1 or transient < 0:
        raise ValueError("need n >= 1 and transient >= 0")
    theta0, xi0 = x0
    if isinstance(m, LambdaParams):
        u0, v0 = xi0
        th, us, vs = K.lambda_orbit(m.beta, m.gamma, m.omega, float(theta0), float(u0), float(v0), n, transient)
        fib = np.column_stack([us, vs])
        norms = np.hypot(us, vs)
        start = 1 if transient == 0 else 0
        bad = np.flatnonzero(~(norms[start:] <= m.C))
        if bad.size:
            k = int(bad[0]) + start
            raise DivergenceError(transient + k, (th[k], tuple(fib[k])))
        return OrbitTrace(th, fib, transient)
    if isinstance(m, LambdaTilde):
        p = m.params
        a0, r0 = xi0
        th, al, rs = K.lambda_tilde_orbit(p.beta, p.gamma, p.omega, float(theta0), float(a0), float(r0), n, transient)
        if not np.all(np.isfinite(rs)):
            k = int(np.flatnonzero(~np.isfinite(rs))[0])
            raise DivergenceError(transient + k, (th[k], al[k], rs[k]))
        return OrbitTrace(th, np.column_stack([al, rs]), transient)
    if isinstance(m, HermanParams) and m.inverse:
        raise TypeError("iterate the forward cocycle; the inverse form is for graph routines")
    th, xs, bad = K.orbit(m.kind, m.params, m.circle, m.bound, m.omega, float(theta0), float(xi0), n, transient)
    if bad >= 0:
        raise DivergenceError(int(bad), "fiber outside declared bound")
    if m.circle and getattr(m, "shift", 0):
        xs = xs + m.shift * (np.arange(n) + transient)
    return OrbitTrace(th, xs, transient)


class TangentState(NamedTuple):
    p: float
    log_deriv_sum: float
    clamped: int


@dataclass
class TangentTrace:
    """Phase-derivative recursion p_{k+1} = d_theta f + d_xi f * p_k along an orbit."""

    p: np.ndarray
    log_deriv_sum: np.ndarray
    clamped: np.ndarray

    def __len__(self):
        return len(self.p)

    def __getitem__(self, k) -> TangentState:
        return TangentState(float(self.p[k]), float(self.log_deriv_sum[k]), int(self.clamped[k]))

    @property
    def overflowed(self) -> bool:
        return not bool(np.all(np.isfinite(self.p)))


def iterate_tangent(m: FiberMap, x0, n: int) -> TangentTrace:
    """p_k = d xi_k / d theta_0 for k = 0..n with p_0 = 0.

    Exact zeros of d_xi f are clamped to the log of the smallest normal double
    and counted in ``clamped``.
    """
    theta0, xi0 = x0
    p, logs, clamps = K.tangent(m.kind, m.params, m.omega, float(theta0), float(xi0), n)
    return TangentTrace(p, logs, clamps)


@dataclass
class RenormalizedProduct:
    matrix: Matrix2
    log_norm_sum: float
    steps: int


def matrix_cocycle_product(p: HermanParams, theta0: float, n: int) -> RenormalizedProduct:
    """A_n(theta0) = A(theta0 + (n-1) omega) ... A(theta0), kept at unit scale.

    The running product is rescaled by its largest entry at every step; at the
    end the residual 2-norm is folded into ``log_norm_sum`` so that it equals
    log ||A_n(theta0)|| and ``matrix`` has 2-norm 1.
    """
    if n < 1:
        raise ValueError("n must be positive")
    m11, m12, m21, m22, s = K.cocycle_product(p.gamma, p.inverse, p.omega, float(theta0), n)
    mat = Matrix2(m11, m12, m21, m22)
    nrm = mat.norm()
    return RenormalizedProduct(
        Matrix2(m11 / nrm, m12 / nrm, m21 / nrm, m22 / nrm), s + math.log(nrm), n
    )


@dataclass
class PullbackResult:
    value: float
    residual: float
    depth: int
    converged: bool


def _fiber_distance(m, a, b):
    return circle_distance(a, b) if getattr(m, "circle", False) else abs(a - b)


def _pull_once(m: FiberMap, theta: float, depth: int, seed: float) -> float:
    return K.pullback(m.kind, m.params, m.circle, m.omega, float(theta), int(depth), float(seed))


def pullback(m: FiberMap, theta_target: float, depth: int | None = None, seed: float = 1.0,
             tol: float = PULLBACK_TOL, max_depth: int = PULLBACK_MAX_DEPTH) -> PullbackResult:
    """f^depth applied to `seed` on the fiber over theta_target - depth*omega.

    With a fixed `depth` the residual is the change against depth//2.  Without
    one, depth starts at 10**4 and doubles until the residual drops below
    `tol` or `max_depth` is reached; non-convergence is reported, not raised.
    Circle fibers return values in [0, 1).
    """
    if depth is not None:
        if depth < 1:
            raise ValueError("depth must be positive")
        v = _pull_once(m, theta_target, depth, seed)
        h = _pull_once(m, theta_target, max(depth // 2, 1), seed)
        res = _fiber_distance(m, v, h)
        return PullbackResult(v, res, depth, res < tol)
    d = PULLBACK_DEPTH
    h = _pull_once(m, theta_target, d // 2, seed)
    while True:
        v = _pull_once(m, theta_target, d, seed)
        res = _fiber_distance(m, v, h)
        if res < tol or d >= max_depth:
            return PullbackResult(v, res, d, res < tol)
        h = v
        d *= 2


def pullback_grid(m: FiberMap, thetas: np.ndarray, depth: int, seed: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Pullback values at many targets plus their depth vs depth//2 residuals."""
    thetas = np.ascontiguousarray(thetas, dtype=float)
    v = K.pullback_grid(m.kind, m.params, m.circle, m.omega, thetas, int(depth), float(seed))
    h = K.pullback_grid(m.kind, m.params, m.circle, m.omega, thetas, max(int(depth) // 2, 1), float(seed))
    if m.circle:
        d = np.abs(v - h) % 1.0
        res = np.minimum(d, 1.0 - d)
    else:
        res = np.abs(v - h)
    return v, res
