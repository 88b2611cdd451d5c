"""Quasiperiodically forced map families and coordinate changes.

Angles are plain floats measured in turns and kept in [0, 1).  Every map is a
skew product over the rotation theta -> theta + omega; parameter objects are
frozen so they can be shared between worker threads.

Projective convention: a nonzero vector (u, v) has projective angle alpha with
(u, v) = r (cos(pi alpha), sin(pi alpha)) for some real r, so that
cot(pi alpha) = u / v.  Vectors on the u-axis get alpha = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar, NamedTuple

import numpy as np

from . import _kernels as K

GOLDEN_MEAN = (math.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """Input outside the domain of a coordinate change or map."""


def wrap(x: float) -> float:
    """Reduce an angle to [0, 1)."""
    return K.wrap(float(x))


def circle_distance(a: float, b: float) -> float:
    return K.circle_dist(float(a), float(b))


def theta_at(theta0: float, omega: float, n: int) -> float:
    """Base angle after n steps, formed multiplicatively rather than by repeated addition."""
    return K.theta_at(float(theta0), float(omega), int(n))


def check_irrational(omega: float, max_denominator: int = 10**6) -> None:
    """Reject omega equal (to double precision) to p/q with q <= max_denominator."""
    approx = Fraction(omega).limit_denominator(max_denominator)
    if abs(float(approx) - omega) <= 2.0**-52:
        raise DomainError(f"omega={omega!r} is rational ({approx}) to working precision")


def parse_omega(text: str | float) -> float:
    if isinstance(text, str) and text.strip().lower() in ("golden", "golden-mean"):
        return GOLDEN_MEAN
    return wrap(float(text))


class Matrix2(NamedTuple):
    a11: float
    a12: float
    a21: float
    a22: float

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def norm(self) -> float:
        """Operator 2-norm (largest singular value)."""
        return float(np.linalg.norm(self.as_array(), 2))

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    def __matmul__(self, other: Matrix2) -> Matrix2:
        return Matrix2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def apply(self, u: float, v: float) -> tuple[float, float]:
        return self.a11 * u + self.a12 * v, self.a21 * u + self.a22 * v


class FiberState2D(NamedTuple):
    u: float
    v: float


class PolarState(NamedTuple):
    alpha: float
    r: float


# --- one-dimensional fiber families -----------------------------------------

@dataclass(frozen=True)
class FiberMap:
    """Skew product with a one-dimensional fiber (interval or circle)."""

    omega: float = GOLDEN_MEAN

    kind: ClassVar[int]
    circle: ClassVar[bool] = False
    name: ClassVar[str]

    def __post_init__(self):
        check_irrational(self.omega)

    @property
    def params(self) -> np.ndarray:
        return np.zeros(4)

    @property
    def bound(self) -> float:
        """Fibers leaving [-bound, bound] count as divergence (interval fibers only)."""
        return math.inf

    def step(self, theta: float, xi: float) -> tuple[float, float]:
        """One application of the skew product; circle fibers return the lift value."""
        return (
            wrap(theta + self.omega),
            K.fiber_step(self.kind, self.params, float(theta), float(xi)),
        )

    def partials(self, theta: float, xi: float) -> tuple[float, float]:
        """(d/dxi, d/dtheta) of the fiber map."""
        return K.fiber_partials(self.kind, self.params, float(theta), float(xi))

    def describe(self) -> dict:
        d = {"map": self.name, "omega": self.omega}
        d.update({k: getattr(self, k) for k in self.__dataclass_fields__ if k != "omega"})
        return d


@dataclass(frozen=True)
class GopyParams(FiberMap):
    """xi -> B cos(2 pi theta) tanh(xi); pinched at cos(2 pi theta) = 0."""

    B: float = 3.0

    kind: ClassVar[int] = K.GOPY
    name: ClassVar[str] = "gopy"

    def __post_init__(self):
        super().__post_init__()
        if not self.B > 0:
            raise DomainError("B must be positive")

    @property
    def params(self):
        return np.array([self.B, 0.0, 0.0, 0.0])

    @property
    def bound(self):
        return 1e6 * max(self.B, 1.0)

    @property
    def interval(self) -> tuple[float, float]:
        return -self.B, self.B


@dataclass(frozen=True)
class RigidRotation(FiberMap):
    """xi -> xi + c on the circle; `shift` adds an integer to the lift."""

    c: float = 0.25
    shift: int = 0

    kind: ClassVar[int] = K.RIGID
    circle: ClassVar[bool] = True
    name: ClassVar[str] = "rigid"

    @property
    def params(self):
        return np.array([self.c, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class ForcedRotation(FiberMap):
    """xi -> xi + c + eps sin(2 pi theta)."""

    c: float = 0.3
    eps: float = 0.1
    shift: int = 0

    kind: ClassVar[int] = K.FORCED
    circle: ClassVar[bool] = True
    name: ClassVar[str] = "forced-rot"

    @property
    def params(self):
        return np.array([self.c, self.eps, 0.0, 0.0])


@dataclass(frozen=True)
class ShearRotation(FiberMap):
    """xi -> xi + theta; the lift winds once around the fiber as theta runs once around."""

    shift: int = 0

    kind: ClassVar[int] = K.SHEAR
    circle: ClassVar[bool] = True
    name: ClassVar[str] = "shear"


@dataclass(frozen=True)
class RadialMap(FiberMap):
    """r -> a r / (1 + r^2) with a constant coefficient."""

    a: float = 2.0

    kind: ClassVar[int] = K.RADIAL
    name: ClassVar[str] = "radial"

    @property
    def params(self):
        return np.array([self.a, 0.0, 0.0, 0.0])

    @property
    def bound(self):
        return 1e6


@dataclass(frozen=True)
class HermanParams(FiberMap):
    """Projective action of A(theta) = diag(gamma^-1/2, gamma^1/2) R_theta.

    As a circle map the fiber coordinate is the projective angle alpha.  With
    ``inverse=True`` the object describes the inverse cocycle
    (theta, v) -> (theta - omega, A(theta - omega)^-1 v); only the projective
    graph and product routines accept that form.
    """

    gamma: float = 0.5
    inverse: bool = False
    shift: int = 0

    kind: ClassVar[int] = K.HERMAN
    circle: ClassVar[bool] = True
    name: ClassVar[str] = "herman"

    def __post_init__(self):
        super().__post_init__()
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")

    @property
    def params(self):
        return np.array([self.gamma, 0.0, 0.0, 0.0])

    @property
    def rotation(self) -> float:
        return -self.omega if self.inverse else self.omega

    def inverse_cocycle(self) -> HermanParams:
        return HermanParams(omega=self.omega, gamma=self.gamma, inverse=not self.inverse)

    def step(self, theta, xi):
        if self.inverse:
            return wrap(theta - self.omega), herman_projective_step(theta, xi, self)
        return super().step(theta, xi)


# --- two-dimensional fibers ---------------------------------------------------

@dataclass(frozen=True)
class LambdaParams:
    """(theta, xi) -> (theta + omega, beta / (1 + |xi|^2) diag(1, gamma) R_theta xi)."""

    beta: float = 2.0
    gamma: float = 0.5
    omega: float = GOLDEN_MEAN
    C: float = field(default=1.0)

    name: ClassVar[str] = "lambda"

    def __post_init__(self):
        check_irrational(self.omega)
        if not 1.0 < self.beta <= 2.0:
            raise DomainError("beta must lie in (1, 2]")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError("gamma must lie in (0, 1)")
        if self.beta * self.gamma < 1.0:
            raise DomainError("beta * gamma must be at least 1")
        if self.C != 1.0:
            raise DomainError("the phase-space radius C is fixed to 1")

    @property
    def herman(self) -> HermanParams:
        return HermanParams(omega=self.omega, gamma=self.gamma)

    def describe(self) -> dict:
        return {"map": self.name, "beta": self.beta, "gamma": self.gamma,
                "omega": self.omega, "C": self.C}


@dataclass(frozen=True)
class LambdaTilde:
    """The projective-polar factor of Lambda, acting on (theta, alpha, r)."""

    params: LambdaParams = field(default_factory=LambdaParams)

    name: ClassVar[str] = "lambda-tilde"

    @property
    def omega(self) -> float:
        return self.params.omega

    def describe(self) -> dict:
        return dict(self.params.describe(), map=self.name)


# --- operations -----------------------------------------------------------------

def gopy_step(theta: float, xi: float, p: GopyParams) -> tuple[float, float]:
    return p.step(theta, xi)


def gopy_partials(theta: float, xi: float, p: GopyParams) -> tuple[float, float]:
    return p.partials(theta, xi)


def herman_matrix(theta: float, p: HermanParams) -> Matrix2:
    """A(theta) = diag(gamma^-1/2, gamma^1/2) R_theta."""
    if not p.gamma > 0:
        raise DomainError("gamma must be positive")
    return Matrix2(*K.herman_mat(p.gamma, False, p.omega, float(theta)))


def projective_angle(u: float, v: float) -> float:
    if u == 0.0 and v == 0.0:
        raise DomainError("projective angle of the zero vector")
    return K.proj_angle(float(u), float(v))


def unfactor(theta: float, alpha: float, r: float) -> tuple[FiberState2D, FiberState2D]:
    """The two antipodal fiber points over (theta, alpha, r)."""
    if not r > 0:
        raise DomainError("radius must be positive")
    u = r * math.cos(math.pi * alpha)
    v = r * math.sin(math.pi * alpha)
    return FiberState2D(u, v), FiberState2D(-u, -v)


def factor_map(theta: float, xi) -> tuple[float, PolarState]:
    u, v = xi
    if u == 0.0 and v == 0.0:
        raise DomainError("factor map is undefined on the 0-line")
    return theta, PolarState(projective_angle(u, v), math.hypot(u, v))


def lambda_step(theta: float, xi, p: LambdaParams) -> tuple[float, FiberState2D]:
    u, v = xi
    return wrap(theta + p.omega), FiberState2D(*K.lambda_step(p.beta, p.gamma, float(theta), float(u), float(v)))


def herman_projective_step(theta: float, alpha: float, p: HermanParams) -> float:
    return K.proj_fwd(p.gamma, p.inverse, p.omega, float(theta), float(alpha))


def a_coeff(theta: float, alpha: float, p: LambdaParams) -> float:
    """Radial gain |beta diag(1, gamma) R_theta (cos pi alpha, sin pi alpha)|."""
    return K.a_coeff(p.beta, p.gamma, float(theta), float(alpha))


def b_map(r: float) -> tuple[float, float]:
    """b(r) = r / (1 + r^2) and its derivative."""
    q = 1.0 + r * r
    return r / q, (1.0 - r * r) / (q * q)


def lambda_tilde_step(theta: float, s: PolarState, p: LambdaParams) -> tuple[float, PolarState]:
    alpha, r = s
    a2, r2 = K.lambda_tilde_step(p.beta, p.gamma, p.omega, float(theta), float(alpha), float(r))
    return wrap(theta + p.omega), PolarState(a2, r2)


def polar_distance(x: tuple[float, PolarState], y: tuple[float, PolarState]) -> float:
    """Max-metric on T^2 x [0, 1] (circle distance in theta and alpha)."""
    (t1, s1), (t2, s2) = x, y
    return max(circle_distance(t1, t2), circle_distance(s1.alpha, s2.alpha), abs(s1.r - s2.r))


MAP_NAMES = ("gopy", "herman", "lambda", "lambda-tilde", "rigid", "forced-rot", "shear", "radial")


def make_map(name: str, *, omega: float = GOLDEN_MEAN, B: float = 3.0, beta: float = 2.0,
             gamma: float = 0.5, c: float | None = None, eps: float = 0.1, a: float = 2.0):
    """Build a map object from CLI-style parameters."""
    if name == "gopy":
        return GopyParams(omega=omega, B=B)
    if name == "herman":
        return HermanParams(omega=omega, gamma=gamma)
    if name == "lambda":
        return LambdaParams(beta=beta, gamma=gamma, omega=omega)
    if name == "lambda-tilde":
        return LambdaTilde(LambdaParams(beta=beta, gamma=gamma, omega=omega))
    if name == "rigid":
        return RigidRotation(omega=omega, c=0.25 if c is None else c)
    if name == "forced-rot":
        return ForcedRotation(omega=omega, c=0.3 if c is None else c, eps=eps)
    if name == "shear":
        return ShearRotation(omega=omega)
    if name == "radial":
        return RadialMap(omega=omega, a=a)
    raise DomainError(f"unknown map {name!r}")
