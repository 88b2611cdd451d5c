"""Simulation and diagnostics for quasiperiodically forced skew products."""

from .maps import (
    GOLDEN_MEAN,
    DomainError,
    ForcedRotation,
    GopyParams,
    HermanParams,
    LambdaParams,
    LambdaTilde,
    Matrix2,
    RigidRotation,
    ShearRotation,
)
from .orbit import iterate, iterate_tangent, matrix_cocycle_product, pullback
from .report import DiagnosticsReport, __version__

__all__ = [
    "GOLDEN_MEAN", "DomainError", "ForcedRotation", "GopyParams", "HermanParams", "LambdaParams",
    "LambdaTilde", "Matrix2", "RigidRotation", "ShearRotation", "iterate", "iterate_tangent",
    "matrix_cocycle_product", "pullback", "DiagnosticsReport", "__version__",
]
