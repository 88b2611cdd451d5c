"""Sampled invariant graphs on a uniform theta grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_GRID = 256


def bin_centers(grid_size: int) -> np.ndarray:
    return (np.arange(grid_size) + 0.5) / grid_size


def check_grid(grid_size: int) -> None:
    if grid_size < MIN_GRID or grid_size & (grid_size - 1):
        raise ValueError(f"grid size must be a power of two >= {MIN_GRID}, got {grid_size}")


@dataclass
class GraphTable:
    """theta -> value, one value per bin, evaluated at the bin center.

    Lookup is piecewise constant on bins: the graphs we store are typically
    non-continuous and interpolating across bins would invent regularity.
    ``residuals`` holds the pullback convergence residual of each bin and
    ``invariance`` the one-step invariance residual where it was measured.
    ``source`` records how the graph was produced, so routines that need the
    graph along an orbit can re-evaluate it exactly instead of via the table.
    """

    values: np.ndarray
    residuals: np.ndarray
    circle: bool = False
    invariance: np.ndarray | None = None
    source: dict = field(default_factory=dict)
    trusted: bool = True
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        check_grid(len(self.values))
        if len(self.residuals) != len(self.values):
            raise ValueError("one residual per bin is required")

    @property
    def grid_size(self) -> int:
        return len(self.values)

    @property
    def centers(self) -> np.ndarray:
        return bin_centers(self.grid_size)

    def bin_of(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float) % 1.0
        return np.minimum((t * self.grid_size).astype(np.int64), self.grid_size - 1)

    def __call__(self, theta):
        return self.values[self.bin_of(theta)]

    def converged_fraction(self, tol: float = 1e-10) -> float:
        return float(np.mean(self.residuals < tol))

    def invariant_fraction(self, tol: float) -> float:
        if self.invariance is None:
            return float("nan")
        return float(np.mean(self.invariance < tol))
