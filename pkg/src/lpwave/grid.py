"""Discrete domain, scalar fields and gradient fields.

Index convention: ``values[i, j]`` with ``i`` the row (y direction) and ``j``
the column (x direction). The 1-based sample ``(x_i, y_j)`` of the usual
finite-difference notation corresponds to ``values[j - 1, i - 1]`` here; the
x-difference operator steps the column index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridMismatchError(ValueError):
    """Two fields that must share a grid do not."""


@dataclass(frozen=True)
class Grid:
    rows: int
    cols: int
    h_x: float = 1.0
    h_y: float = 1.0

    def __post_init__(self):
        if int(self.rows) != self.rows or int(self.cols) != self.cols:
            raise ValueError("grid dimensions must be integers")
        if self.rows < 2 or self.cols < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.rows}x{self.cols}")
        if not (self.h_x > 0 and self.h_y > 0):
            raise ValueError("grid spacings must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def size(self) -> int:
        return self.rows * self.cols


def _frozen(values, grid: Grid) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != grid.shape:
        raise ValueError(f"values of shape {arr.shape} do not fit grid {grid.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """M x N float64 samples on a grid. Values are copied and made read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid))

    @classmethod
    def from_array(cls, values, h_x: float = 1.0, h_y: float = 1.0) -> "ScalarField":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("expected a 2-D array")
        return cls(Grid(values.shape[0], values.shape[1], h_x, h_y), values)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def ravel(self) -> np.ndarray:
        """Row-major vector, linear index ``k = i * cols + j``."""
        return self.values.ravel()

    def mean(self) -> float:
        return float(self.values.mean())


@dataclass(frozen=True, eq=False)
class GradientField:
    grid: Grid
    psi_x: ScalarField
    psi_y: ScalarField

    def __post_init__(self):
        if self.psi_x.grid != self.grid or self.psi_y.grid != self.grid:
            raise GridMismatchError("gradient components must share the field grid")

    @classmethod
    def from_arrays(cls, psi_x, psi_y, h_x: float = 1.0, h_y: float = 1.0) -> "GradientField":
        gx = ScalarField.from_array(psi_x, h_x, h_y)
        gy = ScalarField.from_array(psi_y, h_x, h_y)
        return cls(gx.grid, gx, gy)

    def to_cell_units(self) -> "GradientField":
        """Rescale physical derivatives to per-cell differences on a unit grid."""
        g = self.grid
        unit = Grid(g.rows, g.cols)
        return GradientField(
            unit,
            ScalarField(unit, self.psi_x.values * g.h_x),
            ScalarField(unit, self.psi_y.values * g.h_y),
        )


def check_same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise GridMismatchError(f"grid mismatch: {grid} vs {f.grid}")
    return grid


def forward_diff_x(f: ScalarField) -> ScalarField:
    """(f[i, j+1] - f[i, j]) / h_x, with the last column set to 0."""
    out = np.zeros(f.grid.shape)
    out[:, :-1] = np.diff(f.values, axis=1) / f.grid.h_x
    return f.with_values(out)


def forward_diff_y(f: ScalarField) -> ScalarField:
    """(f[i+1, j] - f[i, j]) / h_y, with the last row set to 0."""
    out = np.zeros(f.grid.shape)
    out[:-1, :] = np.diff(f.values, axis=0) / f.grid.h_y
    return f.with_values(out)


def gradient(f: ScalarField) -> GradientField:
    return GradientField(f.grid, forward_diff_x(f), forward_diff_y(f))


def mean_align(f: ScalarField, ref: ScalarField) -> ScalarField:
    """Shift ``f`` by a constant so that its mean equals the mean of ``ref``."""
    check_same_grid(f, ref)
    shift = ref.mean() - f.mean()
    # shifts at summation-rounding level are skipped, so re-aligning an
    # aligned field returns it unchanged
    scale = float(np.abs(f.values).max()) + abs(ref.mean())
    if abs(shift) <= 64 * np.finfo(np.float64).eps * scale:
        return f
    return f.with_values(f.values + shift)
