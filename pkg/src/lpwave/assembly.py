"""Sparse assembly of the weighted normal equations ``A phi = b``.

Unknowns are ordered row-major (``k = i * cols + j``). Each row of ``A`` has at
most five entries, in ascending column order: north (k - cols), west (k - 1),
self, east (k + 1), south (k + cols). Grid spacing is taken as 1; callers pass
gradients already expressed in cell units.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .grid import GradientField, Grid, ScalarField, check_same_grid


@dataclass(frozen=True, eq=False)
class SparseSystem:
    grid: Grid
    matrix: sp.csr_matrix
    rhs: np.ndarray

    @property
    def n(self) -> int:
        return self.grid.size


@lru_cache(maxsize=8)
def stencil_pattern(rows: int, cols: int):
    """CSR structure of the 5-point stencil, shared by every assembly on a grid.

    Returns ``(indptr, indices, slot, owner)`` where ``slot`` tells which of the
    five stencil arms (0=N, 1=W, 2=C, 3=E, 4=S) each stored entry holds and
    ``owner`` is its row.
    """
    n = rows * cols
    present = np.zeros((5, rows, cols), dtype=bool)
    present[0, 1:, :] = True
    present[1, :, 1:] = True
    present[2] = True
    present[3, :, :-1] = True
    present[4, :-1, :] = True
    offsets = np.array([-cols, -1, 0, 1, cols])

    flat = present.reshape(5, n)
    counts = flat.sum(axis=0)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    # entries of each row sorted by arm, i.e. by column
    arm, owner = np.nonzero(flat)
    order = np.lexsort((arm, owner))
    arm, owner = arm[order], owner[order]
    indices = (owner + offsets[arm]).astype(np.int32)
    for a in (indptr, indices, arm, owner):
        a.setflags(write=False)
    return indptr, indices, arm, owner


def stencil_arms(U: ScalarField, V: ScalarField) -> np.ndarray:
    """Matrix values per stencil arm, shape (5, M*N)."""
    u, v = U.values, V.values
    rows, cols = u.shape
    arms = np.zeros((5, rows, cols))
    arms[0, 1:, :] = -v[:-1, :]
    arms[1, :, 1:] = -u[:, :-1]
    arms[3] = -u
    arms[4] = -v
    arms[2] = -(arms[0] + arms[1] + arms[3] + arms[4])
    return arms.reshape(5, rows * cols)


def assemble(psi: GradientField, U: ScalarField, V: ScalarField) -> SparseSystem:
    """Build ``A`` and ``b`` for fixed weights.

    Row (i, j) reads
    ``(U[i,j-1] + U[i,j] + V[i-1,j] + V[i,j]) phi[i,j]
    - U[i,j] phi[i,j+1] - U[i,j-1] phi[i,j-1] - V[i,j] phi[i+1,j] - V[i-1,j] phi[i-1,j]
    = Px[i,j-1] U[i,j-1] - Px[i,j] U[i,j] + Py[i-1,j] V[i-1,j] - Py[i,j] V[i,j]``
    with out-of-range terms dropped.
    """
    grid = check_same_grid(psi, U, V)
    u, v = U.values, V.values
    if np.any(u < 0) or np.any(v < 0):
        raise ValueError("weights must be nonnegative")
    indptr, indices, arm, owner = stencil_pattern(grid.rows, grid.cols)
    data = stencil_arms(U, V)[arm, owner]
    matrix = sp.csr_matrix((data, indices, indptr), shape=(grid.size, grid.size))

    fx = psi.psi_x.values * u
    fy = psi.psi_y.values * v
    b = -fx - fy
    b[:, 1:] += fx[:, :-1]
    b[1:, :] += fy[:-1, :]
    return SparseSystem(grid, matrix, b.ravel())


def apply(system: SparseSystem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (system.n,):
        raise ValueError(f"expected a vector of length {system.n}, got shape {x.shape}")
    return system.matrix @ x
