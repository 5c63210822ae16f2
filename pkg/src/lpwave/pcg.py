"""Preconditioned conjugate gradient with an ILU(0) preconditioner.

The inner loop follows the classic Shewchuk formulation: the residual is
updated recursively and replaced by the exact ``b - A x`` every
``restart_period`` iterations (and at iteration 0). Iteration stops once the
preconditioned residual energy ``r^T M^-1 r`` has dropped to
``kappa**2`` times its initial value, or after ``l_max`` iterations.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
import scipy.sparse as sp

from .assembly import SparseSystem

log = logging.getLogger(__name__)

PIVOT_GUARD = 1e-12
# |d^T A d| below ROUNDOFF * max|diag A| * ||d||^2 is treated as rounding noise
ROUNDOFF = 1e-13


class PreconditionerBreakdown(ArithmeticError):
    pass


class SolverBreakdown(ArithmeticError):
    """PCG lost positive definiteness or produced non-finite values.

    ``iterate`` holds the last finite iterate, ``inner_iters`` the count at failure.
    """

    def __init__(self, msg, iterate=None, inner_iters=0):
        super().__init__(msg)
        self.iterate = iterate
        self.inner_iters = inner_iters


@dataclass(frozen=True)
class PcgParams:
    l_max: int
    kappa: float = 0.005
    restart_period: int = 1

    def __post_init__(self):
        if self.l_max < 1:
            raise ValueError("l_max must be >= 1")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must lie in (0, 1)")
        if self.restart_period < 1:
            raise ValueError("restart_period must be >= 1")

    @classmethod
    def for_size(cls, n: int, kappa: float = 0.005, lmax_factor: float = 1.5,
                 restart_period: int | None = None) -> "PcgParams":
        """Defaults for an ``n``-unknown system: l_max = floor(1.5 n), restart every floor(sqrt(n))."""
        if restart_period is None:
            restart_period = max(1, math.isqrt(n))
        return cls(max(1, int(math.floor(lmax_factor * n))), kappa, restart_period)


@numba.njit(cache=True)
def _ilu0_inplace(indptr, indices, data, diag, threshold):
    n = indptr.size - 1
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            pos[indices[p]] = p
        for p in range(indptr[i], diag[i]):
            k = indices[p]
            data[p] /= data[diag[k]]
            lik = data[p]
            for q in range(diag[k] + 1, indptr[k + 1]):
                t = pos[indices[q]]
                if t >= 0:
                    data[t] -= lik * data[q]
        piv = data[diag[i]]
        if abs(piv) < threshold:
            data[diag[i]] = threshold
        for p in range(indptr[i], indptr[i + 1]):
            pos[indices[p]] = -1


@numba.njit(cache=True)
def _lu_solve(indptr, indices, data, diag, r, out):
    n = indptr.size - 1
    for i in range(n):
        acc = r[i]
        for p in range(indptr[i], diag[i]):
            acc -= data[p] * out[indices[p]]
        out[i] = acc
    for i in range(n - 1, -1, -1):
        acc = out[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            acc -= data[p] * out[indices[p]]
        out[i] = acc / data[diag[i]]
    return out


class Preconditioner:
    """ILU(0) factors stored in one CSR array (unit-lower L strictly below the
    diagonal, U on and above), or a Jacobi fallback when ``lu`` is None."""

    def __init__(self, lu: sp.csr_matrix | None, diag_ptr=None, jacobi=None):
        self.lu = lu
        self.diag_ptr = diag_ptr
        self.jacobi = jacobi

    @property
    def kind(self) -> str:
        return "ilu0" if self.lu is not None else "jacobi"

    @property
    def L(self) -> sp.csr_matrix:
        n = self.lu.shape[0]
        return (sp.tril(self.lu, k=-1) + sp.identity(n)).tocsr()

    @property
    def U(self) -> sp.csr_matrix:
        return sp.triu(self.lu).tocsr()

    def solve(self, r: np.ndarray) -> np.ndarray:
        """Return ``M^-1 r``."""
        if self.lu is None:
            return r * self.jacobi
        out = np.empty_like(r)
        lu = self.lu
        return _lu_solve(lu.indptr, lu.indices, lu.data, self.diag_ptr,
                         np.ascontiguousarray(r, dtype=np.float64), out)


def _as_csr(system) -> sp.csr_matrix:
    A = system.matrix if isinstance(system, SparseSystem) else system
    A = sp.csr_matrix(A, dtype=np.float64, copy=True)
    A.sum_duplicates()
    A.sort_indices()
    return A


def build_ilu0(system) -> Preconditioner:
    """Incomplete LU factorization restricted to the sparsity pattern of ``A``.

    Pivots smaller than ``1e-12 * max(diag(A))`` in magnitude are replaced by
    that threshold; ``A`` is singular (constants span its null space), so a
    tiny last pivot is expected. Raises :class:`PreconditionerBreakdown` when
    the diagonal is missing, nonpositive throughout, or the factors blow up.
    """
    A = _as_csr(system)
    n = A.shape[0]
    diag_vals = A.diagonal()
    dmax = float(diag_vals.max()) if n else 0.0
    if not dmax > 0:
        raise PreconditionerBreakdown("matrix has no positive diagonal entry")
    diag_ptr = np.full(n, -1, dtype=np.int64)
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    hit = A.indices == rows
    diag_ptr[rows[hit]] = np.nonzero(hit)[0]
    if np.any(diag_ptr < 0):
        raise PreconditionerBreakdown("diagonal entry missing from sparsity pattern")
    _ilu0_inplace(A.indptr.astype(np.int64), A.indices.astype(np.int64),
                  A.data, diag_ptr, PIVOT_GUARD * dmax)
    if not np.all(np.isfinite(A.data)):
        raise PreconditionerBreakdown("non-finite entries in ILU(0) factors")
    A.indptr = A.indptr.astype(np.int64)
    A.indices = A.indices.astype(np.int64)
    return Preconditioner(A, diag_ptr)


def build_jacobi(system) -> Preconditioner:
    d = _as_csr(system).diagonal()
    inv = np.ones_like(d)
    pos = d > 0
    inv[pos] = 1.0 / d[pos]
    return Preconditioner(None, jacobi=inv)


def build_preconditioner(system) -> Preconditioner:
    try:
        return build_ilu0(system)
    except PreconditionerBreakdown as exc:
        log.warning("ILU(0) breakdown (%s); falling back to Jacobi", exc)
        return build_jacobi(system)


class PcgResult(NamedTuple):
    x: np.ndarray
    inner_iters: int
    converged: bool
    delta_0: float
    delta: float  # final preconditioned residual energy, from an exact residual when converged


def pcg_solve(system: SparseSystem, x0, params: PcgParams,
              precond: Preconditioner | None = None) -> PcgResult:
    A = system.matrix
    b = system.rhs
    x = np.array(x0, dtype=np.float64, copy=True)
    if x.shape != b.shape:
        raise ValueError(f"x0 has shape {x.shape}, expected {b.shape}")
    M = precond if precond is not None else build_preconditioner(system)

    r = b - A @ x
    d = M.solve(r)
    delta_new = float(r @ d)
    delta_0 = delta_new
    if not math.isfinite(delta_0):
        raise SolverBreakdown("non-finite initial residual", x, 0)
    if delta_0 == 0.0:
        return PcgResult(x, 0, True, 0.0, 0.0)
    target = params.kappa ** 2 * delta_0

    diag_scale = float(np.abs(A.diagonal()).max(initial=0.0))
    l = 0
    while True:
        while l < params.l_max and delta_new > target:
            q = A @ d
            dq = float(d @ q)
            roundoff = ROUNDOFF * diag_scale * float(d @ d)
            if not dq > roundoff:
                if math.isfinite(dq) and dq >= -roundoff:
                    # curvature lost in rounding: no further progress possible
                    log.debug("PCG stagnated at l=%d (d^T A d = %g)", l, dq)
                    break
                raise SolverBreakdown(f"d^T A d = {dq:g} is not positive", x, l)
            alpha = delta_new / dq
            x += alpha * d
            if l % params.restart_period == 0:
                r = b - A @ x
            else:
                r -= alpha * q
            s = M.solve(r)
            delta_old = delta_new
            delta_new = float(r @ s)
            if not math.isfinite(delta_new):
                raise SolverBreakdown("non-finite residual energy", x, l + 1)
            d = s + (delta_new / delta_old) * d
            l += 1
        if delta_new > target:
            break
        # the recursive residual may have drifted; confirm with the true one
        r = b - A @ x
        s = M.solve(r)
        delta_new = float(r @ s)
        if delta_new <= target or l >= params.l_max:
            break
        log.debug("recursive residual drift at l=%d, restarting from exact residual", l)
        d = s
    return PcgResult(x, l, delta_new <= target, delta_0, delta_new)
