"""Outer IRLS loop: reweight, assemble, PCG-solve, repeat."""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble
from .grid import GradientField, ScalarField
from .pcg import PcgParams, SolverBreakdown, build_preconditioner, pcg_solve
from .weights import WeightParams, compute_weights

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IntegrationParams:
    p: float = 0.0
    epsilon: float = 0.1
    k_max: int = 100
    tol: float = 1e-3
    pcg: PcgParams | None = None  # None: sized from the grid
    seed: int = 0
    init: str = "random"  # or "zero"
    kappa: float = 0.005
    lmax_factor: float = 1.5

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.init not in ("random", "zero"):
            raise ValueError(f"unknown init {self.init!r}")

    def pcg_for(self, n: int) -> PcgParams:
        if self.pcg is not None:
            return self.pcg
        return PcgParams.for_size(n, kappa=self.kappa, lmax_factor=self.lmax_factor)


@dataclass(frozen=True)
class IterationRecord:
    inner_iters: int
    rel_change: float
    pcg_converged: bool
    delta_0: float
    delta: float
    preconditioner: str


@dataclass
class SolveReport:
    outer_iters: int = 0
    total_inner_iters: int = 0
    final_rel_change: float = math.inf
    converged: bool = False
    trace: list[IterationRecord] = field(default_factory=list)
    wall_time: float = 0.0


class IntegrationBreakdown(SolverBreakdown):
    """Solver breakdown raised from inside the outer loop; carries the partial report."""

    def __init__(self, msg, iterate=None, inner_iters=0, report=None, outer_iter=0):
        super().__init__(msg, iterate, inner_iters)
        self.report = report
        self.outer_iter = outer_iter


def initial_guess(psi: GradientField, params: IntegrationParams) -> np.ndarray:
    if params.init == "zero":
        return np.zeros(psi.grid.size)
    rng = np.random.default_rng(params.seed)
    return rng.random(psi.grid.size)


def relative_change(new: np.ndarray, old: np.ndarray) -> float:
    num = float(np.linalg.norm(new - old))
    den = float(np.linalg.norm(old))
    if den == 0.0:
        # a zero previous iterate: fall back to the absolute change
        return num
    return num / den


def _run(psi: GradientField, params: IntegrationParams, wparams: WeightParams,
         reweight: bool) -> tuple[ScalarField, SolveReport]:
    start = time.perf_counter()
    cell = psi.to_cell_units()
    grid = cell.grid
    pcg_params = params.pcg_for(grid.size)
    report = SolveReport()
    phi = initial_guess(cell, params)

    system = precond = None
    error = math.inf
    k = 0
    while k < params.k_max and error > params.tol:
        if system is None or reweight:
            U, V = compute_weights(ScalarField(grid, phi.reshape(grid.shape)), cell, wparams)
            system = assemble(cell, U, V)
            precond = build_preconditioner(system)
        try:
            res = pcg_solve(system, phi, pcg_params, precond)
        except SolverBreakdown as exc:
            report.wall_time = time.perf_counter() - start
            raise IntegrationBreakdown(str(exc), exc.iterate, exc.inner_iters, report, k) from exc
        error = relative_change(res.x, phi)
        if not np.any(phi) and not np.any(res.x):
            error = 0.0
        phi = res.x
        k += 1
        report.trace.append(IterationRecord(res.inner_iters, error, res.converged,
                                            res.delta_0, res.delta, precond.kind))
        report.total_inner_iters += res.inner_iters
        log.debug("outer %d: %d inner, rel change %.3e", k, res.inner_iters, error)

    report.outer_iters = k
    report.final_rel_change = error
    report.converged = error <= params.tol
    values = phi.reshape(grid.shape)
    values = values - values.mean()
    report.wall_time = time.perf_counter() - start
    return ScalarField(psi.grid, values), report


def integrate(psi: GradientField, params: IntegrationParams) -> tuple[ScalarField, SolveReport]:
    """L^p integration of ``psi`` (p < 2) by iteratively reweighted least squares.

    The returned wavefront has zero mean. Gradients are rescaled to cell units
    using the grid spacings before solving, so the result is in the units of
    the gradient data times length.
    """
    wparams = WeightParams(params.p, params.epsilon)
    return _run(psi, params, wparams, reweight=True)


def integrate_least_squares(psi: GradientField,
                            params: IntegrationParams) -> tuple[ScalarField, SolveReport]:
    """p = 2 baseline: constant weights, assembled and factored once.

    The PCG solve is warm-restarted until the relative change meets ``tol``,
    which is the same stopping rule as :func:`integrate` with frozen weights.
    """
    wparams = WeightParams.least_squares(params.epsilon)
    return _run(psi, params, wparams, reweight=False)
