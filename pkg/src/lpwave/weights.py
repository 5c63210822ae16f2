"""Data-dependent IRLS weights for the L^p gradient-fitting energy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GradientField, ScalarField, check_same_grid


@dataclass(frozen=True)
class WeightParams:
    p: float
    epsilon: float = 0.1
    baseline: bool = False  # admits p == 2 (constant weights)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not np.isfinite(self.p):
            raise ValueError("p must be finite")
        if self.baseline:
            if self.p != 2:
                raise ValueError("the least-squares baseline requires p == 2")
        elif not self.p < 2:
            raise ValueError(f"IRLS requires p < 2, got p={self.p}")

    @classmethod
    def least_squares(cls, epsilon: float = 0.1) -> "WeightParams":
        return cls(2.0, epsilon, baseline=True)


def residual_weight(r: np.ndarray, p: float, epsilon: float) -> np.ndarray:
    """eps / (|r|^(2-p) + eps), with the r == 0 branch pinned to 1."""
    a = np.abs(np.asarray(r, dtype=np.float64))
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("non-finite residual in weight computation")
    expo = 2.0 - p
    if expo == 0.0:
        return np.full(a.shape, epsilon / (1.0 + epsilon))
    pos = a > 0
    powed = np.zeros_like(a)
    powed[pos] = np.exp(expo * np.log(a[pos]))
    w = epsilon / (powed + epsilon)
    w[~pos] = 1.0
    return w


def compute_weights(phi: ScalarField, psi: GradientField,
                    params: WeightParams) -> tuple[ScalarField, ScalarField]:
    """Return the horizontal (U) and vertical (V) edge weights.

    ``U[i, j]`` weights the edge between cells (i, j) and (i, j+1) and is 0 in
    the last column; ``V[i, j]`` weights the edge to (i+1, j) and is 0 in the
    last row. The zeros stand for the natural boundary condition.
    """
    check_same_grid(phi, psi)
    f = phi.values
    u = np.zeros(f.shape)
    v = np.zeros(f.shape)
    rx = f[:, 1:] - f[:, :-1] - psi.psi_x.values[:, :-1]
    ry = f[1:, :] - f[:-1, :] - psi.psi_y.values[:-1, :]
    u[:, :-1] = residual_weight(rx, params.p, params.epsilon)
    v[:-1, :] = residual_weight(ry, params.p, params.epsilon)
    return phi.with_values(u), phi.with_values(v)
