"""Synthetic discontinuous test wavefront, fringe rendering, noise and error metric."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GradientField, Grid, ScalarField, check_same_grid, forward_diff_x, forward_diff_y

MODES = ("discrete", "analytic")


@dataclass(frozen=True)
class SyntheticSpec:
    grid: Grid = Grid(480, 640)
    coord_scale: float = 1.0
    mode: str = "discrete"

    def __post_init__(self):
        if not self.coord_scale > 0:
            raise ValueError("coord_scale must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Sample coordinates on [-1, 1]^2 (before coord_scale), as (x, y) meshes."""
        x = np.linspace(-1.0, 1.0, self.grid.cols)
        y = np.linspace(-1.0, 1.0, self.grid.rows)
        return np.meshgrid(x, y)

    @property
    def cell_size(self) -> tuple[float, float]:
        return 2.0 / (self.grid.cols - 1), 2.0 / (self.grid.rows - 1)


def theta(x, y):
    """Peaks-style surface: sum of three Gaussian-modulated terms."""
    return (15.0 * (1 - x) ** 2 * np.exp(-x ** 2 - (y + 1) ** 2)
            - 50.0 * (x / 5 - x ** 3 - y ** 5) * np.exp(-x ** 2 - y ** 2)
            - 5.0 / 3.0 * np.exp(-(x + 1) ** 2 - y ** 2))


def theta_grad(x, y):
    e1 = np.exp(-x ** 2 - (y + 1) ** 2)
    e2 = np.exp(-x ** 2 - y ** 2)
    e3 = np.exp(-(x + 1) ** 2 - y ** 2)
    g = x / 5 - x ** 3 - y ** 5
    dx = (15.0 * e1 * (-2 * (1 - x) - 2 * x * (1 - x) ** 2)
          - 50.0 * e2 * ((0.2 - 3 * x ** 2) - 2 * x * g)
          + 5.0 / 3.0 * e3 * 2 * (x + 1))
    dy = (15.0 * (1 - x) ** 2 * e1 * (-2 * (y + 1))
          - 50.0 * e2 * (-5 * y ** 4 - 2 * y * g)
          + 5.0 / 3.0 * e3 * 2 * y)
    return dx, dy


def _sign(x):
    return np.where(x >= 0, 1.0, -1.0)


def peaks_wavefront(spec: SyntheticSpec = SyntheticSpec()) -> ScalarField:
    """Theta where x >= 0 and -Theta where x < 0, giving a jump along x = 0."""
    x, y = spec.coordinates()
    s = spec.coord_scale
    return ScalarField(spec.grid, _sign(x) * theta(s * x, s * y))


def gradient_of(phi: ScalarField, mode: str = "discrete",
                spec: SyntheticSpec | None = None) -> GradientField:
    """Gradient data in cell units (unit grid spacing).

    ``discrete``: forward differences of ``phi``; exactly integrable, the jump
    at x = 0 is carried by one column of large differences.
    ``analytic``: the closed-form +-grad(Theta) scaled by the cell size; the
    jump is absent from the data, so it is not integrable across x = 0.
    """
    if mode == "discrete":
        return GradientField(phi.grid, forward_diff_x(phi), forward_diff_y(phi))
    if mode != "analytic":
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if spec is None or spec.grid != phi.grid:
        raise ValueError("analytic gradients need the SyntheticSpec that generated phi")
    if not np.array_equal(peaks_wavefront(spec).values, phi.values):
        raise ValueError("analytic gradients are only defined for the synthetic wavefront")
    x, y = spec.coordinates()
    s = spec.coord_scale
    gx, gy = theta_grad(s * x, s * y)
    hx, hy = spec.cell_size
    sign = _sign(x)
    return GradientField(phi.grid, ScalarField(phi.grid, sign * gx * s * hx),
                         ScalarField(phi.grid, sign * gy * s * hy))


def synthetic_case(spec: SyntheticSpec = SyntheticSpec()) -> tuple[ScalarField, GradientField]:
    phi = peaks_wavefront(spec)
    return phi, gradient_of(phi, spec.mode, spec)


def rms(a: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(a))))


def add_noise(psi: GradientField, level_percent: float, seed: int) -> GradientField:
    """Add white Gaussian noise with sigma = level% of each component's RMS.

    Draws come from one seeded generator, x component first, in row-major
    order, so the result depends only on (seed, grid).
    """
    if level_percent < 0 or not np.isfinite(level_percent):
        raise ValueError("noise level must be a nonnegative number")
    if level_percent == 0:
        return psi
    rng = np.random.default_rng(seed)
    out = []
    for comp in (psi.psi_x, psi.psi_y):
        sigma = level_percent / 100.0 * rms(comp.values)
        out.append(comp.with_values(comp.values + sigma * rng.standard_normal(comp.grid.shape)))
    return GradientField(psi.grid, *out)


def q_error(mu: ScalarField, nu: ScalarField) -> float:
    """||mu - nu|| / (||mu|| + ||nu||); 0 when both fields vanish."""
    check_same_grid(mu, nu)
    den = np.linalg.norm(mu.values) + np.linalg.norm(nu.values)
    if den == 0:
        return 0.0
    return float(np.linalg.norm(mu.values - nu.values) / den)


@dataclass(frozen=True)
class FringeSpec:
    a: float | np.ndarray = 0.5
    b: float | np.ndarray = 0.5
    q: float = 16.0
    v: tuple[float, float] = (1.0, 0.0)
    D: float = 1.0

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError("fringe period q must be positive")
        if abs(np.hypot(*self.v) - 1.0) > 1e-12:
            raise ValueError("fringe direction v must be a unit vector")

    @classmethod
    def at_angle(cls, angle: float, **kw) -> "FringeSpec":
        return cls(v=(float(np.cos(angle)), float(np.sin(angle))), **kw)


def render_fringe(phi: ScalarField, spec: FringeSpec) -> ScalarField:
    """a + b cos(2 pi / q [x.v + D grad(phi).v]) on the grid coordinates
    ``x_j = j h_x``, ``y_i = i h_y``; grad(phi) by forward differences."""
    g = phi.grid
    x = np.arange(g.cols) * g.h_x
    y = np.arange(g.rows) * g.h_y
    xx, yy = np.meshgrid(x, y)
    gx = forward_diff_x(phi).values
    gy = forward_diff_y(phi).values
    vx, vy = spec.v
    arg = (xx * vx + yy * vy) + spec.D * (gx * vx + gy * vy)
    return ScalarField(g, spec.a + spec.b * np.cos(2 * np.pi / spec.q * arg))
