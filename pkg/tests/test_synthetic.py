import math

import numpy as np
import pytest

from lpwave.grid import GradientField, Grid, ScalarField, forward_diff_x
from lpwave.synthetic import (FringeSpec, SyntheticSpec, add_noise, gradient_of, peaks_wavefront,
                              q_error, render_fringe, rms, synthetic_case, theta, theta_grad)

from oracles import central_difference


def test_theta_at_origin():
    # 15 e^-1 - 50 * 0 - 5/3 e^-1
    assert theta(0.0, 0.0) == pytest.approx((15 - 5 / 3) * math.exp(-1), rel=1e-14)
    assert theta(0.0, 0.0) == pytest.approx(4.90506, abs=1e-5)


def test_wavefront_at_origin_sample():
    spec = SyntheticSpec(Grid(5, 5))  # x = y = 0 is the centre sample
    phi = peaks_wavefront(spec)
    assert phi.values[2, 2] == pytest.approx(4.905059, abs=1e-6)


def test_sign_rule_at_every_sample():
    spec = SyntheticSpec(Grid(31, 40))
    x, y = spec.coordinates()
    phi = peaks_wavefront(spec).values
    th = theta(x, y)
    assert np.array_equal(phi[x >= 0], th[x >= 0])
    assert np.array_equal(phi[x < 0], -th[x < 0])
    assert np.all(phi[x < 0] * th[x < 0] <= 0)


def test_orientation_rows_are_y():
    spec = SyntheticSpec(Grid(3, 7))
    x, y = spec.coordinates()
    assert np.all(x[:, 0] == -1) and np.all(x[:, -1] == 1)
    assert np.all(y[0] == -1) and np.all(y[-1] == 1)


def test_corners_vanish_with_coord_scale_3():
    # hand bounds at |x| = |y| = 3 for each Gaussian-modulated term
    bound = (15 * 16 * math.exp(-13) + 50 * (0.6 + 27 + 243) * math.exp(-18)
             + 5 / 3 * math.exp(-13))
    phi = peaks_wavefront(SyntheticSpec(Grid(9, 11), coord_scale=3.0)).values
    for v in (phi[0, 0], phi[0, -1], phi[-1, 0], phi[-1, -1]):
        assert abs(v) < bound < 1e-3


def test_theta_gradient_against_central_differences(rng):
    pts = rng.uniform(-3, 3, size=(50, 2))
    for x, y in pts:
        gx, gy = theta_grad(x, y)
        fx, fy = central_difference(theta, x, y)
        assert gx == pytest.approx(fx, abs=1e-6)
        assert gy == pytest.approx(fy, abs=1e-6)


def test_discrete_mode_is_forward_difference():
    spec = SyntheticSpec(Grid(12, 16))
    phi, psi = synthetic_case(spec)
    assert np.array_equal(psi.psi_x.values, forward_diff_x(phi).values)
    assert np.all(psi.psi_x.values[:, -1] == 0)
    assert np.all(psi.psi_y.values[-1, :] == 0)


def test_discrete_gradient_cumsum_reconstructs_wavefront():
    spec = SyntheticSpec(Grid(20, 26))
    phi, psi = synthetic_case(spec)
    gx, gy = psi.psi_x.values, psi.psi_y.values
    row0 = phi.values[0, 0] + np.concatenate([[0], np.cumsum(gx[0, :-1])])
    rebuilt = row0[None, :] + np.vstack([np.zeros((1, 26)), np.cumsum(gy[:-1], axis=0)])
    np.testing.assert_allclose(rebuilt, phi.values, atol=1e-12)


def test_analytic_mode_matches_discrete_away_from_jump():
    spec = SyntheticSpec(Grid(200, 260), mode="analytic")
    phi = peaks_wavefront(spec)
    a = gradient_of(phi, "analytic", spec)
    d = gradient_of(phi, "discrete")
    x, _ = spec.coordinates()
    hx, hy = spec.cell_size
    # forward differences are first-order accurate: error <= h^2/2 * max|f''| per cell.
    # max second derivative of Theta on [-1,1]^2 is below 200 (checked by the
    # central-difference estimate below), giving an O(h^2) per-cell bound.
    xs = np.linspace(-1, 1, 401)
    X, Y = np.meshgrid(xs, xs)
    h = 1e-4
    fxx = (theta(X + h, Y) - 2 * theta(X, Y) + theta(X - h, Y)) / h ** 2
    fyy = (theta(X, Y + h) - 2 * theta(X, Y) + theta(X, Y - h)) / h ** 2
    cxx, cyy = np.abs(fxx).max() * 1.1, np.abs(fyy).max() * 1.1
    # away from x = 0 and excluding the unused last column/row
    mask = np.abs(x) > 0.1
    mask_x = mask.copy()
    mask_x[:, -1] = False
    mask_x[:, :-1] &= mask[:, 1:]
    mask_y = mask.copy()
    mask_y[-1, :] = False
    ex = np.abs(a.psi_x.values - d.psi_x.values)[mask_x].max()
    ey = np.abs(a.psi_y.values - d.psi_y.values)[mask_y].max()
    assert ex <= cxx * hx ** 2 / 2
    assert ey <= cyy * hy ** 2 / 2


def test_analytic_gradient_near_zero_far_from_bumps():
    spec = SyntheticSpec(Grid(60, 60), coord_scale=3.0, mode="analytic")
    _, psi = synthetic_case(spec)
    assert abs(psi.psi_x.values[0, 0]) < 1e-3 and abs(psi.psi_y.values[0, 0]) < 1e-3


def test_analytic_mode_requires_synthetic_field():
    spec = SyntheticSpec(Grid(8, 8), mode="analytic")
    with pytest.raises(ValueError):
        gradient_of(ScalarField.from_array(np.zeros((8, 8))), "analytic", spec)
    with pytest.raises(ValueError):
        gradient_of(peaks_wavefront(spec), "analytic", None)
    with pytest.raises(ValueError):
        gradient_of(peaks_wavefront(spec), "spline", spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(Grid(4, 4), coord_scale=0)
    with pytest.raises(ValueError):
        SyntheticSpec(Grid(4, 4), mode="exact")


def test_noise_level_zero_is_identity(rng):
    psi = GradientField.from_arrays(rng.normal(size=(5, 5)), rng.normal(size=(5, 5)))
    assert add_noise(psi, 0, 1) is psi
    with pytest.raises(ValueError):
        add_noise(psi, -1, 1)


def test_noise_statistics():
    _, psi = synthetic_case(SyntheticSpec())
    outs = [add_noise(psi, 3, s) for s in (1, 2)]
    n = psi.grid.size
    for comp in ("psi_x", "psi_y"):
        base = getattr(psi, comp).values
        target = 0.03 * rms(base)
        sigmas = []
        for out in outs:
            noise = getattr(out, comp).values - base
            sigmas.append(noise.std())
            assert abs(noise.std() - target) <= 0.05 * target
            assert abs(noise.mean()) <= 3 * target / math.sqrt(n)
        assert abs(sigmas[0] - sigmas[1]) <= 0.05 * target
    assert not np.array_equal(outs[0].psi_x.values, outs[1].psi_x.values)
    again = add_noise(psi, 3, 1)
    assert np.array_equal(again.psi_x.values, outs[0].psi_x.values)


def test_q_error_examples(rng):
    mu = ScalarField.from_array(rng.normal(size=(4, 6)))
    assert q_error(mu, mu) == 0
    assert q_error(mu, mu.with_values(-mu.values)) == pytest.approx(1.0, abs=1e-15)
    two = ScalarField.from_array([[3.0, 4.0], [0.0, 0.0]])
    assert q_error(two, two.with_values(np.zeros((2, 2)))) == 1.0
    z = ScalarField.from_array(np.zeros((2, 2)))
    assert q_error(z, z) == 0.0


def test_q_error_symmetry_and_scale(rng):
    for _ in range(20):
        a = ScalarField.from_array(rng.normal(size=(5, 7)))
        b = ScalarField.from_array(rng.normal(size=(5, 7)))
        q = q_error(a, b)
        assert 0 <= q <= 1
        assert q_error(b, a) == q
        c = rng.uniform(0.1, 100)
        assert q_error(a.with_values(c * a.values), b.with_values(c * b.values)) == \
            pytest.approx(q, abs=1e-12)


def test_fringe_undistorted_carriers():
    flat = ScalarField.from_array(np.zeros((6, 40)))
    q = 8.0
    I = render_fringe(flat, FringeSpec(0.5, 0.5, q, (1.0, 0.0))).values
    j = np.arange(40)
    np.testing.assert_allclose(I, np.tile(0.5 + 0.5 * np.cos(2 * np.pi * j / q), (6, 1)), atol=1e-15)
    H = render_fringe(ScalarField.from_array(np.zeros((40, 6))), FringeSpec(0.5, 0.5, q, (0.0, 1.0))).values
    assert np.allclose(H, H[:, :1])  # constant along each row: horizontal fringes
    assert not np.allclose(H, H[0])


def test_fringe_ignores_constant_offset(rng):
    phi = ScalarField.from_array(rng.normal(size=(10, 12)))
    fs = FringeSpec.at_angle(0.3, q=5.0, D=2.0)
    a = render_fringe(phi, fs).values
    b = render_fringe(phi.with_values(phi.values + 17.0), fs).values
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_fringe_spec_validation():
    with pytest.raises(ValueError):
        FringeSpec(v=(1.0, 1.0))
    with pytest.raises(ValueError):
        FringeSpec(q=0)
