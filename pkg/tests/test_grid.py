import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lpwave.grid import (GradientField, Grid, GridMismatchError, ScalarField, forward_diff_x,
                         forward_diff_y, mean_align)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
# no magnitudes far below the rounding level of the others (e.g. 1 next to 1e-142)
moderate = st.one_of(st.just(0.0), st.floats(1e-6, 1e3), st.floats(-1e3, -1e-6))
shapes = st.tuples(st.integers(2, 7), st.integers(2, 7))


def field(a, **kw):
    return ScalarField.from_array(np.asarray(a, dtype=float), **kw)


@pytest.mark.parametrize("rows,cols", [(1, 3), (3, 1), (0, 5)])
def test_grid_rejects_degenerate_sizes(rows, cols):
    with pytest.raises(ValueError):
        Grid(rows, cols)


def test_grid_rejects_nonpositive_spacing():
    with pytest.raises(ValueError):
        Grid(3, 3, h_x=0.0)
    with pytest.raises(ValueError):
        Grid(3, 3, h_y=-1.0)


def test_field_rejects_nonfinite_and_wrong_shape():
    g = Grid(2, 3)
    with pytest.raises(ValueError):
        ScalarField(g, [[0, 1, np.nan], [0, 0, 0]])
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros((3, 2)))


def test_field_values_are_read_only():
    f = field([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        f.values[0, 0] = 9.0


def test_gradient_field_grid_mismatch():
    a = field(np.zeros((2, 3)))
    b = field(np.zeros((3, 2)))
    with pytest.raises(GridMismatchError):
        GradientField(a.grid, a, b)


def test_forward_diff_x_examples():
    assert np.array_equal(forward_diff_x(field(np.full((3, 4), 2.5))).values, np.zeros((3, 4)))
    ramp = field(np.tile(np.arange(5.0), (3, 1)))
    out = forward_diff_x(ramp).values
    assert np.array_equal(out[:, :-1], np.ones((3, 4)))
    assert np.array_equal(out[:, -1], np.zeros(3))


def test_forward_diff_x_hand_values():
    # single-row grids are not allowed, so the 1x3 example is embedded in a 2x3 grid
    f = field([[1, 4, 9], [0, 0, 0]])
    assert forward_diff_x(f).values[0].tolist() == [3, 5, 0]


def test_forward_diff_y_examples():
    assert np.array_equal(forward_diff_y(field(np.full((4, 3), -1.0))).values, np.zeros((4, 3)))
    ramp = field(np.tile(np.arange(4.0)[:, None], (1, 3)))
    out = forward_diff_y(ramp).values
    assert np.array_equal(out[:-1], np.ones((3, 3)))
    assert np.array_equal(out[-1], np.zeros(3))
    f = field([[1, 0], [4, 0], [9, 0]])
    assert forward_diff_y(f).values[:, 0].tolist() == [3, 5, 0]


def test_forward_diff_uses_spacing():
    f = field([[0, 1, 2], [0, 1, 2]], h_x=0.5, h_y=2.0)
    assert forward_diff_x(f).values[0].tolist() == [2, 2, 0]
    g = field([[0, 0], [4, 4]], h_x=0.5, h_y=2.0)
    assert forward_diff_y(g).values[0].tolist() == [2, 2]


@settings(max_examples=50, deadline=None)
@given(shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite)), finite)
def test_forward_diff_ignores_constants(a, c):
    f = field(a)
    for op in (forward_diff_x, forward_diff_y):
        np.testing.assert_allclose(op(field(a + c)).values, op(f).values, rtol=0, atol=1e-9)


def test_forward_diff_linearity(rng):
    a, b = rng.normal(size=(6, 9)), rng.normal(size=(6, 9))
    for op in (forward_diff_x, forward_diff_y):
        lhs = op(field(2.5 * a - 0.75 * b)).values
        rhs = 2.5 * op(field(a)).values - 0.75 * op(field(b)).values
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-10)


def test_forward_diff_x_constant_shift_tight(rng):
    a = rng.normal(size=(5, 5))
    np.testing.assert_allclose(forward_diff_x(field(a + 7.0)).values,
                               forward_diff_x(field(a)).values, atol=1e-12)


def test_mean_align_examples():
    ref = field([[1, 2], [3, 4]])
    assert mean_align(ref, ref).values.tolist() == ref.values.tolist()
    shifted = field(ref.values + 7)
    np.testing.assert_allclose(mean_align(shifted, ref).values, ref.values, rtol=0, atol=1e-12)
    zero = field(np.zeros((2, 2)))
    assert mean_align(zero, ref).values.tolist() == [[2.5, 2.5], [2.5, 2.5]]


def test_mean_align_grid_mismatch():
    with pytest.raises(GridMismatchError):
        mean_align(field(np.zeros((2, 2))), field(np.zeros((2, 3))))


@settings(max_examples=200, deadline=None)
@given(shapes.flatmap(lambda s: st.tuples(arrays(np.float64, s, elements=finite),
                                          arrays(np.float64, s, elements=finite))))
def test_mean_align_is_idempotent_to_rounding(pair):
    f, r = field(pair[0]), field(pair[1])
    once = mean_align(f, r)
    twice = mean_align(once, r)
    scale = 1 + np.abs(pair[0]).max() + np.abs(pair[1]).max()
    np.testing.assert_allclose(twice.values, once.values, rtol=0, atol=1e-12 * scale)
    assert abs(once.mean() - r.mean()) <= 1e-12 * scale


@pytest.mark.parametrize("shape", [(2, 2), (7, 5), (48, 64), (480, 640)])
def test_mean_align_is_exactly_idempotent(rng, shape):
    # exact when the shift does not cancel most of the input's magnitude
    for offset in (0.0, 3.0, -250.0):
        f = field(rng.normal(size=shape) + offset)
        r = field(rng.normal(size=shape) * 5 - 1.5)
        once = mean_align(f, r)
        assert np.array_equal(mean_align(once, r).values, once.values)
