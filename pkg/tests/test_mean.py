import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interplab import (INF, BanachCouple, GridFunction, InputError, InterpParams, MeanOptions, TimeGrid,
                       WeightedLrSpace)
from interplab.mean import (_cost_and_subgradient, boundary_norms, boundary_weighted_norm, bump_function, construct_mean_representation,
                            mean_objective, minimize_mean_norm, smooth_representation, sum_space_norm,
                            truncate_representation, truncation_tail_bounds)

from strategies import couple_and_vector, scalars, thetas

LIGHT = MeanOptions(iterations=60, patience=30, lbfgs_iters=60)
UNIT = WeightedLrSpace(2.0, [1.0])
UNIT_COUPLE = BanachCouple(UNIT, UNIT)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0, INF])
@pytest.mark.parametrize("h", [0.1, 0.05])
def test_single_cell_value(p, h):
    g = TimeGrid(5.0, h)
    vals = np.where(np.isclose(g.times, 0.0, atol=h / 4), 1.0 / h, 0.0)
    gf = GridFunction(g.t0, h, vals)
    for j in (0, 1):
        assert boundary_weighted_norm(gf, UNIT, 0.5, j, p) == pytest.approx(h ** (1 / p - 1), rel=1e-12)


def test_gaussian_l1_value():
    # int e^{t/2} e^{-t^2/2} dt = sqrt(2 pi) e^{1/8}
    g = TimeGrid(30.0, 0.01)
    gf = GridFunction(g.t0, g.h, np.exp(-g.times ** 2 / 2))
    val = boundary_weighted_norm(gf, UNIT, 0.5, 1, 1.0)
    assert val == pytest.approx(math.sqrt(2 * math.pi) * math.exp(0.125), rel=1e-8)


@given(st.floats(0.3, 3.0), st.sampled_from([1.0, 2.0, INF]))
def test_symmetric_couple_even_profile(width, p):
    g = TimeGrid(20.0, 0.05)
    gf = GridFunction(g.t0, g.h, np.exp(-(g.times / width) ** 2))
    b0, b1 = boundary_norms(gf, UNIT_COUPLE, InterpParams(0.5, p, p))
    assert b0 == pytest.approx(b1, rel=1e-12)
    assert mean_objective(gf, UNIT_COUPLE, InterpParams(0.5, p, p)) >= max(b0, b1)


@pytest.mark.parametrize("theta", [0.25, 0.5, 0.75])
def test_bathtub_profile(theta):
    g = TimeGrid(80.0, 0.005)
    t = g.times
    f = theta * (1 - theta) * np.minimum(np.exp(theta * t), np.exp(-(1 - theta) * t))
    gf = GridFunction(g.t0, g.h, f)
    assert gf.integral()[0].real == pytest.approx(1.0, rel=1e-3)
    val = mean_objective(gf, UNIT_COUPLE, InterpParams(theta, INF, INF))
    assert val == pytest.approx(theta * (1 - theta), rel=1e-12)


@given(couple_and_vector(max_dim=3), thetas)
def test_smoothing_preserves_integral(cx, theta):
    c, x = cx
    rep = construct_mean_representation(c, InterpParams(theta), x, TimeGrid(12.0, 0.1), smooth=False)
    sm = smooth_representation(rep.gf)
    np.testing.assert_allclose(sm.integral(), rep.gf.integral(), rtol=0, atol=1e-12 * np.abs(x).max())


def test_bump_is_a_fixed_point_of_smoothing():
    g = TimeGrid(6.0, 0.05)
    x = np.array([1.0, -2.0 + 1j])
    b = bump_function(g, x)
    np.testing.assert_allclose(smooth_representation(b).values, b.values, atol=1e-10)
    np.testing.assert_allclose(b.integral(), x, atol=1e-12)


def test_truncation_inside_support_is_identity():
    g = TimeGrid(10.0, 0.1)
    vals = np.where(np.abs(g.times) < 2.5, 1.0, 0.0)
    gf = GridFunction(g.t0, g.h, vals)
    np.testing.assert_array_equal(truncate_representation(gf, 3).values, gf.values)


@given(couple_and_vector(max_dim=3), thetas, st.integers(1, 8))
def test_truncation_preserves_integral_and_tail_bounds(cx, theta, n_cut):
    c, x = cx
    pr = InterpParams(theta, 2.0, 2.0)
    rep = construct_mean_representation(c, pr, x, TimeGrid(10.0, 0.1))
    tr = truncate_representation(rep.gf, n_cut)
    np.testing.assert_allclose(tr.integral(), rep.gf.integral(), atol=1e-12 * np.abs(x).max())
    b = truncation_tail_bounds(rep.gf, c, pr, n_cut)
    assert b["y_plus_norm"] <= b["y_plus_holder"] * (1 + 1e-9) + 1e-15
    assert b["y_minus_norm"] <= b["y_minus_holder"] * (1 + 1e-9) + 1e-15


def test_truncation_rejects_fractional_cut():
    gf = TimeGrid(5.0, 0.1).zeros(1)
    with pytest.raises(InputError):
        truncate_representation(gf, 1.5)


@given(couple_and_vector(max_dim=3), thetas)
def test_construction_is_feasible(cx, theta):
    c, x = cx
    rep = construct_mean_representation(c, InterpParams(theta), x, TimeGrid(15.0, 0.1))
    assert rep.residual <= 1e-8 * sum_space_norm(c, x)


@given(couple_and_vector(max_dim=2, exps=st.sampled_from([1.0, 2.0, INF])), thetas,
       st.sampled_from([1.0, 2.0, INF]))
def test_minimiser_is_feasible_and_improves(cx, theta, p):
    c, x = cx
    pr = InterpParams(theta, p, p)
    rep, val = minimize_mean_norm(c, pr, x, opts=LIGHT)
    assert rep.residual <= 1e-8 * sum_space_norm(c, x)
    assert val <= rep.info["initial_value"] * (1 + 1e-12)
    assert val == pytest.approx(mean_objective(rep.gf, c, pr), rel=1e-12)


@given(couple_and_vector(max_dim=2, exps=st.sampled_from([1.0, 2.0, INF])), scalars())
def test_minimiser_homogeneity(cx, lam):
    c, x = cx
    pr = InterpParams(0.5, 2.0, 2.0)
    _, a = minimize_mean_norm(c, pr, x, opts=LIGHT)
    _, b = minimize_mean_norm(c, pr, lam * x, opts=LIGHT)
    assert b == pytest.approx(abs(lam) * a, rel=1e-12)


def test_bathtub_minimum():
    _, val = minimize_mean_norm(UNIT_COUPLE, InterpParams(0.5, INF, INF), [1.0], TimeGrid(60.0, 0.05))
    assert val == pytest.approx(0.25, rel=0.02)


@pytest.mark.parametrize("r0,r1,p", [(2.0, 2.0, INF), (1.0, INF, 2.0), (INF, 2.0, 1.0)])
def test_grid_refinement_does_not_increase_value(r0, r1, p):
    c = BanachCouple(WeightedLrSpace(r0, [1.0, 3.0]), WeightedLrSpace(r1, [2.0, 0.5]))
    pr = InterpParams(0.5, p, p)
    x = [1.0, 1j]
    _, coarse = minimize_mean_norm(c, pr, x, TimeGrid(60.0, 0.1), LIGHT)
    _, fine = minimize_mean_norm(c, pr, x, TimeGrid(60.0, 0.05), LIGHT)
    assert fine <= coarse * 1.01


def test_zero_vector_is_rejected():
    with pytest.raises(InputError):
        minimize_mean_norm(UNIT_COUPLE, InterpParams(0.5), [0.0])


@pytest.mark.parametrize("r", [1.0, 2.0, INF])
def test_subgradient_finite_for_subnormal_entries(r):
    g = TimeGrid(3.0, 0.1)
    f = np.full((g.times.size, 2), 1.0 + 1.0j)
    f[:5, 0] = 1e-320 + 1e-320j
    couple = BanachCouple(WeightedLrSpace(r, [1.0, 2.0]), WeightedLrSpace(2.0, [3.0, 0.5]))
    with np.errstate(over="raise", invalid="raise"):
        value, grad = _cost_and_subgradient(f, couple, InterpParams(0.5, 2.0, 2.0), g.times, g.h)
    assert math.isfinite(value)
    assert np.isfinite(grad).all()
