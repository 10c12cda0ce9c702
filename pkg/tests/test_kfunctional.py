import numpy as np
import pytest
from hypothesis import assume, example, given, strategies as st

from interplab import INF, BanachCouple, InputError, KOptions, WeightedLrSpace, norm
from interplab.kfunctional import (
    _one_norm_solve, _Reduced, _solve_reduced, decomposition_value, k_functional,
    k_functional_oracle, k_values,
)

from strategies import coarse_exponents, couple_and_vector, couples, exponents, scalars, weight


def _couple(r0, w0, r1, w1):
    return BanachCouple(WeightedLrSpace(r0, w0), WeightedLrSpace(r1, w1))


def test_equal_spaces_take_the_cheaper_endpoint():
    X = WeightedLrSpace(3.0, [1.0, 2.0])
    x = np.array([1.0, -2.0j])
    assert k_functional(BanachCouple(X, X), x, 0.5).value == pytest.approx(0.5 * norm(X, x), rel=1e-12)


def test_scalar_value_is_an_endpoint():
    c = _couple(2.0, [2.0], 2.0, [3.0])
    assert k_functional(c, [1.0], 0.5).value == pytest.approx(1.5, rel=1e-12)


def test_l1_couple_decomposes_coordinatewise():
    w0, w1 = np.array([1.0, 4.0]), np.array([2.0, 1.0])
    c = _couple(1.0, w0, 1.0, w1)
    x = np.array([1.0, 1.0])
    formula = float(np.sum(np.minimum(w0, 1.0 * w1) * np.abs(x)))
    assert formula == 2.0
    assert k_functional(c, x, 1.0).value == pytest.approx(formula, abs=1e-12)
    assert k_functional_oracle(c, x, 1.0) == pytest.approx(formula, rel=1e-4)


def test_l1_linf_rearrangement_value():
    c = _couple(1.0, [1.0, 1.0], INF, [1.0, 1.0])
    oracle = k_functional_oracle(c, [1.0, 1.0], 1.5)
    assert oracle == pytest.approx(1.5, rel=1e-6)
    assert k_functional(c, [1.0, 1.0], 1.5).value == pytest.approx(oracle, rel=1e-4)


def test_oracle_vanishes_as_t_goes_to_zero():
    c = _couple(2.0, [1.0, 2.0], INF, [1.0, 3.0])
    vals = [k_functional_oracle(c, [1.0, -0.5], t) for t in (1e-1, 1e-2, 1e-3)]
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-2


def test_rejects_nonpositive_t():
    c = _couple(2.0, [1.0], 2.0, [1.0])
    with pytest.raises(InputError):
        k_functional(c, [1.0], 0.0)
    with pytest.raises(InputError):
        k_values(c, [1.0], [1.0, -2.0])


def test_zero_vector():
    c = _couple(2.0, [1.0, 1.0], 1.0, [1.0, 2.0])
    assert k_functional(c, [0.0, 0.0], 1.0).value == 0.0


@given(couple_and_vector(), st.floats(-3.0, 3.0), scalars())
def test_homogeneity(cx, logt, lam):
    c, x = cx
    t = 10.0 ** logt
    a = k_functional(c, x, t).value
    b = k_functional(c, lam * x, t).value
    assert b == pytest.approx(abs(lam) * a, rel=1e-12)


@given(couple_and_vector(), st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3, unique=True))
def test_monotone_concave_and_majorised(cx, logs):
    c, x = cx
    ts = np.sort(10.0 ** np.array(logs))
    assume(np.all(np.diff(ts) > 1e-9 * ts[1:]))
    vals, _, _ = k_values(c, x, ts)
    tol = 1e-8
    assert vals[0] <= vals[1] * (1 + tol) and vals[1] <= vals[2] * (1 + tol)
    # concavity on the triple: K(t2) lies above the chord through t1, t3
    lam = (ts[2] - ts[1]) / (ts[2] - ts[0])
    assert vals[1] >= (lam * vals[0] + (1 - lam) * vals[2]) * (1 - tol)
    n0, n1 = norm(c.X0, x), norm(c.X1, x)
    assert np.all(vals <= np.minimum(n0, ts * n1) * (1 + tol))


@given(couple_and_vector(), st.floats(-3.0, 3.0))
def test_certificate_brackets_attained_value(cx, logt):
    c, x = cx
    d = k_functional(c, x, 10.0 ** logt)
    attained = decomposition_value(c, d.t, d.x0, d.x1)
    assert attained == pytest.approx(d.value, rel=1e-12)
    assert d.lower <= d.value * (1 + 1e-14)
    assert d.gap <= KOptions().tol
    np.testing.assert_allclose(d.x0 + d.x1, x, atol=1e-14 * np.abs(x).max())


@given(couples(max_dim=2, exps=coarse_exponents),
       st.lists(st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 0.05), min_size=2, max_size=2),
       st.floats(-1.5, 1.5))
# anisotropic l^inf weights: minimiser sits on a kink off the coarse grid
@example(BanachCouple(WeightedLrSpace(1.0, [1.0, 1.0]), WeightedLrSpace(INF, [5.0, 0.25])), [1.0, 3.0], 1.0)
def test_solver_matches_grid_oracle(c, xs, logt):
    x = np.array(xs[:c.dim])
    t = 10.0 ** logt
    oracle = k_functional_oracle(c, x, t)
    assert abs(k_functional(c, x, t).value - oracle) <= 1e-4 * oracle


@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), coarse_exponents, coarse_exponents,
       st.floats(-np.pi, np.pi), st.floats(-1.0, 1.0))
def test_colinear_split_matches_full_complex_grid(w0, w1, r0, r1, arg, logt):
    c = _couple(r0, [w0], r1, [w1])
    x = np.array([1.3 * np.exp(1j * arg)])
    t = 10.0 ** logt
    full = k_functional_oracle(c, x, t)
    line = k_functional_oracle(c, x, t, colinear=True)
    assert line == pytest.approx(full, rel=1e-6)


@given(st.integers(1, 5).flatmap(lambda n: st.tuples(
        st.lists(weight, min_size=n, max_size=n), st.lists(weight, min_size=n, max_size=n),
        st.lists(st.floats(0.05, 3.0), min_size=n, max_size=n))),
       st.sampled_from([1.5, 2.0, 3.0]), st.booleans(), st.floats(-2.0, 2.0))
def test_l1_dual_path_agrees_with_newton(data, r, swap, logt):
    w0, w1, a = (np.array(v) for v in data)
    r0, r1 = (r, 1.0) if swap else (1.0, r)
    c = _couple(r0, w0, r1, w1)
    lo, hi = c.thresholds
    t = np.array([float(np.clip(10.0 ** logt, lo * 1.001, hi / 1.001))])
    assume(lo * 1.001 < hi / 1.001)
    prob = _Reduced(a, w0, r0, w1, r1)
    _, v_dual, lo_dual = _one_norm_solve(prob, t)
    _, v_newton, lo_newton = _solve_reduced(prob, t, KOptions())
    assert v_dual[0] == pytest.approx(v_newton[0], rel=1e-8)
    assert lo_dual[0] <= v_newton[0] * (1 + 1e-12)
    assert lo_newton[0] <= v_dual[0] * (1 + 1e-12)


@pytest.mark.parametrize("r0,r1", [(1.0, INF), (INF, 2.0), (INF, INF), (2.0, 3.0), (1.0, 1.0)])
def test_thresholds_are_exact(r0, r1):
    c = _couple(r0, [1.0, 3.0, 0.5], r1, [2.0, 0.25, 1.0])
    x = np.array([1.0, 2.0 - 1j, -0.5])
    lo, hi = c.thresholds
    below, above = k_values(c, x, [lo * 0.5, hi * 2.0])[0]
    assert below == pytest.approx(0.5 * lo * norm(c.X1, x), rel=1e-12)
    assert above == pytest.approx(norm(c.X0, x), rel=1e-12)
