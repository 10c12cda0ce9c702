import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interplab import INF, BanachCouple, InterpParams, QuadOptions, WeightedLrSpace, norm
from interplab.realinterp import real_interp_norm, real_interp_norm_details

from strategies import couple_and_vector, scalars, thetas


def scalar_closed_form(a, b, theta, p):
    # int_0^inf (t^{-theta} min(a, t b))^p dt/t, split at t = a/b
    if p == INF:
        return a ** (1 - theta) * b ** theta
    return a ** (1 - theta) * b ** theta * (1 / ((1 - theta) * p) + 1 / (theta * p)) ** (1 / p)


def _scalar(a, b, r=2.0):
    return BanachCouple(WeightedLrSpace(r, [a]), WeightedLrSpace(r, [b]))


def test_sup_norm_of_unit_scalar_is_one():
    for theta in (0.1, 0.5, 0.9):
        assert real_interp_norm(_scalar(1, 1), InterpParams(theta, INF, INF), [1.0]) == pytest.approx(1.0, rel=1e-9)


def test_sqrt_two_example():
    val = real_interp_norm(_scalar(1, 1), InterpParams(0.5, 2, 2), [1.0])
    assert val == pytest.approx(math.sqrt(2.0), rel=1e-6)


@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0), st.floats(0.1, 0.9), st.sampled_from([1.0, 1.5, 2.0, 4.0, INF]))
def test_scalar_closed_form(a, b, theta, p):
    val = real_interp_norm(_scalar(a, b), InterpParams(theta, p, p), [1.0])
    assert val == pytest.approx(scalar_closed_form(a, b, theta, p), rel=1e-6)


@given(couple_and_vector(max_dim=3), thetas, st.sampled_from([1.0, 2.0, INF]), scalars())
def test_homogeneity(cx, theta, p, lam):
    c, x = cx
    pr = InterpParams(theta, p, p)
    assert real_interp_norm(c, pr, lam * x) == pytest.approx(abs(lam) * real_interp_norm(c, pr, x), rel=1e-9)


@given(couple_and_vector(max_dim=3), st.floats(0.1, 0.9))
def test_sup_norm_below_geometric_mean_of_endpoints(cx, theta):
    c, x = cx
    val = real_interp_norm(c, InterpParams(theta, INF, INF), x)
    bound = norm(c.X0, x) ** (1 - theta) * norm(c.X1, x) ** theta
    assert val <= bound * (1 + 1e-8)


@given(st.sampled_from([1.0, 2.0, 3.0, INF]), st.lists(st.floats(0.2, 5.0), min_size=1, max_size=3), thetas,
       st.sampled_from([1.0, 2.0, INF]))
def test_equal_spaces_give_scalar_profile_constant(r, w, theta, p):
    X = WeightedLrSpace(r, w)
    x = np.linspace(1.0, 2.0, len(w)) * (1 + 0.5j)
    val = real_interp_norm(BanachCouple(X, X), InterpParams(theta, p, p), x)
    assert val == pytest.approx(scalar_closed_form(1.0, 1.0, theta, p) * norm(X, x), rel=1e-6)


def test_details_account_for_tails():
    c = BanachCouple(WeightedLrSpace(1.0, [1.0, 2.0]), WeightedLrSpace(2.0, [3.0, 0.5]))
    d = real_interp_norm_details(c, InterpParams(0.4, 2, 2), [1.0, -1j], QuadOptions(tail_tol=1e-10))
    assert d.tail_bound <= 1e-10 * d.value
    assert d.value == pytest.approx((d.quadrature ** 2 + d.tail ** 2) ** 0.5, rel=1e-12)
