import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interplab import INF, BanachCouple, GridFunction, InputError, InterpParams, TimeGrid, WeightedLrSpace, norm
from interplab.applications import (MatrixOperator, SectorSpec, interp_sectoriality_check, operator_norm_sampled,
                                    r_bound_lower, rademacher_average, resolvent_sup, sectoriality_angle,
                                    semigroup_scan, semigroup_sup, translation_identity_check,
                                    weighted_equivalence_check)
from interplab.errors import UnsupportedError
from interplab.stein import multiplier_apply, weighted_family
from interplab.strip import boundary_lp_norm

from strategies import complex_vectors, scalars, weight

L2 = WeightedLrSpace.unit(2, 2.0)
SPEC = SectorSpec(math.pi / 2, n_phi=5, per_decade=8)


def profile_constant(theta, p):
    if p == INF:
        return 1.0
    return (1 / ((1 - theta) * p) + 1 / (theta * p)) ** (1 / p)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_unweighted_equal_exponents_give_profile_constant(p):
    out = weighted_equivalence_check(3, p, p, [1, 1, 1], [1, 1, 1], 0.5, samples=6, seed=1)
    np.testing.assert_allclose(out["ratios"], profile_constant(0.5, p), rtol=1e-6)
    assert out["spread"] == pytest.approx(1.0, abs=1e-6)


def test_sup_sup_pair_is_excluded():
    with pytest.raises(InputError):
        weighted_equivalence_check(1, INF, INF, [1.0], [1.0], 0.5, samples=1)


@given(scalars(), st.integers(0, 50))
def test_ratio_invariant_under_simultaneous_weight_scaling(lam, seed):
    w0, w1 = [1.0, 2.0, 0.5], [3.0, 0.25, 1.0]
    c = abs(lam)
    a = weighted_equivalence_check(3, 1.0, 2.0, w0, w1, 0.5, samples=3, seed=seed)
    b = weighted_equivalence_check(3, 1.0, 2.0, [c * w for w in w0], [c * w for w in w1], 0.5, samples=3, seed=seed)
    np.testing.assert_allclose(b["ratios"], a["ratios"], rtol=1e-12)


def test_equivalence_band_example():
    out = weighted_equivalence_check(4, 1.0, 2.0, [1, 2, 0.5, 3], [2, 1, 4, 0.25], 0.5, samples=20, seed=0)
    assert out["passed"] and out["spread"] <= 10


@given(st.integers(-10, 10), st.integers(-10, 10), st.sampled_from([1.0, 2.0, 3.0]), st.integers(0, 100))
def test_translation_identity(k0, k1, p, seed):
    g = TimeGrid(15.0, 0.05)
    w0 = np.array([1.0, 2.5])
    w1 = w0 * np.exp(-g.h * np.array([k0, k1]))
    assert translation_identity_check(2, p, w0, w1, g, seed) <= 1e-10


def test_equal_weights_reduce_to_norm_equality():
    g = TimeGrid(10.0, 0.05)
    w = np.array([2.0, 0.5])
    f = GridFunction(g.t0, g.h, np.exp(-g.times[:, None] ** 2) * np.array([1.0, 1j]))
    for p in (1.0, 2.0):
        out = multiplier_apply(weighted_family(w, w), 0, f)
        assert boundary_lp_norm(out, WeightedLrSpace.unit(2, p), p) == pytest.approx(
            boundary_lp_norm(f, WeightedLrSpace(p, w), p), rel=1e-10)
    assert translation_identity_check(2, (1.0, 2.0), w, w, g) <= 1e-10


def test_misaligned_weights_are_rejected():
    with pytest.raises(InputError, match="multiple of the grid step"):
        translation_identity_check(1, 2.0, [1.0], [1.3], TimeGrid(5.0, 0.05))


@pytest.mark.parametrize("sigma,expected", [(math.pi / 6, 2.0), (math.pi / 4, math.sqrt(2)), (math.pi / 2, 1.0)])
def test_identity_resolvent_sup(sigma, expected):
    res = resolvent_sup(np.eye(2), L2, sigma)
    assert res.finite and res.value == pytest.approx(expected, abs=1e-3)


@pytest.mark.parametrize("alpha", [0.3, 0.8, 1.4])
def test_rotated_eigenvalue_flags_small_sectors(alpha):
    A = np.diag([1.0, np.exp(1j * alpha)])
    assert resolvent_sup(A, L2, alpha + 0.05, SPEC).finite
    out = resolvent_sup(A, L2, alpha - 0.05, SPEC)
    assert not out.finite and out.value == INF


def test_resolvent_sup_nonincreasing_in_sigma():
    A = np.array([[1.0, 3.0], [0.0, 2.0]])
    vals = [resolvent_sup(A, L2, s, SPEC).value for s in (0.3, 0.6, 1.0, 1.5, 2.5)]
    assert all(a >= b * (1 - 1e-9) for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("A,expected", [
    (np.eye(2), 0.0),
    (np.diag([1.0, np.exp(1j * math.pi / 4)]), math.pi / 4),
    (np.array([[1.0, 1.0], [0.0, 1.0]]), 0.0),
])
def test_sectoriality_angle(A, expected):
    res = sectoriality_angle(A, L2, SPEC)
    assert res.omega == pytest.approx(expected, abs=1e-3)
    assert res.reference == pytest.approx(expected, abs=1e-12)


def test_jordan_block_constant_grows_as_sigma_shrinks():
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    vals = [resolvent_sup(J, L2, s, SPEC).value for s in (0.8, 0.4, 0.2, 0.1)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_singular_matrix_rejected():
    with pytest.raises(InputError):
        MatrixOperator(np.diag([1.0, 0.0])).require_invertible()


def test_interp_sectoriality_identity_ratio_at_most_one():
    c = BanachCouple(WeightedLrSpace(1.0, [1.0, 2.0]), WeightedLrSpace(2.0, [3.0, 0.5]))
    rep = interp_sectoriality_check(np.eye(2), c, InterpParams(0.5), 1.0, 1.0, np.geomspace(1e-2, 1e2, 3),
                                    spec=SPEC, starts=1, steps=1)
    assert rep["violations"] == 0 and rep["max_ratio"] <= 1.0


def test_interp_sectoriality_resolvent_scaling():
    c = BanachCouple(WeightedLrSpace(1.0, [1.0, 2.0]), WeightedLrSpace(INF, [3.0, 0.5]))
    A = np.array([[1.0, 0.5], [0.0, 2.0]])
    s = np.geomspace(1e-1, 1e1, 3)
    lam = 4.0
    a = interp_sectoriality_check(A, c, InterpParams(0.5), 0.6, 1.2, s, spec=SPEC, starts=1, steps=1)
    b = interp_sectoriality_check(lam * A, c, InterpParams(0.5), 0.6, 1.2, lam * s, spec=SPEC, starts=1, steps=1)
    np.testing.assert_allclose([r["value"] for r in b["rows"]], [r["value"] for r in a["rows"]], rtol=1e-9)
    assert b["bound"] == pytest.approx(a["bound"], rel=1e-9)


def test_rademacher_scalar_example():
    assert rademacher_average(WeightedLrSpace.unit(1, 2.0), [[3.0], [4.0]]) == 5.0


@given(complex_vectors(3), st.sampled_from([1.0, 2.0, INF]))
def test_rademacher_single_vector(x, r):
    X = WeightedLrSpace(r, [1.0, 2.0, 0.5])
    assert rademacher_average(X, [x]) == pytest.approx(norm(X, x), rel=1e-15)


@st.composite
def vector_families(draw):
    k = draw(st.integers(1, 6))
    return [draw(complex_vectors(2)) for _ in range(k)]


@given(vector_families(), st.integers(-6, 6), st.sampled_from([1.0, 2.0, INF]))
def test_rademacher_homogeneity_exact(xs, e, r):
    X = WeightedLrSpace(r, [1.0, 3.0])
    lam = 2.0 ** e
    assert rademacher_average(X, [lam * x for x in xs]) == lam * rademacher_average(X, xs)
    assert rademacher_average(X, [-lam * x for x in xs]) == lam * rademacher_average(X, xs)


@given(vector_families(), scalars(), st.sampled_from([1.0, 2.0, INF]))
def test_rademacher_homogeneity_general_scalar(xs, lam, r):
    X = WeightedLrSpace(r, [1.0, 3.0])
    assert rademacher_average(X, [lam * x for x in xs]) == pytest.approx(
        abs(lam) * rademacher_average(X, xs), rel=1e-13)


@given(vector_families(), st.data(), st.sampled_from([1.0, 2.0, INF]))
def test_rademacher_sign_flip_exact(xs, data, r):
    X = WeightedLrSpace(r, [1.0, 3.0])
    i = data.draw(st.integers(0, len(xs) - 1))
    flipped = list(xs)
    flipped[i] = -flipped[i]
    assert rademacher_average(X, flipped) == rademacher_average(X, xs)


def test_rademacher_too_many_terms():
    with pytest.raises(UnsupportedError):
        rademacher_average(WeightedLrSpace.unit(1, 2.0), np.ones((21, 1)))


@given(st.integers(0, 1000), st.sampled_from([1.0, 2.0, 3.0, INF]))
def test_single_operator_r_bound_is_sampled_norm(seed, r):
    rng = np.random.default_rng(seed)
    T = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    X = WeightedLrSpace(r, [1.0, 2.0])
    assert r_bound_lower([T], X, trials=16, seed=seed) == operator_norm_sampled(T, X, trials=16, seed=seed)


def test_identities_have_r_bound_one():
    X = WeightedLrSpace(2.0, [1.0, 2.0])
    assert r_bound_lower([np.eye(2)] * 3, X, trials=8) == pytest.approx(1.0, rel=1e-12)


def test_identity_semigroup_is_contractive():
    radii = np.geomspace(1e-2, 10, 6)
    for phi in (0.0, 0.5, 1.2, 1.5):
        assert semigroup_sup(np.eye(2), L2, phi, radii) <= 1.0 + 1e-12


def test_semigroup_scan_bounded():
    c = BanachCouple(WeightedLrSpace(2.0, [1.0, 1.0]), WeightedLrSpace(1.0, [1.0, 2.0]))
    out = semigroup_scan(np.diag([1.0, 2.0]), c.X0, [0.5], c, n_phi=2, n_r=2, starts=1, steps=1)
    assert out["passed"] and out["results"][0]["max_norm"] <= 1.0 + 1e-9


def test_semigroup_scan_rejects_wide_spectrum():
    c = BanachCouple(L2, L2)
    with pytest.raises(InputError):
        semigroup_scan(np.diag([1.0, -1.0 + 0.1j]), L2, [0.5], c)


@given(complex_vectors(3), scalars())
def test_weighted_ratio_invariant_under_x_scaling(x, lam):
    from interplab.applications import _norm_ratio, _weighted_couple

    w0, w1 = np.array([1.0, 2.0, 0.5]), np.array([3.0, 0.25, 1.0])
    couple = _weighted_couple(1.0, 2.0, w0, w1)
    params = InterpParams(0.5, 1.0, 2.0)
    target = WeightedLrSpace(params.p, np.sqrt(w0 * w1))
    a = _norm_ratio(couple, params, target, None, x)
    assert _norm_ratio(couple, params, target, None, lam * x) == pytest.approx(a, rel=1e-12)
