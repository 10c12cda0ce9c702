import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from interplab import GridFunction, InputError, TimeGrid
from interplab.fourier import centred_origin, dual_step, fourier_forward, fourier_inverse, l2_norm


def gaussian_grid(T=20.0, m=2048):
    h = 2 * T / m
    t0 = -T
    t = t0 + h * np.arange(m)
    return GridFunction(t0, h, np.exp(-t ** 2 / 2))


def naive_forward(t, g, xi):
    return np.array([np.sum(np.exp(-1j * t * x) * g) for x in xi]) * (t[1] - t[0])


def test_gaussian_transform():
    G = fourier_forward(gaussian_grid())
    exact = math.sqrt(2 * math.pi) * np.exp(-G.times ** 2 / 2)
    assert np.abs(G.values[:, 0] - exact).max() <= 1e-8


def test_indicator_transform():
    g = TimeGrid(40.0, 0.001)
    t = g.times
    vals = np.where(np.abs(t) < 1.0, 1.0, 0.0) + np.where(np.isclose(np.abs(t), 1.0), 0.5, 0.0)
    G = fourier_forward(GridFunction(g.t0, g.h, vals))
    xi = G.times
    keep = (np.abs(xi) > 0.1) & (np.abs(xi) < 20.0)
    exact = 2 * np.sin(xi[keep]) / xi[keep]
    assert np.abs(G.values[keep, 0] - exact).max() <= 1e-3


def test_inverse_of_forward_is_two_pi():
    g = gaussian_grid()
    back = fourier_inverse(fourier_forward(g), t0=g.t0)
    assert np.abs(back.values - 2 * math.pi * g.values).max() <= 1e-8


def test_plancherel_factor():
    g = gaussian_grid()
    assert l2_norm(fourier_forward(g)) == pytest.approx(math.sqrt(2 * math.pi) * l2_norm(g), rel=1e-8)


@given(st.integers(2, 64), st.floats(0.05, 1.0), st.floats(-5.0, 5.0), st.integers(0, 2 ** 31 - 1))
def test_both_paths_match_naive_sum(m, h, t0, seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(m, 2)) + 1j * rng.normal(size=(m, 2))
    gf = GridFunction(t0, h, vals)
    t = gf.times
    for method in ("fft", "direct"):
        G = fourier_forward(gf, method)
        for i in range(2):
            ref = naive_forward(t, vals[:, i], G.times)
            assert np.abs(G.values[:, i] - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())


@given(st.integers(2, 700), st.floats(0.01, 0.5), st.floats(-30.0, 30.0), st.floats(-10.0, 10.0),
       st.integers(0, 2 ** 31 - 1))
def test_fft_equals_direct(m, h, t0, xi0, seed):
    rng = np.random.default_rng(seed)
    gf = GridFunction(t0, h, rng.normal(size=(m, 1)) + 1j * rng.normal(size=(m, 1)))
    a = fourier_forward(gf, "fft", xi0=xi0).values
    b = fourier_forward(gf, "direct", xi0=xi0).values
    scale = h * np.abs(gf.values).sum()
    assert np.abs(a - b).max() <= 1e-12 * scale * max(1.0, math.log2(m))
    A = fourier_inverse(gf, "fft", t0=xi0).values
    B = fourier_inverse(gf, "direct", t0=xi0).values
    assert np.abs(A - B).max() <= 1e-12 * scale * max(1.0, math.log2(m))


def test_dual_grid_geometry():
    assert dual_step(100, 0.1) * 0.1 * 100 == pytest.approx(2 * math.pi)
    assert centred_origin(5, 1.0) == -2.0 and centred_origin(4, 1.0) == -2.0


def test_unknown_method():
    with pytest.raises(InputError):
        fourier_forward(gaussian_grid(m=16), "slow")
