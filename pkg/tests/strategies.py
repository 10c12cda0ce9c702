"""Shared hypothesis strategies."""
import numpy as np
from hypothesis import strategies as st

from interplab import INF, BanachCouple, WeightedLrSpace

exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, INF])
coarse_exponents = st.sampled_from([1.0, 2.0, INF])
weight = st.floats(0.1, 10.0)
thetas = st.sampled_from([0.25, 0.5, 0.75])
coef = st.floats(-5.0, 5.0).filter(lambda v: abs(v) > 1e-3)


@st.composite
def complex_vectors(draw, n):
    re = draw(st.lists(coef, min_size=n, max_size=n))
    im = draw(st.lists(coef, min_size=n, max_size=n))
    return np.array(re) + 1j * np.array(im)


@st.composite
def couples(draw, max_dim=3, exps=exponents):
    n = draw(st.integers(1, max_dim))
    w0 = draw(st.lists(weight, min_size=n, max_size=n))
    w1 = draw(st.lists(weight, min_size=n, max_size=n))
    return BanachCouple(WeightedLrSpace(draw(exps), w0), WeightedLrSpace(draw(exps), w1))


@st.composite
def couple_and_vector(draw, max_dim=3, exps=exponents):
    c = draw(couples(max_dim, exps))
    return c, draw(complex_vectors(c.dim))


@st.composite
def scalars(draw):
    mod = draw(st.floats(0.05, 20.0))
    arg = draw(st.floats(-np.pi, np.pi))
    return mod * np.exp(1j * arg)
