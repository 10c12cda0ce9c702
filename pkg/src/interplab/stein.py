"""Analytic operator families on the strip and the Stein bound for the real method.

A family ``z -> T(z)`` of ``n_out x n_in`` matrices is given by formula
(weighted multiplier, damped resolvent) or by a table of samples with
polynomial interpolation. On the boundary lines ``T_j(xi) = T(j + i xi)``
acts as a Fourier multiplier; its norm ``M_j`` enters the bound

    ||T(theta) x||_{(Y0, Y1)_{theta, q}} <= C M_0^{1-theta} M_1^theta ||x||_{(X0, X1)_{theta, p}}

which :func:`stein_check` measures on sampled vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import AccuracyError, InputError, UnsupportedError
from .fourier import centred_origin, dual_step, fourier_forward, fourier_inverse
from .grid import GridFunction, TimeGrid
from .mean import MeanOptions, minimize_mean_norm
from .operators import operator_norm, resolvent
from .parallel import ordered_map
from .realinterp import QuadOptions, real_interp_norm
from .spaces import BanachCouple, InterpParams, WeightedLrSpace
from .strip import StripFunction, boundary_lp_norm, strip_eval, trace_grid

KINDS = ("weighted_multiplier", "resolvent", "tabulated")


@dataclass
class OperatorFamily:
    kind: str
    n_in: int
    n_out: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"family kind must be one of {KINDS}")

    def to_dict(self):
        out = {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out}
        for k, v in self.params.items():
            if isinstance(v, np.ndarray):
                v = {"re": v.real.tolist(), "im": v.imag.tolist()} if np.iscomplexobj(v) else v.tolist()
            out[k] = v
        return out


def weighted_family(w0, w1):
    """``T(z) = diag(w0^{1-z} w1^z)`` for positive weights."""
    w0 = np.asarray(w0, dtype=float).reshape(-1)
    w1 = np.asarray(w1, dtype=float).reshape(-1)
    if w0.shape != w1.shape or np.any(w0 <= 0) or np.any(w1 <= 0):
        raise InputError("weights must be positive and of equal length")
    return OperatorFamily("weighted_multiplier", w0.size, w0.size, {"w0": w0, "w1": w1})


def identity_family(n, scale=1.0):
    w = np.full(n, float(scale))
    return weighted_family(w, w)


def resolvent_family(A, s, sigma0, sigma1, theta, damped=True):
    """``T(z) = e^{(z-theta)^2} lam(z) R(lam(z), A)`` with ``lam(z) = s e^{i(sigma0 + (sigma1-sigma0) z)}``.

    The Gaussian factor (dropped with ``damped=False``) makes the boundary
    symbols integrable without changing ``T(theta)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise InputError("A must be square")
    if not s > 0:
        raise InputError("s must be positive")
    return OperatorFamily("resolvent", A.shape[0], A.shape[0], {
        "A": A, "s": float(s), "sigma0": float(sigma0), "sigma1": float(sigma1),
        "theta": float(theta), "damped": bool(damped)})


def tabulated_family(nodes, matrices, radius=0.25, tol=1e-6):
    """Polynomial interpolation through ``T(nodes[k]) = matrices[k]``.

    The interpolant is analytic by construction; a Cauchy-integral residual
    on a circle of ``radius`` around ``1/2`` guards the evaluation itself.
    """
    nodes = np.asarray(nodes, dtype=complex).reshape(-1)
    mats = np.asarray(matrices, dtype=complex)
    if mats.ndim != 3 or mats.shape[0] != nodes.size:
        raise InputError("need one matrix per node")
    if np.unique(nodes).size != nodes.size:
        raise InputError("nodes must be distinct")
    fam = OperatorFamily("tabulated", mats.shape[2], mats.shape[1], {"nodes": nodes, "matrices": mats})
    residual = cauchy_residual(fam, 0.5 + 0.1j, radius)
    if residual > tol:
        raise AccuracyError("tabulated family failed the Cauchy-integral check",
                            diagnostics={"residual": residual})
    return fam


def _barycentric(nodes, mats, z):
    # second-form barycentric interpolation; exact at the nodes
    diff = z[:, None] - nodes[None, :]
    w = np.array([1.0 / np.prod(nk - np.delete(nodes, k)) for k, nk in enumerate(nodes)])
    hit = np.isclose(diff, 0.0, atol=1e-15)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = w[None, :] / diff
        out = np.einsum("zk,kab->zab", c, mats) / c.sum(axis=1)[:, None, None]
    for zi, k in zip(*np.nonzero(hit)):
        out[zi] = mats[k]
    return out


def family_eval(fam, z):
    """``T(z)``; scalar ``z`` gives one matrix, an array gives a stack."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.real < -1e-12) or np.any(z.real > 1 + 1e-12):
        raise InputError("z must lie in the closed strip 0 <= Re z <= 1")
    P = fam.params
    if fam.kind == "weighted_multiplier":
        logw0, logw1 = np.log(P["w0"]), np.log(P["w1"])
        diag = np.exp((1.0 - z)[:, None] * logw0[None, :] + z[:, None] * logw1[None, :])
        out = np.zeros((z.size, fam.n_out, fam.n_in), dtype=complex)
        idx = np.arange(fam.n_in)
        out[:, idx, idx] = diag
    elif fam.kind == "resolvent":
        A, n = P["A"], fam.n_in
        lam = P["s"] * np.exp(1j * (P["sigma0"] + (P["sigma1"] - P["sigma0"]) * z))
        damp = np.exp((z - P["theta"]) ** 2) if P["damped"] else np.ones_like(z)
        out = np.empty((z.size, n, n), dtype=complex)
        for k in range(z.size):
            out[k] = damp[k] * lam[k] * resolvent(lam[k], A)
    else:
        out = _barycentric(P["nodes"], P["matrices"], z)
    return out[0] if scalar else out


def cauchy_residual(fam, z0, radius, points=64):
    """``max |T(z0) - (1/2 pi i) oint T(z)/(z - z0) dz|`` relative to ``max |T(z0)|``."""
    phi = 2.0 * math.pi * np.arange(points) / points
    circle = z0 + radius * np.exp(1j * phi)
    vals = family_eval(fam, circle)
    # trapezoid on the circle: dz / (z - z0) = i dphi
    integral = vals.mean(axis=0)
    direct = family_eval(fam, z0)
    return float(np.abs(integral - direct).max() / max(np.abs(direct).max(), 1e-300))


def symbol(fam, j, xi):
    """Boundary symbol ``T_j(xi) = T(j + i xi)``."""
    return family_eval(fam, j + 1j * np.asarray(xi, dtype=float))


def multiplier_apply(fam, j, gf):
    """``(T_j g^)^v / (2 pi)``, computed on the FFT dual grid of ``gf``."""
    if gf.n != fam.n_in:
        raise InputError(f"input has {gf.n} coordinates, family expects {fam.n_in}")
    G = fourier_forward(gf)
    T = symbol(fam, j, G.times)
    out = G.with_values(np.einsum("lab,lb->la", T, G.values))
    back = fourier_inverse(out, t0=gf.t0)
    return back.scaled(1.0 / (2.0 * math.pi))


def _symbol_second_derivative(fam, j, xi, step=1e-4):
    # central differences at step and step/2, one Richardson step
    def d2(h):
        return (symbol(fam, j, xi + h) - 2.0 * symbol(fam, j, xi) + symbol(fam, j, xi - h)) / h ** 2
    return (4.0 * d2(step / 2.0) - d2(step)) / 3.0


def _op_norms(mats, X, Y):
    if X.exponent == 2.0 and Y.exponent == 2.0:
        B = Y.weights[None, :, None] * mats / X.weights[None, None, :]
        return np.linalg.norm(B, ord=2, axis=(1, 2))
    return np.array([operator_norm(M, X, Y).upper for M in mats])


@dataclass(frozen=True)
class MultiplierOptions:
    L: float = 40.0
    h: float = 0.125
    samples: int = 50
    seed: int = 0
    tail_tol: float = 1e-10


@dataclass
class MultiplierBounds:
    lower: float
    upper: float
    method: str
    kernel_l1: float | None = None
    chain_bound: float | None = None
    symbol_l1: float | None = None
    symbol_dd_l1: float | None = None


def _is_translation(fam):
    return fam.kind == "weighted_multiplier"


def _test_inputs(n, grid, count, rng):
    """Random smooth inputs: Gaussian envelopes with random centres, widths and phases."""
    t = grid.times
    out = []
    for _ in range(count):
        centre = rng.uniform(-grid.L / 4, grid.L / 4, size=n)
        width = rng.uniform(0.5, 4.0, size=n)
        amp = rng.normal(size=n) + 1j * rng.normal(size=n)
        freq = rng.uniform(-2.0, 2.0, size=n)
        vals = amp[None, :] * np.exp(-((t[:, None] - centre[None, :]) / width[None, :]) ** 2
                                     + 1j * freq[None, :] * t[:, None])
        out.append(GridFunction(grid.t0, grid.h, vals))
    return out


def multiplier_lower(fam, j, X, Y, p, q, opts=None):
    """Largest ``||(T_j g^)^v||_{L^q(Y)} / ||g||_{L^p(X)}`` over random smooth ``g``."""
    opts = opts or MultiplierOptions()
    grid = TimeGrid(opts.L, opts.h)
    rng = np.random.default_rng(opts.seed)
    best = 0.0
    for g in _test_inputs(fam.n_in, grid, opts.samples, rng):
        out = multiplier_apply(fam, j, g)
        best = max(best, boundary_lp_norm(out, Y, q) / boundary_lp_norm(g, X, p))
    return best


def kernel_chain(fam, j, X, Y, opts=None):
    """Kernel ``L^1`` norm of ``T_j`` and the bound ``(1/2)(||T_j||_1 + ||T_j''||_1)`` for it.

    ``(1 + t^2) k(t)`` is the inverse transform of ``T_j - T_j''`` over
    ``2 pi``, and ``int dt / (1 + t^2) = pi``.
    """
    opts = opts or MultiplierOptions()
    grid = TimeGrid(opts.L, opts.h)
    m = grid.m
    dxi = dual_step(m, grid.h)
    xi = centred_origin(m, dxi) + dxi * np.arange(m)
    T = symbol(fam, j, xi)
    norms = _op_norms(T, X, Y)
    total = dxi * norms.sum()
    edge = max(1, m // 20)
    tail = dxi * (norms[:edge].sum() + norms[-edge:].sum())
    if not np.all(np.isfinite(norms)) or tail > opts.tail_tol * max(total, 1e-300):
        raise AccuracyError(
            "boundary symbol is not integrable on the frequency window; "
            "multiply the family by e^{(z - theta)^2} to damp it",
            diagnostics={"tail_mass": float(tail), "total": float(total)})
    Tdd = _symbol_second_derivative(fam, j, xi)
    dd_l1 = dxi * _op_norms(Tdd, X, Y).sum()
    flat = GridFunction(xi[0], dxi, T.reshape(m, -1))
    kern = fourier_inverse(flat).scaled(1.0 / (2.0 * math.pi))
    kmats = kern.values.reshape(m, fam.n_out, fam.n_in)
    kernel_l1 = kern.h * _op_norms(kmats, X, Y).sum()
    chain = math.pi * (total + dd_l1) / (2.0 * math.pi)
    return float(kernel_l1), float(chain), float(total), float(dd_l1)


def multiplier_norm_bounds(fam, j, X, Y, p, q, opts=None):
    """Lower and upper bounds for the multiplier norm ``L^p(X) -> L^q(Y)`` of ``T_j``.

    Diagonal weighted families are modulations, i.e. coordinatewise
    translations with constant factors; for ``p = q = r_X = r_Y`` their norm
    is exact. Otherwise the upper bound is the kernel ``L^1`` norm (Young),
    which needs ``p = q``.
    """
    opts = opts or MultiplierOptions()
    lower = multiplier_lower(fam, j, X, Y, p, q, opts)
    if _is_translation(fam):
        if not (p == q == X.exponent == Y.exponent):
            raise UnsupportedError("translation multipliers need p = q = both fibre exponents")
        c = np.abs(symbol(fam, j, [0.0])[0].diagonal())
        upper = float((c * Y.weights / X.weights).max())
        return MultiplierBounds(lower, upper, "translation")
    if p != q:
        raise UnsupportedError("the kernel bound needs p = q; pass M_j explicitly")
    kernel_l1, chain, l1, dd = kernel_chain(fam, j, X, Y, opts)
    return MultiplierBounds(lower, kernel_l1, "kernel", kernel_l1, chain, l1, dd)


# ---------------------------------------------------------------------------
# Stein check


@dataclass
class SteinReport:
    m0_lower: float
    m0_upper: float
    m1_lower: float
    m1_upper: float
    c_empirical: float
    samples: int
    violations: int
    boundary_identity: float | None = None
    ratios: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "m0_lower": self.m0_lower, "m0_upper": self.m0_upper,
            "m1_lower": self.m1_lower, "m1_upper": self.m1_upper,
            "c_empirical": self.c_empirical, "samples": self.samples,
            "violations": self.violations,
        }


@dataclass(frozen=True)
class SteinOptions:
    samples: int = 200
    seed: int = 0
    suite_constant: float = 10.0
    ascent_steps: int = 10
    m_bounds: tuple | None = None
    multiplier: MultiplierOptions = field(default_factory=MultiplierOptions)
    quad: QuadOptions = field(default_factory=QuadOptions)
    mean: MeanOptions = field(default_factory=lambda: MeanOptions(iterations=200, patience=50, lbfgs_iters=100))
    identity_check: bool = True


def target_params(params):
    return InterpParams(params.theta, params.q0, params.q1)


def norm_ratio(T, coupleX, coupleY, params, x, quad=None):
    """``||T x||_{(Y)_{theta, q}} / ||x||_{(X)_{theta, p}}``."""
    num = real_interp_norm(coupleY, target_params(params), T @ x, quad)
    den = real_interp_norm(coupleX, params, x, quad)
    return num / den


def _ascent(T, coupleX, coupleY, params, x, value, steps, rng, quad):
    """Random-direction hill climbing with a shrinking radius; returns every evaluated ratio."""
    radius = 0.5
    seen = []
    for _ in range(steps):
        cand = x + radius * np.abs(x).max() * (rng.normal(size=x.size) + 1j * rng.normal(size=x.size))
        v = norm_ratio(T, coupleX, coupleY, params, cand, quad)
        seen.append(v)
        if v > value:
            x, value = cand, v
        else:
            radius *= 0.5
    return seen


def boundary_identity(fam, coupleX, params, x, M0, M1, opts=None):
    """Relative deviation in the boundary identity for ``h = (M0/M1)^{z - theta} T f``.

    ``f`` comes from the minimising mean representation of ``x``. The left
    side transforms ``h(j + i t)`` directly; the right side is
    ``(M0/M1)^{j - theta}`` times the transform of ``T_j f_j``. The factor
    ``(M0/M1)^{i t}`` is a modulation, so the left side is evaluated on the
    frequency grid shifted by ``log(M0/M1)``.
    """
    opts = opts or SteinOptions()
    rep, _ = minimize_mean_norm(coupleX, params, x, opts=opts.mean)
    sf = StripFunction(params.theta, rep.gf)
    t0, ht = trace_grid(sf)
    t = t0 + ht * np.arange(rep.gf.m)
    shift = math.log(M0 / M1)
    worst = 0.0
    for j in (0, 1):
        z = j + 1j * t
        fz = strip_eval(sf, z)
        Tz = family_eval(fam, z)
        hz = np.exp((z - params.theta) * shift)[:, None] * np.einsum("kab,kb->ka", Tz, fz)
        lhs = fourier_forward(GridFunction(t0, ht, hz), "direct", xi0=rep.gf.t0 + shift)
        tf = np.einsum("kab,kb->ka", Tz, fz)
        rhs = fourier_forward(GridFunction(t0, ht, tf), "fft", xi0=rep.gf.t0)
        rhs = rhs.values * (M0 / M1) ** (j - params.theta)
        scale = np.abs(rhs).max()
        worst = max(worst, float(np.abs(lhs.values - rhs).max() / scale))
    return worst


def stein_check(fam, coupleX, coupleY, params, opts=None):
    """Measure ``C`` in the Stein bound on sampled vectors.

    Samples are the coordinate vectors, random complex vectors, and a short
    random ascent from the worst of those. ``c_empirical`` is the largest
    norm ratio divided by ``M0^{1-theta} M1^theta`` (upper bounds).
    """
    opts = opts or SteinOptions()
    n = coupleX.dim
    if fam.n_in != n or fam.n_out != coupleY.dim:
        raise InputError("family dimensions do not match the couples")
    theta = params.theta
    if opts.m_bounds is not None:
        (m0l, m0u), (m1l, m1u) = opts.m_bounds
    else:
        b = [multiplier_norm_bounds(fam, j, coupleX.space(j), coupleY.space(j),
                                    params.pj(j), params.qj(j), opts.multiplier) for j in (0, 1)]
        (m0l, m0u), (m1l, m1u) = (b[0].lower, b[0].upper), (b[1].lower, b[1].upper)
    scale = m0u ** (1.0 - theta) * m1u ** theta
    T = family_eval(fam, theta)
    rng = np.random.default_rng(opts.seed)
    xs = list(np.eye(n, dtype=complex))
    n_random = max(0, opts.samples - n - opts.ascent_steps)
    xs += list(rng.normal(size=(n_random, n)) + 1j * rng.normal(size=(n_random, n)))
    ratios = ordered_map(partial(norm_ratio, T, coupleX, coupleY, params, quad=opts.quad), xs)
    k = int(np.argmax(ratios))
    if opts.ascent_steps > 0:
        ratios += _ascent(T, coupleX, coupleY, params, xs[k], ratios[k], opts.ascent_steps, rng, opts.quad)
    normalised = [r / scale for r in ratios]
    violations = sum(1 for r in normalised if r > opts.suite_constant)
    ident = None
    if opts.identity_check:
        ident = boundary_identity(fam, coupleX, params, xs[min(n, len(xs) - 1)], m0u, m1u, opts)
    return SteinReport(m0l, m0u, m1l, m1u, max(normalised), len(normalised),
                       violations, ident, normalised)


def interp_operator_norm_lower(coupleX, coupleY, params, matrix, starts=16, steps=20, seed=0, quad=None):
    """Lower bound for ``||matrix||`` between the real interpolation spaces.

    Maximises the norm ratio over coordinate vectors and random starts,
    then refines the best with coordinate-wise multiplicative ascent.
    """
    T = np.atleast_2d(np.asarray(matrix, dtype=complex))
    n = coupleX.dim
    if T.shape != (coupleY.dim, n):
        raise InputError("matrix shape does not match the couples")
    rng = np.random.default_rng(seed)
    xs = list(np.eye(n, dtype=complex)) + [np.ones(n, dtype=complex)]
    xs += list(rng.normal(size=(starts, n)) + 1j * rng.normal(size=(starts, n)))
    vals = [norm_ratio(T, coupleX, coupleY, params, x, quad) for x in xs]
    k = int(np.argmax(vals))
    x, best = xs[k], vals[k]
    if n == 1:
        return float(best)
    factor = 2.0
    for _ in range(steps):
        improved = False
        for i in range(n):
            for f in (factor, 1.0 / factor):
                cand = x.copy()
                cand[i] *= f
                v = norm_ratio(T, coupleX, coupleY, params, cand, quad)
                if v > best:
                    x, best, improved = cand, v, True
        if not improved:
            factor = math.sqrt(factor)
            if factor < 1.0 + 1e-3:
                break
    return float(best)


def weighted_couples(p0, p1, w0, w1):
    """``(l^{p0}_{w0}, l^{p1}_{w1})`` and its unweighted counterpart."""
    n = len(w0)
    X = BanachCouple(WeightedLrSpace(p0, w0), WeightedLrSpace(p1, w1))
    Y = BanachCouple(WeightedLrSpace.unit(n, p0), WeightedLrSpace.unit(n, p1))
    return X, Y
