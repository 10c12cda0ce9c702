"""Discretised mean-method norm.

A representation of ``x`` is a grid function ``f`` with ``h * sum_k f(t_k) = x``;
its cost is

    max_j || t -> e^{t (j - theta)} f(t) ||_{L^{p_j}(X_j)}

and the mean-method norm is the infimum of the cost over representations.
This module evaluates the cost, builds explicit representations from
K-functional decompositions, applies the bin-smoothing and tail-truncation
operations, and minimises the cost over the affine set of representations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import InputError
from .grid import GridFunction, default_grid
from .kfunctional import KOptions, k_values
from .spaces import INF, BanachCouple, WeightedLrSpace, as_vector, conjugate, lr_norm, norm

BUMP_SHARPNESS = 0.25


@dataclass
class MeanRepresentation:
    gf: GridFunction
    target: np.ndarray = field(repr=False)
    residual: float
    info: dict = field(default_factory=dict)


def _log_sample_norms(gf, space):
    if gf.n != space.dim:
        raise InputError(f"dimension mismatch: grid function has {gf.n} coordinates, space has {space.dim}")
    with np.errstate(divide="ignore"):
        return np.log(norm(space, gf.values))


def boundary_weighted_norm(gf, space, theta, j, pj):
    """``(h sum_k (e^{t_k (j - theta)} ||f(t_k)||_{X_j})^{p_j})^{1/p_j}``, max for ``p_j = inf``."""
    logs = (j - theta) * gf.times + _log_sample_norms(gf, space)
    top = logs.max()
    if top == -INF:
        return 0.0
    if pj == INF:
        return float(math.exp(top))
    s = gf.h * np.exp(pj * (logs - top)).sum()
    return float(math.exp(top) * s ** (1.0 / pj))


def boundary_norms(gf, couple, params):
    return tuple(boundary_weighted_norm(gf, couple.space(j), params.theta, j, params.pj(j)) for j in (0, 1))


def mean_objective(gf, couple, params):
    return max(boundary_norms(gf, couple, params))


def representation_residual(couple, gf, x, k_opts=None):
    """``||h sum f - x||_{X0+X1}``."""
    r = gf.integral() - as_vector(x, couple.dim)
    if not np.any(r):
        return 0.0
    vals, _, _ = k_values(couple, r, [1.0], k_opts)
    return float(vals[0])


def sum_space_norm(couple, x, k_opts=None):
    vals, _, _ = k_values(couple, x, [1.0], k_opts)
    return float(vals[0])


# ---------------------------------------------------------------------------
# explicit constructions


def bump_profile(u, sharpness=BUMP_SHARPNESS):
    """Unnormalised ``exp(-a / (u (1 - u)))`` on ``(0, 1)``, zero elsewhere."""
    u = np.asarray(u, dtype=float)
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(u)
    ui = u[inside]
    out[inside] = np.exp(-sharpness / (ui * (1.0 - ui)))
    return out


def _unit_bins(times):
    return np.floor(times + 1e-9).astype(np.int64)


def smooth_representation(gf, sharpness=BUMP_SHARPNESS):
    """Replace ``f`` on each bin ``[k, k+1)`` by its bin mass times a normalised bump.

    The bump is normalised on the samples of its own bin, so every bin mass
    and hence the integral is preserved exactly.
    """
    times = gf.times
    bins = _unit_bins(times)
    raw = bump_profile(times - bins, sharpness)
    _, inv = np.unique(bins, return_inverse=True)
    mass = np.zeros((inv.max() + 1, gf.n), dtype=complex)
    np.add.at(mass, inv, gf.values)
    mass *= gf.h
    wsum = gf.h * np.bincount(inv, weights=raw)
    count = np.bincount(inv)
    profile = np.where(wsum[inv] > 0, raw / np.where(wsum[inv] > 0, wsum[inv], 1.0), 1.0 / (count[inv] * gf.h))
    return gf.with_values(profile[:, None] * mass[inv])


def bump_function(grid, x, sharpness=BUMP_SHARPNESS):
    """``x`` times the bump on ``[0, 1)``, normalised on the grid samples."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    times = grid.times
    raw = np.where(_unit_bins(times) == 0, bump_profile(times, sharpness), 0.0)
    raw = raw / (grid.h * raw.sum())
    return GridFunction(grid.t0, grid.h, raw[:, None] * x[None, :])


def construct_mean_representation(couple, params, x, grid=None, smooth=True,
                                  sharpness=BUMP_SHARPNESS, k_opts=None):
    """Representation built by telescoping K-decompositions.

    With ``x0(tau)`` the near-optimal ``X0`` part of ``x`` at ``K(tau, x)``,
    sample ``k`` carries ``(x0(e^{t_k + h/2}) - x0(e^{t_k - h/2})) / h``.
    What the grid cannot reach (``x0`` at the far left, ``x1`` at the far
    right) is added to the end samples, so the integral equals ``x``.
    """
    x = as_vector(x, couple.dim)
    if not np.any(x):
        raise InputError("x must be nonzero")
    grid = grid or default_grid(params.theta)
    h, m = grid.h, grid.m
    edges = grid.t0 - 0.5 * h + h * np.arange(m + 1)
    lo, hi = couple.thresholds
    clipped = np.clip(edges, math.log(lo) - 1.0, math.log(hi) + 1.0)
    _, _, x0s = k_values(couple, x, np.exp(clipped), k_opts)
    vals = np.diff(x0s, axis=0) / h
    vals[0] += x0s[0] / h
    vals[-1] += (x - x0s[-1]) / h
    gf = GridFunction(grid.t0, h, vals)
    if smooth:
        gf = smooth_representation(gf, sharpness)
    return MeanRepresentation(gf, x, representation_residual(couple, gf, x, k_opts))


def _check_cut(gf, n_cut):
    if int(n_cut) != n_cut or n_cut < 1:
        raise InputError(f"n_cut must be an integer >= 1 (blocks on [n-1, n) and [-n, -n+1) overlap otherwise), got {n_cut}")
    bins = _unit_bins(gf.times)
    n = int(n_cut)
    if not (np.any(bins == n - 1) and np.any(bins == -n)):
        raise InputError(f"n_cut={n} is outside the grid range")
    return bins, n


def truncate_representation(gf, n_cut):
    """Keep ``[-n, n)``; the masses beyond become flat blocks on ``[n-1, n)`` and ``[-n, -n+1)``."""
    bins, n = _check_cut(gf, n_cut)
    plus, minus = bins >= n, bins < -n
    y_plus = gf.h * gf.values[plus].sum(axis=0)
    y_minus = gf.h * gf.values[minus].sum(axis=0)
    out = gf.values.copy()
    out[plus | minus] = 0.0
    top, bottom = bins == n - 1, bins == -n
    out[top] += y_plus / (top.sum() * gf.h)
    out[bottom] += y_minus / (bottom.sum() * gf.h)
    return gf.with_values(out)


def truncation_tail_bounds(gf, couple, params, n_cut):
    """Measured tail masses against their Hoelder majorants.

    ``||y_+||_{X1} <= (h sum_{t_k >= n} e^{-(1-theta) p1' t_k})^{1/p1'} B_1`` holds
    exactly on the grid; ``e^{-n (1-theta)} / (1-theta) * objective`` is its
    continuous counterpart. Mirror statements hold for ``y_-`` in ``X0``.
    """
    bins, n = _check_cut(gf, n_cut)
    theta = params.theta
    t = gf.times
    plus, minus = bins >= n, bins < -n
    y_plus = gf.h * gf.values[plus].sum(axis=0)
    y_minus = gf.h * gf.values[minus].sum(axis=0)
    b0, b1 = boundary_norms(gf, couple, params)
    objective = max(b0, b1)

    def holder(mask, rate, q):
        if not mask.any():
            return 0.0
        if q == INF:
            return float(np.exp(rate * t[mask]).max())
        return float((gf.h * np.exp(q * rate * t[mask]).sum()) ** (1.0 / q))

    return {
        "y_plus_norm": float(norm(couple.X1, y_plus)),
        "y_minus_norm": float(norm(couple.X0, y_minus)),
        "y_plus_holder": holder(plus, -(1.0 - theta), conjugate(params.p1)) * b1,
        "y_minus_holder": holder(minus, theta, conjugate(params.p0)) * b0,
        "y_plus_simple": math.exp(-n * (1.0 - theta)) / (1.0 - theta) * objective,
        "y_minus_simple": math.exp(-n * theta) / theta * objective,
    }


# ---------------------------------------------------------------------------
# minimisation


@dataclass(frozen=True)
class MeanOptions:
    iterations: int = 5000
    patience: int = 500
    lbfgs_iters: int = 400
    smooth_start: bool = True
    sharpness: float = BUMP_SHARPNESS
    k_opts: KOptions = field(default_factory=KOptions)


def _lse(a, axis):
    top = a.max(axis=axis, keepdims=True)
    return np.log(np.exp(a - top).sum(axis=axis)) + np.squeeze(top, axis)


class _LogCost:
    """Smoothed log-cost of ``f = x * rho`` with ``rho`` a per-coordinate softmax.

    ``psi[i]`` (coordinate-major, shape ``(n, m)``) parametrises
    ``h rho[:, i] = softmax(psi[i])`` so every coordinate integrates to one.
    Infinite exponents are replaced by ``power`` and the outer max by a
    log-sum-exp at temperature ``tau``.
    """

    def __init__(self, couple, params, a, times, h):
        self.theta, self.times, self.h = params.theta, times, h
        self.log_a = np.log(a)[:, None]
        self.log_w = [np.log(couple.space(j).weights)[:, None] for j in (0, 1)]
        self.r = [couple.space(j).exponent for j in (0, 1)]
        self.p = [params.pj(j) for j in (0, 1)]

    def __call__(self, flat, power, tau):
        psi = flat.reshape(self.log_a.size, -1)
        lse = _lse(psi, 1)[:, None]
        sigma = np.exp(psi - lse)
        log_rho = psi - lse - math.log(self.h)
        log_b, G = [], []
        for j in (0, 1):
            r = power if self.r[j] == INF else self.r[j]
            p = power if self.p[j] == INF else self.p[j]
            ell = r * (self.log_w[j] + self.log_a + log_rho)
            log_n = _lse(ell, 0)
            shares = np.exp(ell - log_n)
            lj = p * ((j - self.theta) * self.times + log_n / r)
            total = _lse(lj, 0)
            G.append(np.exp(lj - total) * shares)
            log_b.append((total + math.log(self.h)) / p)
        z = np.array(log_b) / tau
        cost = tau * _lse(z, 0)
        pi = np.exp(z - _lse(z, 0))
        g = pi[0] * G[0] + pi[1] * G[1]
        grad = g - sigma * g.sum(axis=1, keepdims=True)
        return float(cost), grad.ravel()


def _stages(couple, params):
    polyhedral = INF in (couple.X0.exponent, couple.X1.exponent, params.p0, params.p1)
    if polyhedral:
        return ((16.0, 1e-2), (64.0, 3e-3), (256.0, 1e-3), (1024.0, 3e-4), (4096.0, 1e-4))
    return ((1.0, 1e-2), (1.0, 1e-3), (1.0, 1e-4), (1.0, 1e-5))


def _bathtub(couple, params, a, times, h):
    theta = params.theta
    n0 = float(norm(couple.X0, a))
    n1 = float(norm(couple.X1, a))
    centre = math.log(n0 / n1)
    s = times - centre
    rho = np.minimum(np.exp(theta * s), np.exp(-(1.0 - theta) * s))
    rho = rho / (h * rho.sum())
    return np.repeat(rho[:, None], a.size, axis=1)


def _cost_and_subgradient(f, couple, params, times, h):
    """Exact cost of ``f`` and one subgradient (real inner product on values).

    Ties in the outer max and in ``l^inf`` maxima (within 1e-12) average the
    branch subgradients.
    """
    theta = params.theta
    modulus = np.abs(f)
    safe = np.where(modulus > 0, modulus, 1.0)
    # componentwise: complex division by a subnormal modulus overflows
    phase = np.where(modulus > 0, f.real / safe + 1j * (f.imag / safe), 0.0)
    log_b, parts = [], []
    for j in (0, 1):
        space, p = couple.space(j), params.pj(j)
        w, r = space.weights, space.exponent
        wy = w * modulus
        n_k = lr_norm(wy, r)
        with np.errstate(divide="ignore"):
            log_v = (j - theta) * times + np.log(n_k)
        top = log_v.max()
        if top == -INF:
            log_b.append(-INF)
            parts.append(None)
            continue
        if p == INF:
            lb = top
            hit = log_v >= top + math.log1p(-1e-12)
            dB = np.where(hit, np.exp(log_v - lb) / np.where(n_k > 0, n_k, 1.0), 0.0) / hit.sum()
        else:
            lb = (math.log(h * np.exp(p * (log_v - top)).sum()) + p * top) / p
            dB = h * np.exp(p * (log_v - lb)) / np.where(n_k > 0, n_k, 1.0)
        # dB is d(B)/d(n_k) divided by B, times ... rescaled below
        if r == INF:
            hit = (wy >= wy.max(axis=1, keepdims=True) * (1.0 - 1e-12)) & (wy > 0)
            dn = np.where(hit, w / np.maximum(hit.sum(axis=1, keepdims=True), 1), 0.0)
        else:
            safe = np.where(n_k > 0, n_k, 1.0)[:, None]
            dn = w * (wy / safe) ** (r - 1.0)
        log_b.append(lb)
        parts.append(dB[:, None] * dn)
    top = max(log_b)
    value = math.exp(top)
    active = [j for j in (0, 1) if log_b[j] >= top + math.log1p(-1e-12) and parts[j] is not None]
    g = np.zeros_like(f)
    for j in active:
        g = g + value * parts[j] * phase / len(active)
    return value, g


def _project(values, x, h, metric):
    """Nearest point of ``{h sum f = x}`` in the norm ``sum_k |f_k|^2 / metric_k``.

    With ``metric = 1`` this is the Euclidean projection. The minimiser uses
    ``metric`` proportional to the squared bathtub profile, so corrections
    land where the boundary weights are small instead of being amplified
    by ``e^{|t|}`` at the ends of the grid.
    """
    resid = h * values.sum(axis=0) - x
    return values - metric[:, None] * resid[None, :] / (h * metric.sum())


def _subgradient_run(f, g, scale, iterations, patience, couple, params, x, metric, times, h):
    best, best_val = f, INF
    stale = 0
    k = 0
    for k in range(iterations):
        f = _project(f - scale / (1.0 + k) ** 0.6 * g, x, h, metric)
        v, g = _cost_and_subgradient(f, couple, params, times, h)
        g = metric[:, None] * g
        if v < best_val * (1.0 - 1e-12):
            best, best_val, stale = f, v, 0
        else:
            stale += 1
            if stale >= patience:
                break
    return best, best_val, k + 1


def _polish(gf, couple, params, x, metric, opts):
    """Projected subgradient descent with steps ``a / (1 + k)^0.6`` in the ``metric`` geometry.

    Single subgradient steps on a max-type cost are often uphill, so the
    scale ``a`` is chosen by short trial runs rather than a one-step test.
    """
    times, h = gf.times, gf.h
    f = gf.values
    v0, g = _cost_and_subgradient(f, couple, params, times, h)
    g = metric[:, None] * g
    gnorm = float(np.sqrt(h * (np.abs(g) ** 2 / metric[:, None]).sum()))
    if gnorm == 0.0 or opts.iterations <= 0:
        return gf, v0, 0
    trial_len = min(25, opts.iterations)
    scale, scale_val = 0.0, v0
    for trial in v0 / gnorm * 10.0 ** -np.arange(1, 6):
        _, val, _ = _subgradient_run(f, g, trial, trial_len, trial_len, couple, params, x, metric, times, h)
        if val < scale_val:
            scale, scale_val = trial, val
    if scale == 0.0:
        return gf, v0, 0
    best, best_val, iters = _subgradient_run(f, g, scale, opts.iterations, opts.patience,
                                             couple, params, x, metric, times, h)
    if best_val >= v0:
        return gf, v0, iters
    return gf.with_values(best), best_val, iters


def _canonical_moduli(x):
    """``|x| / max|x|`` rounded to 40 bits, so ``x`` and ``lambda x`` give identical inputs."""
    a = np.abs(x) / np.abs(x).max()
    exp = np.floor(np.log2(a))
    return np.ldexp(np.round(np.ldexp(a, 40 - exp.astype(int))), exp.astype(int) - 40)


def minimize_mean_norm(couple, params, x, grid=None, opts=None):
    """Minimise the mean-method cost over representations of ``x`` on ``grid``.

    Returns ``(representation, value)``. The value is the exact cost of the
    returned representation and never exceeds that of the explicit
    construction it starts from.

    Lattice norms only see moduli, so the search runs on ``f = x * rho`` with
    ``rho[:, i] >= 0`` integrating to one; this loses nothing. The search
    itself is done on the canonical moduli of ``x`` and mapped back at the
    end, which makes the result exactly homogeneous in ``x``.
    """
    opts = opts or MeanOptions()
    x = as_vector(x, couple.dim)
    if not np.any(x):
        raise InputError("x must be nonzero")
    grid = grid or default_grid(params.theta)
    nz = np.abs(x) > 0
    sub = BanachCouple(WeightedLrSpace(couple.X0.exponent, couple.X0.weights[nz]),
                       WeightedLrSpace(couple.X1.exponent, couple.X1.weights[nz]))
    a = _canonical_moduli(x[nz])
    times, h = grid.times, grid.h

    def on_grid(rho):
        return GridFunction(grid.t0, h, rho * a[None, :])

    def normalise(f):
        return f.values.real / a[None, :]

    start = construct_mean_representation(sub, params, a, grid, opts.smooth_start,
                                          opts.sharpness, opts.k_opts)
    rho_start = normalise(start.gf)
    tub = _bathtub(sub, params, a, times, h)
    rho_abs = np.abs(rho_start) / (h * np.abs(rho_start).sum(axis=0))
    cands = [rho_abs, tub]
    costs = [mean_objective(on_grid(r), sub, params) for r in cands]
    best_rho = cands[int(np.argmin(costs))]
    best_val = min(costs)

    cost = _LogCost(sub, params, a, times, h)
    # softmax gradients vanish on tiny entries, so start from a mixture with
    # the everywhere-positive bathtub rather than from a concentrated profile
    psi = np.log((0.5 * best_rho + 0.5 * tub) * h).T.ravel()
    for power, tau in _stages(couple, params):
        res = minimize(cost, psi, args=(power, tau), jac=True, method="L-BFGS-B",
                       options={"maxiter": opts.lbfgs_iters, "gtol": 1e-13, "ftol": 1e-15})
        psi = res.x
        p2 = psi.reshape(a.size, -1)
        rho = (np.exp(p2 - _lse(p2, 1)[:, None]) / h).T
        v = mean_objective(on_grid(rho), sub, params)
        if v < best_val:
            best_rho, best_val = rho, v

    metric = tub[:, 0] ** 2
    metric = metric / metric.max()
    polished, pv, iters = _polish(on_grid(best_rho), sub, params, a.astype(complex), metric, opts)
    final_rho = normalise(polished)

    def lift(rho):
        vals = np.zeros((grid.m, couple.dim), dtype=complex)
        vals[:, nz] = rho * x[nz][None, :]
        return GridFunction(grid.t0, h, vals)

    out = lift(final_rho)
    value = mean_objective(out, couple, params)
    initial = lift(rho_start)
    init_val = mean_objective(initial, couple, params)
    if value > init_val:
        out, value = initial, init_val
    rep = MeanRepresentation(out, x, representation_residual(couple, out, x, opts.k_opts), {
        "initial_value": init_val,
        "iterations": iters,
        "capped": iters >= opts.iterations,
    })
    return rep, value
