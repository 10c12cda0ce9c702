"""The K-functional of a couple of weighted l^r spaces.

    K(t, x) = inf { ||x0||_{X0} + t ||x1||_{X1} : x0 + x1 = x }

Both norms are lattice norms, so only the moduli ``|x0_i|`` and
``|x1_i|`` matter and any decomposition can be replaced by a colinear one
``x0 = s * x`` with ``s in [0,1]^n`` without increasing the objective.
The solver therefore works in the ``n`` real variables ``u_i = s_i |x_i|``.

The objective is convex and nonsmooth. It is minimised by smoothing
(``|y| -> sqrt(y^2 + mu^2)`` for finite exponents, log-sum-exp for
``r = inf``) with a continuation in ``mu`` and a projected Newton method
on the box ``0 <= u <= |x|``. Gradients of the smoothed norms lie in the
dual unit balls, which gives a rigorous lower bound for every solve:

    K(t, x) >= sum_i |x_i| min(w0_i z0_i, t w1_i z1_i)

for any ``z_j >= 0`` in the unit ball of the dual of ``l^{r_j}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, SolverError, UnsupportedError
from .spaces import INF, as_vector, conjugate, lr_norm, norm

MU_SCHEDULE = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)


@dataclass(frozen=True)
class KOptions:
    tol: float = 1e-8
    max_iters: int = 60
    mu_schedule: tuple = MU_SCHEDULE
    raise_on_gap: bool = True


@dataclass
class Decomposition:
    """Near-optimal split ``x = x0 + x1`` for the K-functional at ``t``.

    ``value`` is attained by ``(x0, x1)``; ``lower`` is a certified lower
    bound for ``K(t, x)``, so ``gap`` bounds the relative suboptimality.
    """

    t: float
    x0: np.ndarray = field(repr=False)
    x1: np.ndarray = field(repr=False)
    value: float
    lower: float = 0.0

    @property
    def gap(self):
        if self.value == 0.0:
            return 0.0
        return max(self.value - self.lower, 0.0) / self.value


# ---------------------------------------------------------------------------
# smoothed norms on the nonnegative orthant, batched over the leading axis


def _smooth_norm(y, r, mu):
    """Smoothed ``||y||_r`` for ``y >= 0`` of shape (B, n); returns N, grad, Hessian."""
    B, n = y.shape
    if r == INF:
        m = y.max(axis=1, keepdims=True)
        e = np.exp((y - m) / mu)
        S = e.sum(axis=1, keepdims=True)
        g = e / S
        N = m[:, 0] + mu * np.log(S[:, 0])
        H = (g[:, :, None] * np.eye(n)[None] - g[:, :, None] * g[:, None, :]) / mu
        return N, g, H
    s = np.sqrt(y * y + mu * mu)
    smax = s.max(axis=1, keepdims=True)
    N = smax[:, 0] * ((s / smax) ** r).sum(axis=1) ** (1.0 / r)
    ratio = (s / N[:, None]) ** (r - 1.0)
    g = ratio * y / s
    diag = ratio * ((r - 1.0) * y * y + mu * mu) / s ** 3
    H = diag[:, :, None] * np.eye(n)[None] - (r - 1.0) / N[:, None, None] * g[:, :, None] * g[:, None, :]
    return N, g, H


def _exact_dual(y, r):
    """A maximiser of <z, y> over the dual unit ball (z >= 0), batched."""
    B, n = y.shape
    if r == 1.0:
        return np.ones_like(y)
    if r == INF:
        z = np.zeros_like(y)
        z[np.arange(B), y.argmax(axis=1)] = 1.0
        return z
    N = lr_norm(y, r)
    safe = np.where(N > 0, N, 1.0)[:, None]
    z = (y / safe) ** (r - 1.0)
    return np.where(N[:, None] > 0, z, 0.0)


class _Reduced:
    """Reduced problem ``min_u ||w0 u||_{r0} + t ||w1 (a - u)||_{r1}``, 0 <= u <= a."""

    def __init__(self, a, w0, r0, w1, r1):
        self.a, self.w0, self.r0, self.w1, self.r1 = a, w0, r0, w1, r1
        self.scale0 = float((w0 * a).max())
        self.scale1 = float((w1 * a).max())

    def exact(self, u, t):
        return lr_norm(self.w0 * u, self.r0) + t * lr_norm(self.w1 * (self.a - u), self.r1)

    def smooth(self, u, t, mu):
        N0, g0, H0 = _smooth_norm(self.w0 * u, self.r0, mu * self.scale0)
        N1, g1, H1 = _smooth_norm(self.w1 * (self.a - u), self.r1, mu * self.scale1)
        tt = t[:, None]
        phi = N0 + t * N1
        grad = self.w0 * g0 - tt * self.w1 * g1
        H = self.w0[None, :, None] * H0 * self.w0[None, None, :]
        H = H + tt[:, :, None] * (self.w1[None, :, None] * H1 * self.w1[None, None, :])
        return phi, grad, H, g0, g1

    def lower(self, t, z0, z1):
        return (self.a * np.minimum(self.w0 * z0, t[:, None] * self.w1 * z1)).sum(axis=1)

    def best_lower(self, t, z0, z1):
        """Lower bound from ``(z0, z1)`` and from each side's best response to the other."""
        tt = t[:, None]
        r0 = _to_ball(tt * self.w1 * z1 / self.w0, conjugate(self.r0))
        r1 = _to_ball(self.w0 * z0 / (tt * self.w1), conjugate(self.r1))
        out = [self.lower(t, z0, z1), self.lower(t, r0, z1), self.lower(t, z0, r1)]
        y0, y1 = self.w0 * z0, tt * self.w1 * z1
        for y in (y0, y1, 0.5 * (y0 + y1), np.minimum(y0, y1)):
            out.append(self.ratio_lower(t, y))
        return np.maximum.reduce(out)

    def ratio_lower(self, t, y):
        """``<a, y> / ||y||_*`` where ``||.||_*`` is the dual norm of ``K(t, .)``."""
        d0 = lr_norm(y / self.w0, conjugate(self.r0))
        d1 = lr_norm(y / self.w1, conjugate(self.r1)) / t
        dn = np.maximum(d0, d1)
        return np.where(dn > 0, (self.a * y).sum(axis=1) / np.where(dn > 0, dn, 1.0), 0.0)


def _to_ball(z, q):
    n = lr_norm(z, q)
    return z / np.maximum(n, 1.0)[:, None]


def _colinear_start(prob, t, levels=(0.0, 0.25, 0.5, 0.75, 1.0), sweeps=2):
    B, n = t.size, prob.a.size
    s = np.full((B, n), 0.5)
    best = prob.exact(s * prob.a, t)
    for _ in range(sweeps):
        for i in range(n):
            for lev in levels:
                trial = s.copy()
                trial[:, i] = lev
                v = prob.exact(trial * prob.a, t)
                better = v < best
                s[better] = trial[better]
                best = np.where(better, v, best)
    return s * prob.a


def _newton_stage(prob, u, t, mu, max_iters):
    a = prob.a
    B, n = u.shape
    eye = np.eye(n)[None]
    active = np.ones(B, dtype=bool)
    for _ in range(max_iters):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        ua, ta = u[idx], t[idx]
        phi, g, H, _, _ = prob.smooth(ua, ta, mu)
        eps = 1e-13 * a
        fixed = ((ua <= eps) & (g > 0)) | ((ua >= a - eps) & (g < 0))
        free = ~fixed
        gm = np.where(free, g, 0.0)
        Hm = H * (free[:, :, None] & free[:, None, :]) + eye * fixed[:, :, None]
        dscale = np.abs(np.diagonal(Hm, axis1=1, axis2=2)).max(axis=1)
        Hm = Hm + (1e-12 * dscale + 1e-300)[:, None, None] * eye
        d = -np.linalg.solve(Hm, gm[:, :, None])[:, :, 0]
        decrement = -(gm * d).sum(axis=1)
        done = decrement <= 1e-26 * np.maximum(np.abs(phi), 1e-300)
        step = np.ones(idx.size)
        accepted = np.zeros(idx.size, dtype=bool)
        unew = ua.copy()
        for direction in (d, -gm / np.maximum(np.abs(np.diagonal(H, axis1=1, axis2=2)), 1e-300)):
            step[:] = 1.0
            pending = ~accepted & ~done
            for _ in range(50):
                if not pending.any():
                    break
                trial = np.clip(ua + step[:, None] * direction, 0.0, a)
                ptrial, _, _, _, _ = prob.smooth(trial, ta, mu)
                # near the optimum phi is flat to rounding; ties must not stall Newton
                slack = 8e-16 * np.abs(phi)
                ok = pending & (ptrial <= phi + 1e-4 * (g * (trial - ua)).sum(axis=1) + slack)
                unew[ok] = trial[ok]
                accepted |= ok
                pending &= ~ok
                step[pending] *= 0.5
        moved = np.abs(unew - ua).max(axis=1)
        u[idx] = unew
        stalled = ~accepted | (moved <= 1e-15 * a.max())
        active[idx[done | stalled]] = False
    return u


def _solve_reduced(prob, t, opts):
    """Batched solve. Returns (u, value, lower)."""
    a = prob.a
    B, n = t.size, a.size
    cands = [np.zeros((B, n)), np.broadcast_to(a, (B, n)).copy(), _colinear_start(prob, t)]
    best_u = cands[0]
    best_v = prob.exact(best_u, t)
    for c in cands[1:]:
        v = prob.exact(c, t)
        better = v < best_v
        best_u = np.where(better[:, None], c, best_u)
        best_v = np.where(better, v, best_v)
    lower = np.zeros(B)
    u = best_u.copy()
    for mu in opts.mu_schedule:
        u = _newton_stage(prob, u, t, mu, opts.max_iters)
        _, _, _, g0, g1 = prob.smooth(u, t, mu)
        lower = np.maximum(lower, prob.best_lower(t, g0, g1))
        for c in (u, _snap(u, a)):
            v = prob.exact(c, t)
            better = v < best_v
            best_u = np.where(better[:, None], c, best_u)
            best_v = np.where(better, v, best_v)
    z0 = _exact_dual(prob.w0 * best_u, prob.r0)
    z1 = _exact_dual(prob.w1 * (a - best_u), prob.r1)
    lower = np.maximum(lower, prob.best_lower(t, z0, z1))
    return best_u, best_v, np.minimum(lower, best_v)


def _snap(u, a, rel=1e-7):
    out = np.where(u <= rel * a, 0.0, u)
    return np.where(out >= (1 - rel) * a, a, out)


def _level_solve(prob, t, width=1e-13):
    """Exact path when one exponent is infinite.

    Fixing the sup-level ``s`` of the infinite side, the other side is
    minimised coordinatewise, leaving a convex function of ``s`` alone.
    Golden-section search brackets the minimiser; convexity turns the
    final bracket into a rigorous lower bound.
    """
    a = prob.a
    if prob.r0 == INF:
        top = float((prob.w0 * a).max())

        def split(s):
            return np.minimum(a, s[:, None] / prob.w0)
    else:
        top = float((prob.w1 * a).max())

        def split(s):
            return np.maximum(a - s[:, None] / prob.w1, 0.0)

    def f(s):
        return prob.exact(split(s), t)

    B = t.size
    g = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = np.zeros(B), np.full(B, top)
    m1, m2 = hi - g * (hi - lo), lo + g * (hi - lo)
    f1, f2 = f(m1), f(m2)
    while np.any(hi - lo > width * top):
        left = f1 <= f2
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
        nm1 = np.where(left, hi - g * (hi - lo), m2)
        nm2 = np.where(left, m1, lo + g * (hi - lo))
        fn = f(np.where(left, nm1, nm2))
        f1, f2 = np.where(left, fn, f2), np.where(left, f1, fn)
        m1, m2 = nm1, nm2
    ends = [lo, m1, m2, hi]
    vals = [f(e) for e in ends]
    best = np.argmin(np.stack(vals), axis=0)
    s_best = np.choose(best, ends)
    u = split(s_best)
    v = prob.exact(u, t)
    # convex minorant: the secant through (lo, m1) extended right and the one
    # through (m2, hi) extended left bound f on the whole bracket
    fl, fm1, fm2, fh = vals
    sl = (fm1 - fl) / np.maximum(m1 - lo, 1e-300)
    sr = (fh - fm2) / np.maximum(hi - m2, 1e-300)
    floor_right = np.where(sl < 0, fm1 + sl * (hi - m1), fm1)
    floor_left = np.where(sr > 0, fm2 - sr * (m2 - lo), fm2)
    lower = np.minimum.reduce([floor_right, floor_left, fl, fh, v])
    return u, v, lower


def _l1_closed_form(prob, t):
    take0 = prob.w0[None, :] <= t[:, None] * prob.w1[None, :]
    u = np.where(take0, prob.a[None, :], 0.0)
    v = prob.exact(u, t)
    return u, v, v.copy()


def _l1_dual_solve(prob, t):
    """Exact path for ``r0 = 1`` and ``1 < r1 < inf`` through the dual problem.

    ``K(t) = max <a, y>`` over ``0 <= y <= w0`` and ``||y / w1||_q <= t``.
    The maximiser is ``y = min(w0, nu b)`` with ``b = (a w1^q)^{r1 - 1}``;
    ``||y / w1||_q^q`` is piecewise a power of ``nu`` between the sorted
    breakpoints ``w0 / b``, so ``nu`` is found in closed form.
    """
    a, w0, w1 = prob.a, prob.w0, prob.w1
    r = prob.r1
    q = conjugate(r)
    b = np.exp((r - 1.0) * (np.log(a) + q * np.log(w1)))
    order = np.argsort(w0 / b)
    nu_k = (w0 / b)[order]
    c = ((w0 / w1) ** q)[order]
    d = ((b / w1) ** q)[order]
    C = np.concatenate([[0.0], np.cumsum(c)])
    D = np.concatenate([np.cumsum(d[::-1])[::-1], [0.0]])
    # g^q at each breakpoint, nondecreasing
    G = C[1:] + nu_k ** q * D[1:]
    tq = t ** q
    k = np.searchsorted(G, tq, side="right")
    Dk = np.where(k < a.size, D[np.minimum(k, a.size - 1)], 1.0)
    nu = np.where(k < a.size, (np.maximum(tq - C[k], 0.0) / Dk) ** (1.0 / q), np.inf)
    y = np.minimum(w0[None, :], nu[:, None] * b[None, :])
    clipped = nu[:, None] * b[None, :] >= w0[None, :]
    # primal: x1 is colinear with the l^q-dual direction of y / w1
    with np.errstate(divide="ignore", over="ignore"):
        mu = nu ** -(q - 1.0)
        x1 = np.where(clipped, np.minimum(a, mu[:, None] * (w0 / w1) ** (q - 1.0) / w1), a)
    x1 = np.where(np.isfinite(nu)[:, None], x1, 0.0)
    u = a - x1
    v = prob.exact(u, t)
    lower = prob.ratio_lower(t, y)
    return u, v, np.minimum(lower, v)


def _one_norm_solve(prob, t):
    if prob.r0 == 1.0:
        return _l1_dual_solve(prob, t)
    # K(t; X0, X1) = t K(1/t; X1, X0)
    swapped = _Reduced(prob.a, prob.w1, prob.r1, prob.w0, prob.r0)
    u, v, lo = _l1_dual_solve(swapped, 1.0 / t)
    return prob.a - u, t * v, t * lo


# ---------------------------------------------------------------------------


def k_values(couple, x, ts, opts=None):
    """K-functional at many ``t`` at once.

    Returns ``(values, lowers, x0s)`` with ``x0s`` of shape ``(len(ts), n)``.
    """
    opts = opts or KOptions()
    x = as_vector(x, couple.dim)
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(~(ts > 0)) or np.any(~np.isfinite(ts)):
        raise InputError("t must be positive and finite")
    T, n = ts.size, couple.dim
    a_full = np.abs(x)
    scale = float(a_full.max())
    x0s = np.zeros((T, n), dtype=complex)
    if scale == 0.0:
        return np.zeros(T), np.zeros(T), x0s
    a_full = a_full / scale
    nz = a_full > 0
    a = a_full[nz]
    w0, w1 = couple.X0.weights[nz], couple.X1.weights[nz]
    r0, r1 = couple.X0.exponent, couple.X1.exponent
    prob = _Reduced(a, w0, r0, w1, r1)
    N0 = float(lr_norm(w0 * a, r0))
    N1 = float(lr_norm(w1 * a, r1))
    c_lo, c_hi = couple.thresholds

    values = np.empty(T)
    lowers = np.empty(T)
    u_all = np.zeros((T, a.size))
    low = ts <= c_lo
    high = (ts >= c_hi) & ~low
    mid = ~(low | high)
    values[low] = lowers[low] = ts[low] * N1
    values[high] = lowers[high] = N0
    u_all[high] = a
    if mid.any():
        tm = ts[mid]
        if r0 == 1.0 and r1 == 1.0:
            u, v, lo = _l1_closed_form(prob, tm)
        elif INF in (r0, r1):
            u, v, lo = _level_solve(prob, tm)
        elif 1.0 in (r0, r1):
            u, v, lo = _one_norm_solve(prob, tm)
        else:
            u, v, lo = _solve_reduced(prob, tm, opts)
        u_all[mid], values[mid], lowers[mid] = u, v, lo
        gaps = (v - lo) / np.maximum(v, 1e-300)
        if opts.raise_on_gap and np.any(gaps > opts.tol):
            k = int(np.argmax(gaps))
            raise SolverError(
                f"K-solver gap {gaps[k]:.3e} exceeds tol {opts.tol:.1e} at t={tm[k]:.6g}",
                best_value=float(v[k] * scale),
            )
    phase = np.where(nz, x / np.where(np.abs(x) > 0, np.abs(x), 1.0), 0.0)
    x0s[:, nz] = u_all * scale * phase[nz]
    x0s[high] = x
    return values * scale, lowers * scale, x0s


def k_functional(couple, x, t, opts=None):
    """Minimising decomposition for ``K(t, x)``."""
    t = float(t)
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    x = as_vector(x, couple.dim)
    v, lo, x0s = k_values(couple, x, [t], opts)
    x0 = x0s[0]
    return Decomposition(t=t, x0=x0, x1=x - x0, value=float(v[0]), lower=float(lo[0]))


def decomposition_value(couple, t, x0, x1):
    return float(norm(couple.X0, x0) + t * norm(couple.X1, x1))


def sum_norm(couple, x):
    """``||x||_{X0+X1} = K(1, x)``."""
    return k_functional(couple, x, 1.0).value


# ---------------------------------------------------------------------------
# brute-force reference


def k_functional_oracle(couple, x, t, grid_density=1e-2, refine=6, colinear=False, window=12):
    """Exhaustive grid search for ``K(t, x)`` over free decompositions.

    Real ``x`` with ``n <= 2`` grids ``x0`` in a box around ``[0, x]``; a
    scalar complex ``x`` grids ``x0`` in the complex plane. After the
    first grid, ``refine`` zoom levels re-grid a window of ``window`` cells
    around the best point at 10x finer resolution. ``colinear=True``
    restricts the search to ``x0 = s x`` with real ``s``. The returned value
    is attained by a decomposition, so it upper-bounds ``K``.
    """
    x = as_vector(x, couple.dim)
    n = couple.dim
    t = float(t)
    if not t > 0:
        raise InputError("t must be positive")
    scale = float(np.abs(x).max())
    if scale == 0.0:
        return 0.0
    is_real = bool(np.all(x.imag == 0))

    def objective(x0):
        return norm(couple.X0, x0) + t * norm(couple.X1, x[None, :] - x0)

    if colinear:
        axes_lo = np.array([-0.5])
        axes_hi = np.array([1.5])
        embed = lambda pts: pts[:, :1] * x[None, :]
    elif is_real and n <= 2:
        xr = x.real
        axes_lo = np.minimum(0.0, xr) - 0.5 * scale
        axes_hi = np.maximum(0.0, xr) + 0.5 * scale
        embed = lambda pts: pts.astype(complex)
    elif n == 1:
        axes_lo = np.array([x[0].real, x[0].imag]) - 1.5 * scale
        axes_hi = np.array([x[0].real, x[0].imag]) + 1.5 * scale
        axes_lo = np.minimum(axes_lo, -0.5 * scale)
        axes_hi = np.maximum(axes_hi, 0.5 * scale)
        embed = lambda pts: (pts[:, 0] + 1j * pts[:, 1])[:, None]
    else:
        raise UnsupportedError("oracle supports n <= 2 for real x and n == 1 for complex x")

    step = grid_density * (1.0 if colinear else scale)
    lo, hi = axes_lo.astype(float), axes_hi.astype(float)
    best_val, best_pt = math.inf, None
    for level in range(refine + 1):
        # integer multiples of step, so the origin is a grid point at every level
        axes = [np.arange(math.floor(l / step), math.ceil(h / step) + 1) * step for l, h in zip(lo, hi)]
        if best_pt is not None:
            axes = [np.append(ax, c) for ax, c in zip(axes, best_pt)]
        mesh = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
        for chunk in np.array_split(mesh, max(1, mesh.shape[0] // 500_000)):
            vals = objective(embed(chunk))
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val, best_pt = float(vals[k]), chunk[k].copy()
        lo = best_pt - window * step
        hi = best_pt + window * step
        step /= 10.0
    return best_val
