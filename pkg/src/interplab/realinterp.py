"""Real interpolation norm ``||t^{-theta} K(t, x)||_{L^p(dt/t)}``.

With ``u = log t`` the integrand is ``phi(u) = e^{-theta u} K(e^u, x)``.
Outside ``[log c, log C]`` (the couple thresholds) ``K`` is known in closed
form, ``t ||x||_1`` on the left and ``||x||_0`` on the right, so those two
pieces are integrated analytically. Only the middle window needs ``K``
from the solver; it is integrated with adaptive Simpson on ``du`` panels.

If the window is wider than the configured ``[-U, U]`` the part beyond
``U`` is replaced by the majorant ``K <= min(||x||_0, t ||x||_1)``, which
over-estimates; the excess is reported as ``tail_bound`` and ``U`` is
doubled until it is below ``tail_tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AccuracyError, InputError
from .kfunctional import KOptions, k_values
from .spaces import INF, as_vector, norm


@dataclass(frozen=True)
class QuadOptions:
    U: float | None = None
    du: float = 0.05
    tail_tol: float = 1e-9
    rel_tol: float = 1e-11
    max_depth: int = 12
    k_opts: KOptions = field(default_factory=KOptions)


@dataclass
class InterpNorm:
    value: float
    quadrature: float
    tail: float
    tail_bound: float
    U: float
    evaluations: int


def default_U(theta, n0, n1):
    return 40.0 / min(theta, 1.0 - theta) * (1.0 + abs(math.log(n0 / n1)))


class _Integrand:
    """``phi(u)`` with K evaluated on the normalised vector, counting calls."""

    def __init__(self, couple, a, theta, k_opts):
        self.couple, self.a, self.theta, self.k_opts = couple, a, theta, k_opts
        self.calls = 0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        self.calls += u.size
        vals, _, _ = k_values(self.couple, self.a, np.exp(u), self.k_opts)
        return np.exp(-self.theta * u) * vals


def _simpson(fa, fm, fb, width):
    return width * (fa + 4.0 * fm + fb) / 6.0


def _adaptive_simpson(phi_p, lo, hi, du, rel_tol, max_depth, scale):
    """Integrate on ``[lo, hi]``; every refinement level is one batched call."""
    m = max(1, int(math.ceil((hi - lo) / du)))
    edges = np.linspace(lo, hi, m + 1)
    left, right = edges[:-1], edges[1:]
    mid = 0.5 * (left + right)
    fe = phi_p(edges)
    fm = phi_p(mid)
    panels = [(left, right, fe[:-1], fm, fe[1:])]
    total = 0.0
    tol = rel_tol * scale
    for depth in range(max_depth + 1):
        a, b, fa, fmid, fb = panels.pop()
        if a.size == 0:
            break
        q1 = 0.5 * (a + (a + b) / 2)
        q3 = 0.5 * ((a + b) / 2 + b)
        fq = phi_p(np.concatenate([q1, q3]))
        fq1, fq3 = fq[: a.size], fq[a.size:]
        w = b - a
        coarse = _simpson(fa, fmid, fb, w)
        fine = _simpson(fa, fq1, fmid, w / 2) + _simpson(fmid, fq3, fb, w / 2)
        err = np.abs(fine - coarse) / 15.0
        budget = tol * w / max(hi - lo, 1e-300)
        ok = (err <= budget) | (depth == max_depth)
        total += float(np.sum(fine[ok] + (fine[ok] - coarse[ok]) / 15.0))
        bad = ~ok
        c = (a + b) / 2
        panels.append((
            np.concatenate([a[bad], c[bad]]),
            np.concatenate([c[bad], b[bad]]),
            np.concatenate([fa[bad], fmid[bad]]),
            np.concatenate([fq1[bad], fq3[bad]]),
            np.concatenate([fmid[bad], fb[bad]]),
        ))
    return total


def _zoom_max(f, lo, hi, points=41, levels=7):
    """Maximum of a unimodal function by repeated batched grid zoom."""
    best = -INF
    for _ in range(levels):
        grid = np.linspace(lo, hi, points)
        vals = f(grid)
        k = int(np.argmax(vals))
        best = max(best, float(vals[k]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, points - 1)]
    return best


def real_interp_norm_details(couple, params, x, quad_opts=None):
    """Real interpolation norm together with its quadrature diagnostics."""
    opts = quad_opts or QuadOptions()
    theta, p = params.theta, params.p
    x = as_vector(x, couple.dim)
    scale = float(np.abs(x).max())
    if scale == 0.0:
        return InterpNorm(0.0, 0.0, 0.0, 0.0, 0.0, 0)
    if not opts.du > 0:
        raise InputError("quad.du must be positive")
    a = np.abs(x) / scale
    N0 = float(norm(couple.X0, a))
    N1 = float(norm(couple.X1, a))
    c_lo, c_hi = couple.thresholds
    left_edge, right_edge = math.log(c_lo), math.log(c_hi)
    U = opts.U if opts.U is not None else default_U(theta, N0, N1)
    phi = _Integrand(couple, a, theta, opts.k_opts)

    for _ in range(8):
        lo, hi = max(left_edge, -U), min(right_edge, U)
        if p == INF:
            value, tail, bound, quad = _sup_norm(
                phi, theta, N0, N1, lo, hi, left_edge, right_edge, opts.du)
        else:
            value, tail, bound, quad = _finite_norm(
                phi, theta, p, N0, N1, lo, hi, left_edge, right_edge, opts)
        if bound <= opts.tail_tol * value:
            return InterpNorm(value * scale, quad * scale, tail * scale, bound * scale, U, phi.calls)
        U *= 2.0
    raise AccuracyError("tail majorant could not be brought below tail_tol",
                        diagnostics={"U": U, "tail_bound": bound, "value": value})


def _finite_norm(phi, theta, p, N0, N1, lo, hi, left_edge, right_edge, opts):
    left = N1 ** p * math.exp((1.0 - theta) * p * lo) / ((1.0 - theta) * p)
    right = N0 ** p * math.exp(-theta * p * hi) / (theta * p)
    # mass the majorant adds where the window was clipped by U
    excess = 0.0
    if lo > left_edge:
        excess += left
    if hi < right_edge:
        excess += right
    mid = 0.0
    if hi > lo:
        scale = left + right

        def phi_p(u):
            return phi(u) ** p

        mid = _adaptive_simpson(phi_p, lo, hi, opts.du, opts.rel_tol, opts.max_depth, scale)
    total = left + right + mid
    value = total ** (1.0 / p)
    tail_bound = value - max(total - excess, 0.0) ** (1.0 / p)
    return value, (left + right) ** (1.0 / p), tail_bound, mid ** (1.0 / p)


def _sup_norm(phi, theta, N0, N1, lo, hi, left_edge, right_edge, du):
    # phi is unimodal (log K(e^u) is concave), so its sup over a closed-form
    # side is attained at the window edge; exact only if that edge is unclipped
    candidates = []
    if lo <= left_edge:
        candidates.append(N1 * math.exp((1.0 - theta) * lo))
    if hi >= right_edge:
        candidates.append(N0 * math.exp(-theta * hi))
    quad, bound = 0.0, 0.0
    if hi > lo:
        m = max(2, int(math.ceil((hi - lo) / du)) + 1)
        grid = np.linspace(lo, hi, m)
        vals = phi(grid)
        k = int(np.argmax(vals))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, m - 1)]
        quad = max(float(vals[k]), _zoom_max(phi, a, b))
        if (k == 0 and lo > left_edge) or (k == m - 1 and hi < right_edge):
            bound = INF
    value = max([quad] + candidates)
    return value, max(candidates, default=0.0), bound, quad


def real_interp_norm(couple, params, x, quad_opts=None):
    """``||t^{-theta} K(t, x)||_{L^p(dt/t)}`` with ``p`` derived from ``params``."""
    return real_interp_norm_details(couple, params, x, quad_opts).value
