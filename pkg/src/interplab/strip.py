"""Analytic functions on the strip ``0 <= Re z <= 1`` from Fourier-side generators.

A generator ``g`` (a grid function of ``tau``) defines

    f(z) = int e^{tau (z - theta)} g(tau) dtau

so ``f(theta) = int g`` and the boundary traces have transforms
``f_s^(xi) = 2 pi e^{(s - theta) xi} g(xi)``. Compact support of ``g`` makes
every vertical trace integrable, and ``f`` is entire.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, InputError
from .fourier import centred_origin, dual_step, fourier_forward
from .grid import GridFunction
from .mean import MeanOptions, minimize_mean_norm
from .spaces import INF, as_vector, norm

_BLOCK = 512


@dataclass
class StripFunction:
    theta: float
    generator: GridFunction

    def __post_init__(self):
        if not (0.0 < self.theta < 1.0):
            raise InputError(f"theta must lie in (0, 1), got {self.theta}")
        if not np.all(np.isfinite(self.generator.values)):
            raise InputError("generator must be finite")


def strip_eval(sf, z):
    """``h sum_k e^{tau_k (z - theta)} g(tau_k)``; ``z`` scalar or 1-D array.

    Returns shape ``(n,)`` for scalar ``z`` and ``(len(z), n)`` otherwise.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z.real < -1e-12) or np.any(z.real > 1 + 1e-12):
        raise InputError("z must lie in the closed strip 0 <= Re z <= 1")
    g = sf.generator
    tau = g.times
    out = np.empty((z.size, g.n), dtype=complex)
    for start in range(0, z.size, _BLOCK):
        zz = z[start:start + _BLOCK]
        out[start:start + zz.size] = g.h * (np.exp(np.outer(zz - sf.theta, tau)) @ g.values)
    return out[0] if scalar else out


def trace_grid(sf):
    """The t-grid dual to the generator grid (same ``m``, full period)."""
    g = sf.generator
    h = dual_step(g.m, g.h)
    return centred_origin(g.m, h), h


def _trace_on_dual_grid(sf, s):
    """``f(s + i t_l)`` on the dual t-grid, summed directly like :func:`strip_eval`.

    With ``t_l tau_k = t0 tau0 + t0 k h + l h_t tau0 + 2 pi (l k mod m) / m``
    the oscillating factors come from a table of m-th roots of unity
    instead of ``m^2`` complex exponentials.
    """
    g = sf.generator
    m, h = g.m, g.h
    t0, ht = trace_grid(sf)
    k = np.arange(m)
    tau = g.times
    col = (np.exp((s - sf.theta) * tau + 1j * t0 * h * k))[:, None] * g.values
    roots = np.exp(2j * math.pi * k / m)
    out = np.empty_like(g.values)
    for start in range(0, m, _BLOCK):
        rows = np.arange(start, min(start + _BLOCK, m))
        out[start:start + rows.size] = roots[np.outer(rows, k) % m] @ col
    out *= (h * np.exp(1j * t0 * g.t0 + 1j * ht * g.t0 * k))[:, None]
    return GridFunction(t0, ht, out)


def boundary_fourier(sf, s, mode="algebraic", strict=False, edge_tol=1e-8):
    """Transform of the trace ``t -> f(s + i t)`` on the generator grid.

    ``algebraic`` returns ``2 pi e^{(s - theta) xi} g(xi)``. ``direct``
    samples the trace with :func:`strip_eval` on the dual t-grid and
    transforms it numerically; on that grid the two agree to rounding.
    With ``strict`` the trace must have decayed at the edges of the
    t-grid, otherwise :class:`AccuracyError` is raised.
    """
    if not (0.0 <= s <= 1.0):
        raise InputError("s must lie in [0, 1]")
    g = sf.generator
    if mode == "algebraic":
        w = 2.0 * math.pi * np.exp((s - sf.theta) * g.times)
        return g.with_values(w[:, None] * g.values)
    if mode != "direct":
        raise InputError(f"unknown mode {mode!r}")
    trace = _trace_on_dual_grid(sf, s)
    if strict:
        mass = np.abs(trace.values).sum(axis=1)
        edge = max(1, g.m // 20)
        frac = (mass[:edge].sum() + mass[-edge:].sum()) / max(mass.sum(), 1e-300)
        if frac > edge_tol:
            raise AccuracyError("trace has not decayed at the edges of the t-grid",
                                diagnostics={"edge_fraction": float(frac), "half_width": float(-trace.t0)})
    return fourier_forward(trace, "fft", xi0=g.t0)


def _energetic(g, rel=1e-10):
    mag = np.abs(g.values).max(axis=1)
    return mag > rel * mag.max()


def vertical_invariance_check(sf, s1, s2, mode="direct"):
    """``max |e^{-s1 xi} f_{s1}^ - e^{-s2 xi} f_{s2}^|`` over the energetic support of ``g``.

    Off that support the factor ``e^{-s xi}`` only amplifies rounding noise.
    """
    for s in (s1, s2):
        if not (0.0 < s < 1.0):
            raise InputError("s1, s2 must lie in (0, 1)")
    if s1 == s2:
        return 0.0
    xi = sf.generator.times
    a = boundary_fourier(sf, s1, mode).values * np.exp(-s1 * xi)[:, None]
    b = boundary_fourier(sf, s2, mode).values * np.exp(-s2 * xi)[:, None]
    keep = _energetic(sf.generator)
    return float(np.abs(a[keep] - b[keep]).max())


def boundary_lp_norm(F, space, p):
    """``||F||_{L^p(X)}`` with the rectangle rule on ``F``'s own grid."""
    n_k = norm(space, F.values)
    if p == INF:
        return float(n_k.max())
    top = float(n_k.max())
    if top == 0.0:
        return 0.0
    return top * float((F.h * ((n_k / top) ** p).sum()) ** (1.0 / p))


@dataclass
class ComplexNorm:
    value: float
    mean_value: float
    direct_value: float
    cross_check: float
    representation: object


def complex_norm_upper(couple, params, x, grid=None, opts=None):
    """Upper bound for the complex-formulation norm from a minimised generator.

    The generator is the minimising mean-method representation, so
    ``max_j ||f_j^||_{L^{p_j}(X_j)} = 2 pi * mean cost``. The direct-mode
    boundary transforms recompute the left side independently;
    ``cross_check`` is their relative disagreement.
    """
    opts = opts or MeanOptions()
    x = as_vector(x, couple.dim)
    rep, value = minimize_mean_norm(couple, params, x, grid, opts)
    sf = StripFunction(params.theta, rep.gf)
    direct = max(
        boundary_lp_norm(boundary_fourier(sf, j, "direct"), couple.space(j), params.pj(j))
        for j in (0, 1)
    )
    upper = 2.0 * math.pi * value
    return ComplexNorm(upper, value, direct, abs(direct - upper) / upper, rep)


def three_lines_check(func, theta, t, tol=1e-9, vec_norm=None):
    """Hadamard three-lines test on sampled vertical lines.

    ``func`` maps an array of points to values (scalars or vectors);
    suprema over ``Re z = 0, theta, 1`` sampled at heights ``t``.
    """
    vec_norm = vec_norm or (lambda v: np.abs(v) if v.ndim == 1 else np.linalg.norm(v, axis=1))
    t = np.asarray(t, dtype=float)
    sups = []
    for s in (0.0, theta, 1.0):
        vals = np.asarray(func(s + 1j * t))
        sups.append(float(vec_norm(vals).max()))
    bound = sups[0] ** (1.0 - theta) * sups[2] ** theta
    ok = sups[1] <= bound * (1.0 + tol)
    return {
        "sup_0": sups[0], "sup_theta": sups[1], "sup_1": sups[2],
        "bound": bound, "ratio": sups[1] / bound if bound > 0 else INF,
        "passed": bool(ok), "violations": 0 if ok else 1,
    }
