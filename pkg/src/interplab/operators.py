"""Matrices between weighted l^r spaces: operator norms, resolvents, exponentials."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, SingularityError
from .spaces import INF, conjugate, lr_norm


@dataclass
class OpNorm:
    lower: float
    upper: float
    exact: bool


def _as_matrix(T, X, Y):
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    if T.shape != (Y.dim, X.dim):
        raise InputError(f"matrix shape {T.shape} does not map dim {X.dim} to dim {Y.dim}")
    return T


def _unweighted(T, X, Y):
    """``D_v T D_w^{-1}``: the same operator between unweighted spaces."""
    return Y.weights[:, None] * T / X.weights[None, :]


def _norm_1_to(B, s):
    return float(lr_norm(np.abs(B).T, s).max())


def _norm_to_inf(B, r):
    return float(lr_norm(np.abs(B), conjugate(r)).max())


def _exact(B, r, s):
    if r == 1.0:
        return _norm_1_to(B, s)
    if s == INF:
        return _norm_to_inf(B, r)
    if r == 2.0 and s == 2.0:
        return float(np.linalg.norm(B, 2))
    return None


def _duality_map(z, q):
    """Unit vector in ``l^q`` norming ``z`` under ``sum y_i z_i``."""
    mag = np.abs(z)
    phase = np.where(mag > 0, np.conj(z) / np.where(mag > 0, mag, 1.0), 0.0)
    if q == INF:
        return phase
    qc = conjugate(q)
    if qc == INF:
        out = np.zeros_like(z)
        k = int(np.argmax(mag))
        out[k] = phase[k]
        return out
    top = mag.max()
    if top == 0:
        return np.zeros_like(z)
    y = phase * (mag / top) ** (qc - 1.0)
    return y / lr_norm(y, q)


def _power_lower(B, r, s, starts, iters=200):
    """Boyd's nonlinear power iteration for ``||B||_{r -> s}`` from several starts.

    Returns the best ratio and the unit vector attaining it.
    """
    best, arg = 0.0, None
    for x in starts:
        nx = lr_norm(x, r)
        if nx == 0:
            continue
        x = x / nx
        for _ in range(iters):
            y = B @ x
            val = lr_norm(y, s)
            if val > best or arg is None:
                best, arg = float(val), x
            if val == 0:
                break
            # gradient of ||Bx||_s, then the l^r point it norms
            z = B.T @ _duality_map(y, conjugate(s))
            xn = _duality_map(z, r)
            if np.allclose(xn, x, rtol=0, atol=1e-15):
                break
            x = xn
    return best, arg


def _riesz_thorin_upper(B, r, s, samples=64):
    """Complex interpolation between exactly computable corners.

    Points ``(1/r, 1/s)`` with ``1/r = 1`` or ``1/s = 0`` have closed-form
    norms; the target is written as a convex combination of one of each.
    """
    x, y = 1.0 / r, 0.0 if s == INF else 1.0 / s
    n_in, n_out = B.shape[1], B.shape[0]
    best = min(_norm_1_to(B, s) * n_in ** (1.0 - x), _norm_to_inf(B, r) * n_out ** y)
    for alpha in np.linspace(0.0, 1.0, samples + 2)[1:-1]:
        y1 = y / (1.0 - alpha)
        x2 = (x - (1.0 - alpha)) / alpha
        if y1 > 1.0 or not (0.0 <= x2 <= 1.0):
            continue
        s1 = INF if y1 == 0 else 1.0 / y1
        r2 = INF if x2 == 0 else 1.0 / x2
        best = min(best, _norm_1_to(B, s1) ** (1 - alpha) * _norm_to_inf(B, r2) ** alpha)
    return best


def operator_norm(T, X, Y, rng=None, starts=8):
    """Norm bounds of ``T: X -> Y``; exact when ``X`` is l^1-type, ``Y`` is l^inf-type or both are l^2."""
    T = _as_matrix(T, X, Y)
    B = _unweighted(T, X, Y)
    r, s = X.exponent, Y.exponent
    val = _exact(B, r, s)
    if val is not None:
        return OpNorm(val, val, True)
    lower, _ = _power_lower(B, r, s, _starts(B.shape[1], rng, starts))
    upper = _riesz_thorin_upper(B, r, s)
    return OpNorm(lower, float(max(upper, lower)), False)


def _starts(n, rng, count):
    rng = rng or np.random.default_rng(0)
    init = list(np.eye(n, dtype=complex))
    init += list(rng.normal(size=(count, n)) + 1j * rng.normal(size=(count, n)))
    init.append(np.ones(n, dtype=complex))
    return init


def norm_maximiser(T, X, Y, rng=None, starts=8):
    """A vector ``x`` with ``||T x||_Y / ||x||_X`` as large as found (exactly maximal in the closed-form cases)."""
    T = _as_matrix(T, X, Y)
    B = _unweighted(T, X, Y)
    r, s = X.exponent, Y.exponent
    if r == 2.0 and s == 2.0:
        u = np.linalg.svd(B)[2][0].conj()
    elif r == 1.0:
        u = np.zeros(B.shape[1], dtype=complex)
        u[int(np.argmax(lr_norm(np.abs(B).T, s)))] = 1.0
    elif s == INF:
        row = B[int(np.argmax(lr_norm(np.abs(B), conjugate(r))))]
        u = _duality_map(row, r)
    else:
        u = _power_lower(B, r, s, _starts(B.shape[1], rng, starts))[1]
    return u / X.weights


def operator_norm_value(T, X, Y):
    """Exact norm where available, else the upper bound."""
    return operator_norm(T, X, Y).upper


def resolvent(lam, A, rcond=1e-13):
    """``(lam - A)^{-1}``; raises :class:`SingularityError` at (numerical) spectral points."""
    A = np.asarray(A, dtype=complex)
    M = lam * np.eye(A.shape[0]) - A
    if np.linalg.cond(M) * rcond > 1.0:
        raise SingularityError(f"{lam} is (numerically) in the spectrum")
    return np.linalg.inv(M)


def _pade_coefficients(q):
    return [math.factorial(2 * q - k) * math.factorial(q)
            / (math.factorial(2 * q) * math.factorial(k) * math.factorial(q - k)) for k in range(q + 1)]


_PADE = _pade_coefficients(10)


def expm(A):
    """Matrix exponential by scaling and squaring with a diagonal [10/10] Pade approximant."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("expm needs a square matrix")
    size = np.abs(A).sum(axis=0).max()
    squarings = max(0, int(math.ceil(math.log2(size / 0.5)))) if size > 0 else 0
    B = A / 2.0 ** squarings
    eye = np.eye(A.shape[0], dtype=complex)
    num, den, power = _PADE[0] * eye, _PADE[0] * eye, eye
    for k, c in enumerate(_PADE[1:], start=1):
        power = power @ B
        num = num + c * power
        den = den + (-1) ** k * c * power
    E = np.linalg.solve(den, num)
    for _ in range(squarings):
        E = E @ E
    return E
