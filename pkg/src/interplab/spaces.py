"""Finite-dimensional weighted sequence spaces and interpolation couples.

A :class:`WeightedLrSpace` is ``C^n`` with ``||x|| = ||(w_i x_i)||_{l^r}``.
Two such spaces over the same coordinates form a :class:`BanachCouple`.
All norms here are absolute (lattice) norms, which several algorithms
downstream rely on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

INF = math.inf


def _check_exponent(r, name="exponent"):
    r = float(r)
    if not (r >= 1.0):
        raise InputError(f"{name} must lie in [1, inf], got {r}")
    return r


def conjugate(r):
    """Hoelder conjugate exponent, with 1' = inf and inf' = 1."""
    if r == 1.0:
        return INF
    if r == INF:
        return 1.0
    return r / (r - 1.0)


def lr_norm(y, r, axis=-1):
    """Plain l^r norm of ``|y|`` along ``axis`` (vectorised, overflow-safe)."""
    a = np.abs(np.asarray(y))
    if a.shape[axis] == 0:
        return np.zeros(np.delete(a.shape, axis % a.ndim))
    if r == INF:
        return a.max(axis=axis)
    if r == 1.0:
        return a.sum(axis=axis)
    if r == 2.0:
        scale = a.max(axis=axis, keepdims=True)
        safe = np.where(scale > 0, scale, 1.0)
        return np.squeeze(scale, axis) * np.sqrt(((a / safe) ** 2).sum(axis=axis))
    scale = a.max(axis=axis, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return np.squeeze(scale, axis) * (((a / safe) ** r).sum(axis=axis)) ** (1.0 / r)


@dataclass(frozen=True, eq=False)
class WeightedLrSpace:
    """``C^n`` normed by ``||x|| = ||(w_i x_i)_i||_{l^r}``."""

    exponent: float
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        r = _check_exponent(self.exponent)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise InputError("a space needs dim >= 1")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InputError("weights must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "exponent", r)
        object.__setattr__(self, "weights", w)

    @classmethod
    def unit(cls, dim, exponent):
        return cls(exponent, np.ones(int(dim)))

    @property
    def dim(self):
        return self.weights.size

    @property
    def key(self):
        return (self.exponent, tuple(self.weights.tolist()))

    def __eq__(self, other):
        return isinstance(other, WeightedLrSpace) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        w = np.array2string(self.weights, precision=4, separator=", ")
        return f"WeightedLrSpace(r={self.exponent:g}, w={w})"

    def dual(self):
        """Dual space under the bilinear pairing ``sum x_i y_i``."""
        return WeightedLrSpace(conjugate(self.exponent), 1.0 / self.weights)

    def scaled(self, lam):
        return WeightedLrSpace(self.exponent, self.weights * float(lam))

    def to_dict(self):
        return {"exponent": _json_exponent(self.exponent), "weights": self.weights.tolist()}


def _json_exponent(r):
    return "inf" if r == INF else r


def norm(space, x):
    """Norm of ``x`` (last axis indexes coordinates) in ``space``."""
    x = np.asarray(x)
    if x.shape[-1:] != (space.dim,):
        raise InputError(f"dimension mismatch: vector has {x.shape[-1:]} coordinates, space has {space.dim}")
    return lr_norm(x * space.weights, space.exponent)


def embedding_constant(X, Y):
    """``sup_{y != 0} ||y||_X / ||y||_Y`` (exact, Hoelder is sharp here)."""
    if X.dim != Y.dim:
        raise InputError("dimension mismatch")
    d = X.weights / Y.weights
    r, s = X.exponent, Y.exponent
    if r >= s:
        return float(d.max())
    q = 1.0 / (1.0 / r - _recip(s))
    return float(lr_norm(d, q))


@dataclass(frozen=True, eq=False)
class BanachCouple:
    """Two weighted l^r norms on the same ``C^n``."""

    X0: WeightedLrSpace
    X1: WeightedLrSpace

    def __post_init__(self):
        if self.X0.dim != self.X1.dim:
            raise InputError(f"couple dimension mismatch: {self.X0.dim} vs {self.X1.dim}")

    @property
    def dim(self):
        return self.X0.dim

    @property
    def key(self):
        return (self.X0.key, self.X1.key)

    def __eq__(self, other):
        return isinstance(other, BanachCouple) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def space(self, j):
        return self.X1 if j else self.X0

    @property
    def thresholds(self):
        """``(c, C)`` with ``K(t,x) = t||x||_1`` for ``t <= c`` and ``= ||x||_0`` for ``t >= C``.

        ``c = inf ||y||_0/||y||_1`` and ``C = sup ||y||_0/||y||_1``.
        """
        lo = 1.0 / embedding_constant(self.X1, self.X0)
        hi = embedding_constant(self.X0, self.X1)
        return lo, hi

    def to_dict(self):
        return {"X0": self.X0.to_dict(), "X1": self.X1.to_dict()}


def intersection_norm(couple, x):
    return np.maximum(norm(couple.X0, x), norm(couple.X1, x))


def _recip(p):
    return 0.0 if p == INF else 1.0 / p


def _from_recip(s):
    return INF if s == 0.0 else 1.0 / s


@dataclass(frozen=True)
class InterpParams:
    """``theta`` and the endpoint exponents; ``p``/``q`` are derived."""

    theta: float
    p0: float = 2.0
    p1: float = 2.0
    q0: float | None = None
    q1: float | None = None

    def __post_init__(self):
        th = float(self.theta)
        if not (0.0 < th < 1.0):
            raise InputError(f"params.theta must lie in (0, 1), got {th}")
        object.__setattr__(self, "theta", th)
        for name in ("p0", "p1", "q0", "q1"):
            v = getattr(self, name)
            if v is None:
                continue
            object.__setattr__(self, name, _check_exponent(v, f"params.{name}"))
        if self.q0 is None:
            object.__setattr__(self, "q0", self.p0)
        if self.q1 is None:
            object.__setattr__(self, "q1", self.p1)

    @property
    def p(self):
        th = self.theta
        return _from_recip((1 - th) * _recip(self.p0) + th * _recip(self.p1))

    @property
    def q(self):
        th = self.theta
        return _from_recip((1 - th) * _recip(self.q0) + th * _recip(self.q1))

    def pj(self, j):
        return self.p1 if j else self.p0

    def qj(self, j):
        return self.q1 if j else self.q0

    def to_dict(self):
        return {k: _json_exponent(getattr(self, k)) for k in ("theta", "p0", "p1", "q0", "q1")}


def as_vector(x, dim=None):
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.ndim != 1:
        raise InputError("expected a vector")
    if dim is not None and x.size != dim:
        raise InputError(f"dimension mismatch: vector has {x.size} coordinates, space has {dim}")
    return x
