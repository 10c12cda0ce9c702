"""Uniformly sampled vector-valued functions of one real variable."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class TimeGrid:
    """Samples ``t_k = -L + k h`` for ``k = 0..m-1`` covering ``[-L, L]``."""

    L: float
    h: float

    def __post_init__(self):
        if not (self.L > 0 and self.h > 0):
            raise InputError("grid.L and grid.h must be positive")

    @property
    def t0(self):
        return -float(self.L)

    @property
    def m(self):
        return int(round(2.0 * self.L / self.h)) + 1

    @property
    def times(self):
        return self.t0 + self.h * np.arange(self.m)

    def zeros(self, n):
        return GridFunction(self.t0, self.h, np.zeros((self.m, n), dtype=complex))


def default_grid(theta, h=0.1):
    return TimeGrid(30.0 / min(theta, 1.0 - theta), h)


@dataclass
class GridFunction:
    """Values ``values[k]`` at ``t0 + k h``; the integral is ``h * sum_k values[k]``."""

    t0: float
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1:
            raise InputError("grid function needs at least one sample")
        if not self.h > 0:
            raise InputError("grid step must be positive")
        self.values = v
        self.t0 = float(self.t0)
        self.h = float(self.h)

    @property
    def m(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.t0 + self.h * np.arange(self.m)

    def integral(self):
        return self.h * self.values.sum(axis=0)

    def with_values(self, values):
        return GridFunction(self.t0, self.h, values)

    def scaled(self, lam):
        return self.with_values(self.values * lam)

    def to_csv(self, target=None, axis_name="t"):
        """Write ``axis, re_0, im_0, re_1, ...``; returns the text if no target is given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = [axis_name]
        for i in range(self.n):
            header += [f"re_{i}", f"im_{i}"]
        w.writerow(header)
        for tk, row in zip(self.times, self.values):
            out = [f"{tk:.12e}"]
            for v in row:
                out += [f"{v.real:.12e}", f"{v.imag:.12e}"]
            w.writerow(out)
        text = buf.getvalue()
        if target is None:
            return text
        with open(target, "w", newline="") as fh:
            fh.write(text)
        return text


def sample(func, grid, n=None):
    """Sample a callable ``t -> vector`` (vectorised over ``t``) on a TimeGrid."""
    t = grid.times
    vals = np.asarray(func(t), dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    if n is not None and vals.shape[1] != n:
        raise InputError("sampled function has the wrong dimension")
    return GridFunction(grid.t0, grid.h, vals)

