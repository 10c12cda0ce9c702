"""Random couple suites and the complex/real equivalence band over them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mean import MeanOptions
from .parallel import ordered_map
from .realinterp import real_interp_norm
from .spaces import INF, BanachCouple, InterpParams, WeightedLrSpace
from .strip import complex_norm_upper

EXPONENTS = (1.0, 2.0, INF)
LIGHT_MEAN = MeanOptions(iterations=60, patience=30, lbfgs_iters=60)


@dataclass
class SuiteInstance:
    couple: BanachCouple
    x: np.ndarray


def random_couples(count, seed, max_dim=4, weight_range=(0.1, 10.0), exponents=EXPONENTS):
    """``count`` couples with log-uniform weights and one complex vector each."""
    rng = np.random.default_rng(seed)
    lo, hi = (math.log(w) for w in weight_range)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, max_dim + 1))
        r0, r1 = (float(exponents[i]) for i in rng.integers(0, len(exponents), size=2))
        w0 = np.exp(rng.uniform(lo, hi, n))
        w1 = np.exp(rng.uniform(lo, hi, n))
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
        out.append(SuiteInstance(BanachCouple(WeightedLrSpace(r0, w0), WeightedLrSpace(r1, w1)), x))
    return out


@dataclass
class BandResult:
    theta: float
    ratios: list = field(default_factory=list)
    scale_deviation: float = 0.0
    cross_check: float = 0.0

    @property
    def spread(self):
        return max(self.ratios) / min(self.ratios)

    def to_dict(self):
        return {"theta": self.theta, "min_ratio": min(self.ratios), "max_ratio": max(self.ratios),
                "spread": self.spread, "instances": len(self.ratios),
                "scale_deviation": self.scale_deviation, "cross_check": self.cross_check}


def _instance(job):
    couple, x, params, scale, opts = job
    ratio, cross = _ratio(couple, x, params, opts)
    scaled, _ = _ratio(couple, scale * x, params, opts)
    return ratio, cross, abs(scaled - ratio) / ratio


def _ratio(couple, x, params, opts):
    res = complex_norm_upper(couple, params, x, None, opts)
    return res.value / real_interp_norm(couple, params, x), res.cross_check


def equivalence_band(suite, thetas=(0.25, 0.5, 0.75), ps=EXPONENTS, scale=-3.7 + 1.3j, opts=LIGHT_MEAN):
    """Ratio ``complex_norm_upper / real_interp_norm`` per theta over ``suite`` and ``ps``.

    Each instance is solved again at ``scale * x``; the largest relative
    change of the ratio is reported as ``scale_deviation``.
    """
    out = []
    for theta in thetas:
        jobs = [(inst.couple, inst.x, InterpParams(theta, p, p), scale, opts) for inst in suite for p in ps]
        res = BandResult(theta)
        for ratio, cross, dev in ordered_map(_instance, jobs):
            res.ratios.append(ratio)
            res.cross_check = max(res.cross_check, cross)
            res.scale_deviation = max(res.scale_deviation, dev)
        out.append(res)
    return out
