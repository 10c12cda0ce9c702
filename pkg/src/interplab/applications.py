"""Experiments: weighted l^p couples, sectoriality angles, Rademacher averages, semigroups."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .errors import InputError, SingularityError, UnsupportedError
from .grid import GridFunction
from .operators import expm, norm_maximiser, operator_norm, resolvent
from .parallel import ordered_map
from .realinterp import real_interp_norm
from .spaces import INF, BanachCouple, InterpParams, WeightedLrSpace, norm
from .stein import interp_operator_norm_lower, multiplier_apply, weighted_family
from .strip import boundary_lp_norm


# ---------------------------------------------------------------------------
# weighted l^p


def _weighted_couple(p0, p1, w0, w1):
    if p0 == INF and p1 == INF:
        raise InputError("(p0, p1) = (inf, inf) is excluded")
    return BanachCouple(WeightedLrSpace(p0, w0), WeightedLrSpace(p1, w1))


def _norm_ratio(couple, params, target, quad, x):
    return real_interp_norm(couple, params, x, quad) / norm(target, x)


def weighted_equivalence_check(n, p0, p1, w0, w1, theta, samples=100, seed=0, constant=10.0, quad=None):
    """Ratios ``||x||_{(l^{p0}_{w0}, l^{p1}_{w1})_{theta,p}} / ||x||_{l^p_w}`` with ``w = w0^{1-theta} w1^theta``."""
    w0 = np.asarray(w0, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    if w0.size != n or w1.size != n:
        raise InputError("weights must have n entries")
    couple = _weighted_couple(p0, p1, w0, w1)
    params = InterpParams(theta, p0, p1)
    target = WeightedLrSpace(params.p, w0 ** (1 - theta) * w1 ** theta)
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))
    ratios = np.array(ordered_map(partial(_norm_ratio, couple, params, target, quad), xs))
    spread = float(ratios.max() / ratios.min())
    return {
        "min_ratio": float(ratios.min()), "max_ratio": float(ratios.max()),
        "spread": spread, "constant": constant, "samples": samples,
        "passed": bool(spread <= constant), "ratios": ratios.tolist(),
    }


def translation_identity_check(n, p, w0, w1, grid, seed=0):
    """``||(T_j f^)^v||_{L^{p_j}(l^{p_j})}`` against ``||f||_{L^{p_j}(l^{p_j}_{w_j})}``, relative.

    ``p`` is a pair ``(p0, p1)`` or one exponent for both. Every shift
    ``log(w0_i / w1_i)`` must be a multiple of the grid step, so the
    multiplier is an exact cyclic shift of samples.
    """
    w0 = np.asarray(w0, dtype=float)
    w1 = np.asarray(w1, dtype=float)
    pair = tuple(p) if np.ndim(p) else (p, p)
    shifts = np.log(w0 / w1) / grid.h
    if np.any(np.abs(shifts - np.round(shifts)) > 1e-9):
        raise InputError("log(w0/w1) must be a multiple of the grid step h; "
                         "realign the weights as w1 = w0 * exp(-k h)")
    fam = weighted_family(w0, w1)
    rng = np.random.default_rng(seed)
    t = grid.times
    centre = rng.uniform(-grid.L / 4, grid.L / 4, size=n)
    amp = rng.normal(size=n) + 1j * rng.normal(size=n)
    f = GridFunction(grid.t0, grid.h, amp * np.exp(-((t[:, None] - centre) / 2.0) ** 2))
    worst = 0.0
    for j in (0, 1):
        pj = pair[j]
        out = multiplier_apply(fam, j, f)
        lhs = boundary_lp_norm(out, WeightedLrSpace.unit(n, pj), pj)
        rhs = boundary_lp_norm(f, WeightedLrSpace(pj, w1 if j else w0), pj)
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst


# ---------------------------------------------------------------------------
# sectoriality


@dataclass(frozen=True)
class SectorSpec:
    sigma: float
    n_phi: int = 9
    r_min: float = 1e-4
    r_max: float = 1e4
    per_decade: int = 16
    zoom_levels: int = 8

    def __post_init__(self):
        if not (0.0 < self.sigma < math.pi):
            raise InputError("sigma must lie in (0, pi)")
        if self.n_phi < 1 or self.per_decade < 1 or not (0 < self.r_min < self.r_max):
            raise InputError("sector grids must be nonempty")

    def with_sigma(self, sigma):
        return SectorSpec(sigma, self.n_phi, self.r_min, self.r_max, self.per_decade, self.zoom_levels)

    @property
    def phis(self):
        return np.linspace(self.sigma, math.pi, self.n_phi)

    @property
    def radii(self):
        decades = math.log10(self.r_max / self.r_min)
        return np.logspace(math.log10(self.r_min), math.log10(self.r_max),
                           int(round(decades * self.per_decade)) + 1)


@dataclass
class MatrixOperator:
    A: np.ndarray
    eigenvalues: np.ndarray = field(init=False)
    condition: float = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=complex))
        if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.all(np.isfinite(A)):
            raise InputError("A must be a finite square matrix")
        self.A = A
        self.eigenvalues = np.linalg.eigvals(A)
        self.condition = float(np.linalg.cond(A))

    @property
    def scale(self):
        return float(np.abs(self.eigenvalues).max())

    @property
    def max_arg(self):
        return float(np.abs(np.angle(self.eigenvalues)).max())

    def require_invertible(self):
        if np.abs(self.eigenvalues).min() <= 1e-12 * max(self.scale, 1e-300) or self.condition > 1e14:
            raise InputError("A must be invertible")


def _norms(mats, space):
    r = space.exponent
    if r in (1.0, 2.0, INF):
        B = space.weights[None, :, None] * mats / space.weights[None, None, :]
        if r == 2.0:
            return np.linalg.norm(B, ord=2, axis=(1, 2))
        if r == 1.0:
            return np.abs(B).sum(axis=1).max(axis=1)
        return np.abs(B).sum(axis=2).max(axis=1)
    return np.array([operator_norm(M, space, space).lower for M in mats])


def _z_resolvent_norms(A, z, space):
    mats = np.empty((z.size,) + A.shape, dtype=complex)
    for k, zk in enumerate(z):
        mats[k] = zk * resolvent(zk, A)
    return _norms(mats, space)


@dataclass
class ResolventSup:
    value: float
    finite: bool
    argmax: complex | None = None
    note: str = ""


_MAX_PRINCIPLE = ("scan over the boundary rays of the excluded sector; the norm of an analytic "
                  "operator function is subharmonic, so the sup is attained on this boundary")


def resolvent_sup(A, space, sigma, spec=None):
    """Scanned ``sup ||z R(z, A)||`` over ``|arg z| >= sigma`` (a lower bound for the true sup).

    The scan runs over rays ``|arg z| = phi`` for ``phi`` in ``[sigma, pi]``
    and radii relative to the spectral scale of ``A``, then zooms in on the
    best point. The limits ``1`` (``|z| -> inf``) and ``0`` (``|z| -> 0``)
    are included. Returns ``inf`` when the spectrum is not inside the open
    sector, or when a scan point hits the spectrum.
    """
    op = A if isinstance(A, MatrixOperator) else MatrixOperator(A)
    op.require_invertible()
    spec = spec or SectorSpec(sigma)
    if spec.sigma != sigma:
        spec = spec.with_sigma(sigma)
    if op.max_arg >= sigma - 1e-14:
        return ResolventSup(INF, False, None, "spectrum is not inside the open sector")
    radii = op.scale * spec.radii
    best, arg = 1.0, None
    try:
        for phi in spec.phis:
            for sign in (1.0, -1.0):
                z = radii * np.exp(1j * sign * phi)
                vals = _z_resolvent_norms(op.A, z, space)
                k = int(np.argmax(vals))
                if vals[k] > best:
                    best, arg = float(vals[k]), z[k]
        if arg is not None:
            best, arg = _zoom_resolvent(op.A, space, sigma, arg, best, spec)
    except SingularityError:
        return ResolventSup(INF, False, None, "scan point in the spectrum")
    return ResolventSup(best, True, arg, _MAX_PRINCIPLE)


def _zoom_resolvent(A, space, sigma, z, best, spec, points=9):
    step = math.log(10.0) / spec.per_decade
    dphi = (math.pi - sigma) / max(spec.n_phi - 1, 1)
    lr, ph = math.log(abs(z)), float(np.angle(z))
    sign = 1.0 if ph >= 0 else -1.0
    ph = abs(ph)
    for _ in range(spec.zoom_levels):
        lrs = np.linspace(lr - step, lr + step, points)
        phs = np.clip(np.linspace(ph - dphi, ph + dphi, points), sigma, math.pi)
        LR, PH = np.meshgrid(lrs, phs)
        zz = (np.exp(LR) * np.exp(1j * sign * PH)).ravel()
        vals = _z_resolvent_norms(A, zz, space)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best, lr, ph = float(vals[k]), float(LR.ravel()[k]), float(PH.ravel()[k])
        step, dphi = step / 4.0, dphi / 4.0
    return best, np.exp(lr) * np.exp(1j * sign * ph)


@dataclass
class SectorialityResult:
    omega: float
    sectorial: bool
    table: list
    reference: float
    space: dict

    def to_dict(self):
        return {"omega": self.omega, "sectorial": self.sectorial, "reference": self.reference,
                "table": self.table, "space": self.space}


def sectoriality_angle(A, space, spec=None, tol=1e-3, threshold=1e8, table_sigmas=None):
    """Bisect the smallest ``sigma`` with a finite scanned ``M(sigma) <= threshold``.

    For matrices the exact answer is ``max |arg lambda_i|``, reported as
    ``reference``.
    """
    op = A if isinstance(A, MatrixOperator) else MatrixOperator(A)
    op.require_invertible()
    spec = spec or SectorSpec(math.pi / 2)
    ref = op.max_arg
    if ref >= math.pi - 1e-12:
        return SectorialityResult(math.pi, False, [], ref, space.to_dict())

    def ok(sigma):
        res = resolvent_sup(op, space, sigma, spec)
        return res.finite and res.value <= threshold

    lo, hi = 0.0, math.pi - 1e-9
    if not ok(hi):
        return SectorialityResult(math.pi, False, [], ref, space.to_dict())
    while hi - lo > tol / 4:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    sigmas = table_sigmas if table_sigmas is not None else np.linspace(hi, math.pi - 1e-3, 8)
    table = [{"sigma": float(s), "M": resolvent_sup(op, space, float(s), spec).value} for s in sigmas]
    return SectorialityResult(hi, True, table, ref, space.to_dict())


# derivative bounds for F(lam(xi)) = lam R(lam, A) along lam(xi) = s e^{i sigma} e^{-d xi}:
# F' = -d (F - F^2) and F'' = d^2 (F - 3F^2 + 2F^3)
_DERIVATIVE_COEFFS = ((1.0,), (1.0, 1.0), (1.0, 3.0, 2.0))


def _derivative_bound(n, M, dsigma):
    return abs(dsigma) ** n * sum(c * M ** (k + 1) for k, c in enumerate(_DERIVATIVE_COEFFS[n]))


def chain_constant(M, j, theta, dsigma, xi_max=12.0, points=24001):
    """``pi / (2 pi) (||T_j||_1 + ||T_j''||_1)`` bounded through ``sup ||lam R(lam, A)|| <= M``.

    ``T_j = D F`` with ``D(xi) = e^{(j + i xi - theta)^2}``;
    ``|D'| = 2|w||D|`` and ``|D''| <= (2 + 4|w|^2)|D|`` for ``w = j - theta + i xi``.
    """
    xi = np.linspace(-xi_max, xi_max, points)
    w = np.abs((j - theta) + 1j * xi)
    D = np.exp((j - theta) ** 2 - xi ** 2)
    dx = xi[1] - xi[0]
    b0, b1, b2 = (_derivative_bound(n, M, dsigma) for n in range(3))
    l1 = dx * (D * b0).sum()
    dd = dx * (((2.0 + 4.0 * w ** 2) * b0 + 2.0 * 2.0 * w * b1 + b2) * D).sum()
    return 0.5 * (l1 + dd)


def interp_sectoriality_check(A, couple, params, sigma0, sigma1, s_grid, suite_constant=10.0,
                              spec=None, starts=4, steps=4, quad=None):
    """Bound ``s e^{i sigma_theta} R(s e^{i sigma_theta}, A)`` on the real interpolation space.

    ``C_j`` follow from the resolvent bounds ``M_j`` on ``X_j`` through the
    derivative chain; each scanned norm (a lower bound) is compared with
    ``suite_constant * C_0^{1-theta} C_1^theta``, for both signs of the angles.
    """
    op = A if isinstance(A, MatrixOperator) else MatrixOperator(A)
    op.require_invertible()
    theta = params.theta
    M = []
    for j, sig in ((0, sigma0), (1, sigma1)):
        if not (0.0 < sig < math.pi):
            raise InputError(f"sigma{j} must lie in (0, pi)")
        res = resolvent_sup(op, couple.space(j), sig, spec)
        if not res.finite:
            raise InputError(f"sigma{j} = {sig} does not exceed the sectoriality angle of A on X{j}")
        M.append(res.value)
    dsig = sigma1 - sigma0
    C = [chain_constant(M[j], j, theta, dsig) for j in (0, 1)]
    bound = C[0] ** (1 - theta) * C[1] ** theta
    sig_theta = (1 - theta) * sigma0 + theta * sigma1
    rows, violations, worst = [], 0, 0.0
    for sign in (1.0, -1.0):
        for s in np.asarray(s_grid, dtype=float):
            lam = s * np.exp(1j * sign * sig_theta)
            T = lam * resolvent(lam, op.A)
            val = interp_operator_norm_lower(couple, couple, params, T, starts, steps, quad=quad)
            ratio = val / bound
            worst = max(worst, ratio)
            violations += ratio > suite_constant
            rows.append({"s": float(s), "arg": float(sign * sig_theta), "value": float(val)})
    return {
        "M0": M[0], "M1": M[1], "C0": C[0], "C1": C[1], "bound": bound,
        "sigma_theta": sig_theta, "max_ratio": worst, "violations": int(violations),
        "suite_constant": suite_constant, "rows": rows,
    }


# ---------------------------------------------------------------------------
# Rademacher averages


MAX_TERMS = 20


def rademacher_average(space, vectors):
    """``(2^{-k} sum_eps ||sum_i eps_i x_i||^2)^{1/2}`` by exact enumeration.

    Squared norms are summed with ``math.fsum``, so the result does not
    depend on the enumeration order (sign flips of a single ``x_i`` only
    permute the terms).
    """
    X = np.atleast_2d(np.asarray(vectors, dtype=complex))
    k = X.shape[0]
    if k > MAX_TERMS:
        raise UnsupportedError(f"exact enumeration supports at most {MAX_TERMS} vectors")
    if X.shape[1] != space.dim:
        raise InputError("vector dimension does not match the space")
    # rows of signs: bit i of the pattern index gives eps_i
    parts = []
    chunk = 1 << 14
    for start in range(0, 1 << k, chunk):
        idx = np.arange(start, min(start + chunk, 1 << k))
        eps = 1.0 - 2.0 * ((idx[:, None] >> np.arange(k)[None, :]) & 1)
        parts.append(norm(space, eps @ X) ** 2)
    sq = np.concatenate(parts)
    return math.sqrt(math.fsum(sq.tolist()) / (1 << k))


def _ratio(ops, space, xs):
    den = rademacher_average(space, xs)
    if den == 0.0:
        return 0.0
    return rademacher_average(space, [T @ x for T, x in zip(ops, xs)]) / den


def _single_candidates(T, space, trials, rng):
    n = space.dim
    out = [norm_maximiser(T, space, space, rng)]
    out += list(rng.normal(size=(trials, n)) + 1j * rng.normal(size=(trials, n)))
    return out


def operator_norm_sampled(T, space, trials=64, seed=0):
    """Largest ``||T x|| / ||x||`` over the maximiser and ``trials`` random vectors."""
    T = np.asarray(T, dtype=complex)
    rng = np.random.default_rng(seed)
    best = 0.0
    for x in _single_candidates(T, space, trials, rng):
        best = max(best, _ratio([T], space, [x]))
    return best


def r_bound_lower(ops, space, trials=64, seed=0):
    """Lower bound for the R-bound of ``{T_1, ..., T_k}`` from sampled tuples.

    Candidates: each operator's own maximiser placed alone (the tuple is
    zero elsewhere), the same for the random single vectors, and random
    full tuples.
    """
    ops = [np.asarray(T, dtype=complex) for T in ops]
    k = len(ops)
    if k < 1 or k > 12:
        raise UnsupportedError("r_bound_lower supports 1 <= k <= 12 operators")
    n = space.dim
    rng = np.random.default_rng(seed)
    best = 0.0
    zero = np.zeros(n, dtype=complex)
    for i, T in enumerate(ops):
        for x in _single_candidates(T, space, trials, rng):
            xs = [zero] * k
            xs[i] = x
            best = max(best, _ratio(ops, space, xs))
    if k > 1:
        for _ in range(trials):
            xs = list(rng.normal(size=(k, n)) + 1j * rng.normal(size=(k, n)))
            best = max(best, _ratio(ops, space, xs))
    return best


# ---------------------------------------------------------------------------
# semigroups


def semigroup_sup(A, space, phi, radii):
    """``max ||e^{-zA}||`` over ``z = r e^{+-i phi}``, ``r`` in ``radii``."""
    A = np.asarray(A, dtype=complex)
    best = 0.0
    for sign in (1.0, -1.0):
        mats = np.array([expm(-r * np.exp(1j * sign * phi) * A) for r in radii])
        best = max(best, float(_norms(mats, space).max()))
    return best


def semigroup_scan(A, space, theta_list, couple, sigma=None, radius=10.0, n_phi=5, n_r=8,
                   margin=0.05, cap=1e3, p=2.0, starts=2, steps=2, quad=None):
    """Interpolation-space norms of ``e^{-zA}`` on sectors of angle below ``(1 - theta) sigma``.

    ``sigma`` defaults to ``pi/2 - omega(A)``, the analyticity angle on
    ``space``. Preconditions: ``omega(A) < pi/2`` and ``{e^{-tA}: 0 < t < 1}``
    bounded by ``cap`` on ``X_1``. Reported values are lower bounds, so the
    test is that nothing blows up below ``cap``.
    """
    op = MatrixOperator(A)
    if op.max_arg >= math.pi / 2:
        raise InputError("A must have sectoriality angle below pi/2 on X0")
    if sigma is None:
        sigma = math.pi / 2 - op.max_arg
    ts = np.linspace(0.0, 1.0, 21)[1:]
    x1_bound = max(float(_norms(np.array([expm(-t * op.A)]), couple.X1)[0]) for t in ts)
    if x1_bound > cap:
        raise InputError("e^{-tA}, 0 < t < 1, is not bounded below cap on X1")
    radii = np.logspace(-2, math.log10(radius), n_r)
    rows, out = [], []
    for theta in theta_list:
        params = InterpParams(theta, p, p)
        top_angle = (1.0 - theta) * sigma * (1.0 - margin)
        worst = 0.0
        for phi in np.linspace(0.0, top_angle, n_phi):
            for sign in (1.0, -1.0) if phi > 0 else (1.0,):
                for r in radii:
                    z = r * np.exp(1j * sign * phi)
                    val = interp_operator_norm_lower(couple, couple, params, expm(-z * op.A),
                                                     starts, steps, quad=quad)
                    worst = max(worst, val)
                    rows.append({"theta": theta, "abs_z": float(r), "arg": float(sign * phi), "value": val})
        out.append({"theta": theta, "angle": top_angle, "max_norm": worst, "bounded": worst <= cap})
    return {"sigma": sigma, "x1_bound": x1_bound, "cap": cap, "results": out, "rows": rows,
            "passed": all(r["bounded"] for r in out)}
