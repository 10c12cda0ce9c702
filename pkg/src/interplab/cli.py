"""``interplab <subcommand> --config <path> [--seed N] [--out-dir D]``.

Exit codes: 0 all checks passed, 1 a check failed (the report is still
written), 2 invalid config, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import applications as app
from . import stein
from .errors import InputError, InterplabError
from .grid import TimeGrid, default_grid
from .kfunctional import KOptions, k_values
from .mean import MeanOptions, minimize_mean_norm
from .realinterp import QuadOptions, real_interp_norm_details
from .report import build_report, emit_report
from .spaces import INF, BanachCouple, InterpParams, WeightedLrSpace
from .strip import StripFunction, boundary_fourier, complex_norm_upper

EXIT_OK, EXIT_ASSERT, EXIT_SCHEMA, EXIT_IO = 0, 1, 2, 3

SUITE = {
    "k_gap_tol": 1e-8,
    "complex_cross_check": 1e-4,
    "stein_constant": 10.0,
    "stein_identity_tol": 1e-6,
    "weighted_constant": 10.0,
    "translation_tol": 1e-10,
    "sector_constant": 10.0,
    "semigroup_cap": 1e3,
}

SAMPLING = {"stein-check", "weighted-demo"}


class ConfigError(Exception):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


def load_schema():
    return json.loads(resources.files("interplab").joinpath("config_schema.json").read_text())


def validate(command, config):
    schema = load_schema()
    if command not in schema["commands"]:
        raise ConfigError("command", f"unknown subcommand {command!r}")
    body = schema["commands"][command]
    full = {
        "type": "object",
        "definitions": schema["definitions"],
        "required": body.get("required", []),
        "properties": {**schema["definitions"]["common"], **body["properties"]},
        "additionalProperties": False,
    }
    errors = sorted(jsonschema.Draft7Validator(full).iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path)
        if err.validator == "required":
            missing = err.message.split("'")[1]
            path = f"{path}.{missing}" if path else missing
        raise ConfigError(path, err.message)
    if config.get("command", command) != command:
        raise ConfigError("command", f"config is for {config['command']!r}")


# ---------------------------------------------------------------------------
# config -> objects


def _exp(v):
    return INF if v == "inf" else float(v)


def _space(d):
    return WeightedLrSpace(_exp(d["exponent"]), d["weights"])


def _couple(d, path="couple"):
    try:
        return BanachCouple(_space(d["X0"]), _space(d["X1"]))
    except InputError as e:
        raise ConfigError(path, str(e)) from None


def _params(d):
    kw = {k: _exp(d[k]) for k in ("p0", "p1", "q0", "q1") if k in d}
    try:
        return InterpParams(d["theta"], **kw)
    except InputError as e:
        raise ConfigError("params", str(e)) from None


def _vector(v):
    if isinstance(v, dict):
        if len(v["re"]) != len(v["im"]):
            raise ConfigError("x", "re and im must have equal length")
        return np.asarray(v["re"], dtype=float) + 1j * np.asarray(v["im"], dtype=float)
    return np.asarray(v, dtype=complex)


def _matrix(v, path="A"):
    try:
        if isinstance(v, dict):
            M = np.asarray(v["re"], dtype=float) + 1j * np.asarray(v["im"], dtype=float)
        else:
            M = np.asarray(v, dtype=complex)
    except ValueError:
        raise ConfigError(path, "rows must have equal length") from None
    if M.ndim != 2:
        raise ConfigError(path, "expected a matrix")
    return M


def _dim_check(couple, x, path="x"):
    if x.size != couple.dim:
        raise ConfigError(path, f"has {x.size} entries, couple has dimension {couple.dim}")


def _quad(cfg):
    q = cfg.get("quad", {})
    s = cfg.get("solver", {})
    k = KOptions(tol=s["tol"]) if "tol" in s else KOptions()
    return QuadOptions(U=q.get("U"), du=q.get("du", 0.05), tail_tol=q.get("tail_tol", 1e-9),
                       rel_tol=q.get("rel_tol", 1e-11), k_opts=k)


def _mean_opts(cfg):
    s = cfg.get("solver", {})
    k = KOptions(tol=s["tol"]) if "tol" in s else KOptions()
    return MeanOptions(iterations=s.get("max_iters", 5000), patience=s.get("patience", 500),
                       lbfgs_iters=s.get("lbfgs_iters", 400), k_opts=k)


def _grid(cfg, theta):
    g = cfg.get("grid", {})
    base = default_grid(theta, g.get("h", 0.1))
    return TimeGrid(g.get("L", base.L), g.get("h", base.h))


def _check(name, passed, **info):
    return {"name": name, "passed": bool(passed), **info}


def _seed(cfg):
    return int(cfg.get("seed", 0))


# ---------------------------------------------------------------------------
# subcommands: each returns (results, tables, checks)


def cmd_kfunc(cfg):
    couple = _couple(cfg["couple"])
    x = _vector(cfg["x"])
    _dim_check(couple, x)
    tg = cfg.get("t_grid", {})
    t_min, t_max, points = tg.get("t_min", 1e-3), tg.get("t_max", 1e3), tg.get("points", 61)
    if t_max < t_min:
        raise ConfigError("t_grid.t_max", "must be >= t_min")
    ts = np.geomspace(t_min, t_max, points)
    tol = cfg.get("solver", {}).get("tol", SUITE["k_gap_tol"])
    opts = KOptions(tol=tol, raise_on_gap=False)
    vals, lows, _ = k_values(couple, x, ts, opts)
    at_one, low_one, _ = k_values(couple, x, [1.0], opts)
    gaps = (vals - lows) / np.maximum(vals, 1e-300)
    results = {"value_at_1": float(at_one[0]), "lower_at_1": float(low_one[0]),
               "max_relative_gap": float(gaps.max())}
    rows = [(t, v, lo) for t, v, lo in zip(ts, vals, lows)]
    checks = [_check("certified_gap", gaps.max() <= tol, value=float(gaps.max()), limit=tol)]
    return results, {"kfunc.csv": (["t", "K", "lower"], rows)}, checks


def cmd_interp_norm(cfg):
    couple = _couple(cfg["couple"])
    params = _params(cfg["params"])
    x = _vector(cfg["x"])
    _dim_check(couple, x)
    quad = _quad(cfg)
    d = real_interp_norm_details(couple, params, x, quad)
    results = {"value": d.value, "quadrature": d.quadrature, "tail": d.tail,
               "tail_bound": d.tail_bound, "U": d.U, "evaluations": d.evaluations, "p": params.p}
    lo, hi = (math.log(c) for c in couple.thresholds)
    us = np.linspace(lo - 2.0, hi + 2.0, 201)
    vals, _, _ = k_values(couple, x, np.exp(us), quad.k_opts)
    rows = [(u, v * math.exp(-params.theta * u)) for u, v in zip(us, vals)]
    checks = [_check("tail_bound", d.tail_bound <= quad.tail_tol * max(d.value, 1e-300),
                     value=d.tail_bound)]
    return results, {"integrand.csv": (["u", "phi"], rows)}, checks


def _representation_rows(gf):
    return [[t] + [c for v in row for c in (v.real, v.imag)] for t, row in zip(gf.times, gf.values)]


def _coordinate_header(axis, n):
    return [axis] + [f"{part}_{i}" for i in range(n) for part in ("re", "im")]


def cmd_mean_min(cfg):
    couple = _couple(cfg["couple"])
    params = _params(cfg["params"])
    x = _vector(cfg["x"])
    _dim_check(couple, x)
    grid = _grid(cfg, params.theta)
    rep, value = minimize_mean_norm(couple, params, x, grid, _mean_opts(cfg))
    results = {"value": value, "initial_value": rep.info.get("initial_value"),
               "iterations": rep.info.get("iterations"), "residual": rep.residual,
               "grid": {"L": grid.L, "h": grid.h, "m": grid.m}}
    checks = [_check("monotone", value <= rep.info.get("initial_value", value) * (1 + 1e-12), value=value)]
    tables = {"representation.csv": (_coordinate_header("t", couple.dim), _representation_rows(rep.gf))}
    return results, tables, checks


def cmd_complex_check(cfg):
    couple = _couple(cfg["couple"])
    params = _params(cfg["params"])
    x = _vector(cfg["x"])
    _dim_check(couple, x)
    grid = _grid(cfg, params.theta)
    res = complex_norm_upper(couple, params, x, grid, _mean_opts(cfg))
    real = real_interp_norm_details(couple, params, x, _quad(cfg)).value
    results = {"complex_upper": res.value, "mean_value": res.mean_value, "direct_value": res.direct_value,
               "cross_check": res.cross_check, "real_norm": real, "ratio": res.value / real}
    sf = StripFunction(params.theta, res.representation.gf)
    tables = {}
    for j in (0, 1):
        F = boundary_fourier(sf, j, "algebraic")
        tables[f"boundary_{j}.csv"] = (_coordinate_header("xi", couple.dim), _representation_rows(F))
    checks = [_check("cross_check", res.cross_check <= SUITE["complex_cross_check"], value=res.cross_check),
              _check("ratio_finite", math.isfinite(results["ratio"]), value=results["ratio"])]
    return results, tables, checks


def cmd_stein_check(cfg):
    X = _couple(cfg["couple_x"], "couple_x")
    Y = _couple(cfg["couple_y"], "couple_y")
    params = _params(cfg["params"])
    d = cfg["family"]
    if d["kind"] == "weighted_multiplier":
        if "w0" not in d or "w1" not in d:
            raise ConfigError("family", "weighted_multiplier needs w0 and w1")
        fam = stein.weighted_family(d["w0"], d["w1"])
    else:
        if "A" not in d or "sigma0" not in d or "sigma1" not in d:
            raise ConfigError("family", "resolvent needs A, sigma0 and sigma1")
        fam = stein.resolvent_family(_matrix(d["A"], "family.A"), d.get("s", 1.0),
                                     d["sigma0"], d["sigma1"], params.theta)
    if fam.n_in != X.dim or fam.n_out != Y.dim:
        raise ConfigError("family", "dimensions do not match the couples")
    constant = cfg.get("suite_constant", SUITE["stein_constant"])
    opts = stein.SteinOptions(samples=cfg.get("samples", 200), seed=_seed(cfg), suite_constant=constant,
                              quad=_quad(cfg))
    rep = stein.stein_check(fam, X, Y, params, opts)
    results = {"stein": rep.to_dict(), "boundary_identity": rep.boundary_identity}
    rows = [(k, r) for k, r in enumerate(rep.ratios)]
    tol = 1e-9
    checks = [
        _check("violations", rep.violations == 0, value=rep.violations, constant=constant),
        _check("m0_order", rep.m0_lower <= rep.m0_upper * (1 + tol), value=rep.m0_lower),
        _check("m1_order", rep.m1_lower <= rep.m1_upper * (1 + tol), value=rep.m1_lower),
        _check("boundary_identity", rep.boundary_identity <= SUITE["stein_identity_tol"],
               value=rep.boundary_identity),
    ]
    return results, {"ratios.csv": (["sample", "normalised_ratio"], rows)}, checks


def cmd_weighted_demo(cfg):
    n = cfg["n"]
    for key in ("w0", "w1"):
        if len(cfg[key]) != n:
            raise ConfigError(key, f"must have n = {n} entries")
    p0, p1 = _exp(cfg["p0"]), _exp(cfg["p1"])
    if p0 == INF and p1 == INF:
        raise ConfigError("p1", "(p0, p1) = (inf, inf) is excluded")
    constant = cfg.get("constant", SUITE["weighted_constant"])
    eq = app.weighted_equivalence_check(n, p0, p1, cfg["w0"], cfg["w1"], cfg["theta"],
                                        cfg.get("samples", 100), _seed(cfg), constant, _quad(cfg))
    g = cfg.get("grid", {})
    grid = TimeGrid(g.get("L", 20.0), g.get("h", 0.05))
    steps = cfg.get("shift_steps", [5] * n)
    if len(steps) != n:
        raise ConfigError("shift_steps", f"must have n = {n} entries")
    w0 = np.asarray(cfg["w0"], dtype=float)
    w1_aligned = w0 * np.exp(-grid.h * np.asarray(steps, dtype=float))
    dev = app.translation_identity_check(n, (p0, p1), w0, w1_aligned, grid, _seed(cfg))
    results = {k: v for k, v in eq.items() if k != "ratios"}
    results["translation_deviation"] = dev
    rows = [(k, r) for k, r in enumerate(eq["ratios"])]
    checks = [_check("equivalence_spread", eq["passed"], value=eq["spread"], constant=constant),
              _check("translation_identity", dev <= SUITE["translation_tol"], value=dev)]
    return results, {"ratios.csv": (["sample", "ratio"], rows)}, checks


def _sector(cfg, sigma):
    s = cfg.get("sector", {})
    return app.SectorSpec(sigma, s.get("n_phi", 9), s.get("r_min", 1e-4), s.get("r_max", 1e4),
                          s.get("per_decade", 16))


def cmd_sector_scan(cfg):
    A = _matrix(cfg["A"])
    space = _space(cfg["space"])
    if A.shape != (space.dim, space.dim):
        raise ConfigError("A", "shape does not match the space")
    try:
        app.MatrixOperator(A).require_invertible()
    except InputError as e:
        raise ConfigError("A", str(e)) from None
    rows, table = [], []
    for sigma in cfg["sigmas"]:
        res = app.resolvent_sup(A, space, sigma, _sector(cfg, sigma))
        table.append({"sigma": sigma, "M": res.value, "finite": res.finite})
        rows.append((sigma, sigma, res.value))
    sect = app.sectoriality_angle(A, space, _sector(cfg, math.pi / 2))
    finite = [r["M"] for r in table if r["finite"]]
    monotone = all(a >= b * (1 - 1e-9) for a, b in zip(finite, finite[1:]))
    increasing = all(a < b for a, b in zip(cfg["sigmas"], cfg["sigmas"][1:]))
    results = {"table": table, "omega": sect.omega, "reference": sect.reference, "sectorial": sect.sectorial}
    checks = [_check("omega", abs(sect.omega - sect.reference) <= 1e-3, value=sect.omega),
              _check("monotone", monotone or not increasing)]
    if "interp" in cfg:
        d = cfg["interp"]
        couple = _couple(d["couple"], "interp.couple")
        params = _params(d["params"])
        s_grid = np.geomspace(d.get("s_min", 1e-3), d.get("s_max", 1e3), d.get("points", 61))
        constant = d.get("suite_constant", SUITE["sector_constant"])
        try:
            rep = app.interp_sectoriality_check(A, couple, params, d["sigma0"], d["sigma1"], s_grid, constant)
        except InputError as e:
            raise ConfigError("interp", str(e)) from None
        results["interp"] = {k: v for k, v in rep.items() if k != "rows"}
        rows += [(r["s"], r["arg"], r["value"]) for r in rep["rows"]]
        checks.append(_check("interp_violations", rep["violations"] == 0, value=rep["violations"]))
    return results, {"scan.csv": (["sigma_or_s_or_absz", "arg", "value"], rows)}, checks


def cmd_semigroup_scan(cfg):
    A = _matrix(cfg["A"])
    couple = _couple(cfg["couple"])
    if A.shape != (couple.dim, couple.dim):
        raise ConfigError("A", "shape does not match the couple")
    cap = cfg.get("cap", SUITE["semigroup_cap"])
    try:
        rep = app.semigroup_scan(A, couple.X0, cfg["thetas"], couple, radius=cfg.get("radius", 10.0),
                                 n_phi=cfg.get("n_phi", 5), n_r=cfg.get("n_r", 8), cap=cap)
    except InputError as e:
        raise ConfigError("A", str(e)) from None
    rows = [(r["abs_z"], r["arg"], r["value"]) for r in rep["rows"]]
    results = {k: v for k, v in rep.items() if k != "rows"}
    checks = [_check("bounded", rep["passed"], cap=cap)]
    return results, {"scan.csv": (["sigma_or_s_or_absz", "arg", "value"], rows)}, checks


def cmd_rademacher(cfg):
    space = _space(cfg["space"])
    vecs = [_vector(v) for v in cfg["vectors"]]
    if any(v.size != space.dim for v in vecs):
        raise ConfigError("vectors", f"every vector needs {space.dim} entries")
    if len(vecs) > app.MAX_TERMS:
        raise ConfigError("vectors", f"at most {app.MAX_TERMS} vectors")
    avg = app.rademacher_average(space, vecs)
    results = {"average": avg, "k": len(vecs)}
    rows = [(k + 1, app.rademacher_average(space, vecs[:k + 1])) for k in range(len(vecs))]
    checks = []
    if "operators" in cfg:
        if "seed" not in cfg:
            raise ConfigError("seed", "a seed is required when operators are sampled")
        ops = [_matrix(m, f"operators.{i}") for i, m in enumerate(cfg["operators"])]
        if any(m.shape != (space.dim, space.dim) for m in ops) or not 1 <= len(ops) <= 12:
            raise ConfigError("operators", "need 1..12 square matrices matching the space")
        trials = cfg.get("trials", 64)
        rb = app.r_bound_lower(ops, space, trials, _seed(cfg))
        # the first operator sees the same candidates as its own sampled norm
        first = app.operator_norm_sampled(ops[0], space, trials, _seed(cfg))
        results["r_bound_lower"] = rb
        results["first_operator_lower"] = first
        checks.append(_check("r_bound_dominates_first", rb >= first, value=rb))
    return results, {"partial_averages.csv": (["k", "average"], rows)}, checks


COMMANDS = {
    "kfunc": cmd_kfunc,
    "interp-norm": cmd_interp_norm,
    "mean-min": cmd_mean_min,
    "complex-check": cmd_complex_check,
    "stein-check": cmd_stein_check,
    "weighted-demo": cmd_weighted_demo,
    "sector-scan": cmd_sector_scan,
    "semigroup-scan": cmd_semigroup_scan,
    "rademacher": cmd_rademacher,
}


def _user_checks(cfg, results):
    out = []
    for c in cfg.get("checks", []):
        name = c["name"]
        value = results.get(name)
        if not isinstance(value, (int, float)):
            raise ConfigError(f"checks.{name}", "names no numeric result")
        ok = True
        if "expect" in c:
            ok &= abs(value - c["expect"]) <= c.get("tol", 0.0)
        if "max" in c:
            ok &= value <= c["max"]
        if "min" in c:
            ok &= value >= c["min"]
        out.append(_check(name, ok, value=value, **{k: v for k, v in c.items() if k != "name"}))
    return out


def run(command, config, out_dir):
    """Validate, dispatch, and write artifacts; returns the exit status."""
    validate(command, config)
    if command in SAMPLING and "seed" not in config:
        raise ConfigError("seed", "a seed is required for sampling commands")
    results, tables, checks = COMMANDS[command](config)
    checks += _user_checks(config, results)
    report = build_report(command, config, results, checks, SUITE)
    name = config.get("output", {}).get("report", "report.json")
    emit_report(report, tables, out_dir, name)
    return EXIT_OK if report["passed"] else EXIT_ASSERT


def main(argv=None):
    parser = argparse.ArgumentParser(prog="interplab")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir", default=".")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text())
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    if not isinstance(config, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_SCHEMA
    if args.seed is not None:
        config["seed"] = args.seed
    try:
        return run(args.command, config, args.out_dir)
    except ConfigError as e:
        print(f"error: invalid config at {e.path}: {e.message}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as e:
        print(f"error: cannot write artifacts: {e}", file=sys.stderr)
        return EXIT_IO
    except InterplabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
