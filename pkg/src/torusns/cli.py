"""Batch experiment driver.

Subcommands map one-to-one onto the package's operations; every run resolves
its configuration from defaults, an optional flat key=value config file and
explicit flags (highest precedence), embeds the resolved config plus a
content hash in each artifact, and uses only counter-based seeded
randomness, so identical config + seed reproduces outputs byte for byte.

Exit codes: 0 success, 2 validation error, 3 solver blow-up (report still
written), 4 capacity error. Failures also leave a machine-readable error
JSON in the output directory.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import conditions as cond
from . import pipeline as pl
from . import snapshots as snap
from .errors import (BlowUpError, CapacityError, DomainError, TorusNSError,
                     ValidationError)
from .field import SpectralField, TimeSampledField
from .grid import TorusGrid
from .lp import BesovParams, HeatQuadrature, besov_dyadic, besov_heat
from .operators import (divergence_defect, hs_norm, l2_norm, leray_project,
                        linf_norm, random_field)
from .solver import SolverConfig, solve_ns2d, solve_ns3d


def _output_root():
    return os.environ.get("TORUSNS_OUTPUT_ROOT", ".")


def _resolve_path(name):
    if os.path.isabs(name):
        return name
    return os.path.join(_output_root(), name)


def _load_config_file(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"config line without '=': {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def _coerce(value, kind):
    if kind is bool:
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes", "on")
    return kind(value)


def _resolve(schema, args, file_cfg):
    """defaults < config file < explicit CLI flags."""
    resolved = {}
    for key, (kind, default, _help) in schema.items():
        val = default
        if key in file_cfg:
            val = _coerce(file_cfg[key], kind)
        cli_val = getattr(args, key.replace("-", "_"), None)
        if cli_val is not None:
            val = cli_val
        if val is None:
            raise ValidationError(f"missing required option --{key}")
        resolved[key] = val
    return resolved


def _add_schema(parser, schema):
    for key, (kind, default, help_text) in schema.items():
        flag = "--" + key.replace("_", "-")
        if kind is bool:
            parser.add_argument(flag, default=None, type=lambda s: s.lower() in
                                ("1", "true", "yes", "on"), help=help_text)
        else:
            parser.add_argument(flag, default=None, type=kind,
                                help=f"{help_text} (default {default})")


def _parse_n_list(text):
    try:
        return [int(tok) for tok in str(text).split(",") if tok]
    except ValueError as err:
        raise ValidationError(f"bad N list {text!r}") from err


# ---------------------------------------------------------------------------
# subcommands

_COMMON = {
    "config": (str, "", "flat key=value config file"),
    "out": (str, "out", "output name stem (under TORUSNS_OUTPUT_ROOT)"),
    "seed": (int, 7, "Philox counter seed"),
}

SCHEMAS = {
    "project": dict(_COMMON, **{
        "infile": (str, "", "CGNS1 field to project (empty: random field)"),
        "resolution": (int, 32, "grid resolution"),
        "dim": (int, 3, "grid dimension"),
        "components": (int, 3, "components of the random field"),
    }),
    "besov": dict(_COMMON, **{
        "infile": (str, "", "CGNS1 field (empty: random field)"),
        "resolution": (int, 32, "grid resolution"),
        "dim": (int, 3, "grid dimension"),
        "s": (float, 1.0, "regularity index (heat norm measures B^{-s})"),
        "p": (float, math.inf, "Lebesgue index"),
        "q": (float, 2.0, "summation index"),
        "quad_n": (int, 200, "heat quadrature points"),
    }),
    "simulate2d": dict(_COMMON, **{
        "resolution": (int, 64, "grid resolution"),
        "dt": (float, 1e-3, "time step"),
        "t_end": (float, 1.0, "final time"),
        "scheme": (str, "ifrk4", "time scheme"),
        "snapshot_stride": (int, 10, "record every k-th step"),
        "p_blowup": (float, 8.0, "Besov index of the blow-up monitor"),
        "amplitude": (float, 1.0, "L2 norm of the random data"),
    }),
    "simulate3d": dict(_COMMON, **{
        "resolution": (int, 32, "grid resolution"),
        "dt": (float, 1e-3, "time step"),
        "t_end": (float, 1.0, "final time"),
        "scheme": (str, "ifrk4", "time scheme"),
        "snapshot_stride": (int, 10, "record every k-th step"),
        "p_blowup": (float, 8.0, "Besov index of the blow-up monitor"),
        "amplitude": (float, 1.0, "L2 norm of the random data"),
    }),
    "pipeline": dict(_COMMON, **{
        "N": (int, 5, "vertical frequency of the example datum"),
        "N0": (int, 2, "horizontal band limit"),
        "amplitude": (float, 2.0, "L2 norm of v0h"),
        "resolution": (int, 32, "3-D grid resolution"),
        "dt": (float, 1e-3, "time step"),
        "t_end": (float, 1.0, "final time"),
        "p": (float, 8.0, "Besov index of the weighted norm"),
    }),
    "picard": dict(_COMMON, **{
        "resolution": (int, 16, "3-D grid resolution"),
        "nodes": (int, 65, "coarse time nodes (<= 257)"),
        "t_end": (float, 1.0, "final time"),
        "lam": (float, 10.0, "weight parameter lambda"),
        "iters": (int, 8, "Picard iterations"),
        "p": (float, 8.0, "Besov index of the weighted norm"),
        "forcing_amplitude": (float, 1e-2, "L2 amplitude of the forcing datum"),
        "background_amplitude": (float, 0.5, "L2 amplitude of the background flow"),
    }),
    "example": dict(_COMMON, **{
        "N": (int, 8, "vertical frequency"),
        "N0": (int, 2, "horizontal band limit"),
        "amp": (float, 2.0, "L2 norm of v0h"),
        "resolution": (int, 0, "3-D grid resolution (0: smallest admissible)"),
    }),
    "conditions": dict(_COMMON, **{
        "N": (int, 32, "vertical frequency"),
        "N0": (int, 2, "horizontal band limit"),
        "amp": (float, 2.0, "L2 norm of v0h"),
        "p": (float, 8.0, "Besov index (theorem range: p > 6)"),
    }),
    "scan": dict(_COMMON, **{
        "N": (str, "16,32,64,128", "comma-separated N ladder"),
        "N0": (int, 2, "horizontal band limit"),
        "amp": (float, 2.0, "L2 norm of v0h"),
        "p": (float, 8.0, "Besov index (theorem range: p > 6)"),
    }),
}


def _load_or_random(cfg, components=None):
    if cfg.get("infile"):
        return snap.read_field(cfg["infile"])
    grid = TorusGrid(cfg["dim"], cfg["resolution"])
    comps = components if components is not None else cfg.get("components", grid.dim)
    return random_field(grid, comps, cfg["seed"], divergence_free=False)


def _run_project(cfg):
    u = _load_or_random(cfg)
    before = divergence_defect(u)
    v = leray_project(u)
    after = divergence_defect(v)
    out = _resolve_path(cfg["out"] + "_projected.cgns")
    snap.write_field(v, out)
    snap.write_json_report(_resolve_path(cfg["out"] + "_project.json"), {
        "divergence_defect_before": before,
        "divergence_defect_after": after,
        "snapshot": os.path.basename(out),
    }, cfg)
    return 0


def _run_besov(cfg):
    u = _load_or_random(cfg)
    s, p, q = cfg["s"], cfg["p"], cfg["q"]
    quad = HeatQuadrature.for_grid(u.grid, cfg["quad_n"])
    entries = [
        ("besov_dyadic", -s, p, q,
         besov_dyadic(u, BesovParams(-s, p, q)), 0),
        ("besov_heat", -s, p, q, besov_heat(u, s, p, q, quad), cfg["quad_n"]),
        ("l2", 0.0, 2.0, 2.0, l2_norm(u), 0),
        ("h_half", 0.5, 2.0, 2.0, hs_norm(u, 0.5), 0),
        ("linf", 0.0, math.inf, math.inf, linf_norm(u), 0),
    ]
    snap.write_norm_report_csv(_resolve_path(cfg["out"] + "_norms.csv"),
                               entries, cfg)
    return 0


def _solver_config(cfg):
    return SolverConfig(dt=cfg["dt"], t_end=cfg["t_end"], scheme=cfg["scheme"],
                        snapshot_stride=cfg["snapshot_stride"],
                        p_blowup=cfg["p_blowup"])


def _run_simulate(cfg, dim):
    grid = TorusGrid(dim, cfg["resolution"])
    u0 = random_field(grid, 3, cfg["seed"], amplitude=cfg["amplitude"])
    scfg = _solver_config(cfg)
    try:
        if dim == 2:
            traj, diag = solve_ns2d(u0, None, scfg)
        else:
            traj, diag = solve_ns3d(u0, scfg)
    except BlowUpError as err:
        snap.write_json_report(_resolve_path(cfg["out"] + "_blowup.json"), {
            "error": "BlowUpError", "message": str(err), "t": err.t,
        }, cfg)
        raise
    snap.write_diagnostics_csv(diag, _resolve_path(cfg["out"] + "_diag.csv"), cfg)
    snap.write_field(traj.sample(len(traj) - 1),
                     _resolve_path(cfg["out"] + "_final.cgns"))
    return 0


def _example_resolution(n_vertical):
    res = 8
    while 2 * n_vertical > TorusGrid(3, res).dealias_cutoff:
        res *= 2
        if res > 4096:
            raise CapacityError("no admissible grid for this N")
    return res


def _run_example(cfg):
    spec = cond.ExampleSpec(cfg["N"], cfg["N0"], cfg["amp"], cfg["seed"])
    res = cfg["resolution"] or _example_resolution(cfg["N"])
    grid3 = TorusGrid(3, res)
    u0 = cond.make_example(spec, grid3)
    out = _resolve_path(cfg["out"] + "_u0.cgns")
    snap.write_field(u0, out)
    snap.write_json_report(_resolve_path(cfg["out"] + "_example.json"), {
        "snapshot": os.path.basename(out),
        "resolution": res,
        "divergence_defect": divergence_defect(u0),
        "l2": l2_norm(u0),
    }, cfg)
    return 0


def _run_pipeline(cfg):
    spec = cond.ExampleSpec(cfg["N"], cfg["N0"], cfg["amplitude"], cfg["seed"],
                            horizontal_resolution=cfg["resolution"])
    grid3 = TorusGrid(3, cfg["resolution"])
    u0 = cond.make_example(spec, grid3)
    scfg = SolverConfig(dt=cfg["dt"], t_end=cfg["t_end"], snapshot_stride=10)
    try:
        result = pl.run_pipeline(u0, scfg, p=cfg["p"])
    except BlowUpError as err:
        snap.write_json_report(_resolve_path(cfg["out"] + "_blowup.json"), {
            "error": "BlowUpError", "message": str(err), "stage": err.stage,
        }, cfg)
        raise
    diag = result.diagnostics_pns
    payload = {
        "x_lambda": {repr(k): v for k, v in result.x_lambda_table.items()},
        "weight_integral_final": float(result.weight_integral[-1]),
        "remainder_final_l2": l2_norm(result.remainder.sample(len(result.remainder) - 1)),
        "caveats": result.caveats,
        "pns_final_energy": float(diag.energy[-1]),
    }
    snap.write_json_report(_resolve_path(cfg["out"] + "_pipeline.json"), payload, cfg)
    snap.write_diagnostics_csv(diag, _resolve_path(cfg["out"] + "_pns_diag.csv"), cfg)
    return 0


def _run_picard(cfg):
    grid = TorusGrid(3, cfg["resolution"])
    from .operators import apply_heat

    w0 = random_field(grid, 3, cfg["seed"], amplitude=cfg["background_amplitude"])
    g0 = random_field(grid, 3, cfg["seed"] + 1, amplitude=cfg["forcing_amplitude"])
    times = np.linspace(0.0, cfg["t_end"], cfg["nodes"])
    u0_traj = TimeSampledField.from_closure(times, lambda t: apply_heat(w0, t))
    forcing = TimeSampledField.from_closure(times, lambda t: apply_heat(g0, t))
    result = pl.picard_pns(SpectralField.zeros(grid, 3), u0_traj, forcing,
                           lam=cfg["lam"], iters=cfg["iters"], p=cfg["p"])
    snap.write_json_report(_resolve_path(cfg["out"] + "_picard.json"), {
        "contraction_ratios": result.contraction_ratios,
        "x_lambda_diffs": result.x_lambda_diffs,
        "iterate_sup_l2": result.iterate_sup_l2,
        "converged": result.converged,
        "non_contraction": result.non_contraction,
    }, cfg)
    return 0


def _run_conditions(cfg):
    spec = cond.ExampleSpec(cfg["N"], cfg["N0"], cfg["amp"], cfg["seed"])
    report = cond.smallness_report(spec, p=cfg["p"])
    snap.write_json_report(_resolve_path(cfg["out"] + "_conditions.json"),
                           report.to_dict(), cfg)
    return 0


def _run_scan(cfg):
    n_list = _parse_n_list(cfg["N"])
    if not n_list:
        raise ValidationError("empty N list")
    template = cond.ExampleSpec(max(n_list), cfg["N0"], cfg["amp"], cfg["seed"])
    if not cfg["p"] > 6:
        raise DomainError(f"the smallness condition requires p > 6, got {cfg['p']}")
    table = cond.scaling_study(template, n_list, p=cfg["p"])
    columns = ("N", "h1", "h2", "h2_per_amp", "h3", "h3_oscillating",
               "h3_interaction", "A", "B", "lower_bound_margin")
    rows = [(r.N, r.h1, r.h2, r.h2_per_amp, r.h3, r.h3_oscillating,
             r.h3_interaction, r.a_value, r.b_value, r.lower_bound_margin)
            for r in table.rows]
    rows.append(("slope", table.slopes["h1"], table.slopes["h2_per_amp"],
                 table.slopes["h2_per_amp"], table.slopes["h3"],
                 table.slopes["h3_oscillating"], table.slopes["h3_interaction"],
                 "", "", table.slopes["lower_bound_margin"]))
    snap.write_csv(_resolve_path(cfg["out"] + "_scan.csv"), columns, rows, cfg)
    return 0


_RUNNERS = {
    "project": _run_project,
    "besov": _run_besov,
    "simulate2d": lambda cfg: _run_simulate(cfg, 2),
    "simulate3d": lambda cfg: _run_simulate(cfg, 3),
    "pipeline": _run_pipeline,
    "picard": _run_picard,
    "example": _run_example,
    "conditions": _run_conditions,
    "scan": _run_scan,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="torusns",
        description="Pseudo-spectral Navier-Stokes laboratory on the torus")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        _add_schema(p, schema)
    return parser


def _write_error(cfg_out, subcommand, err, code):
    payload = {"error": type(err).__name__, "message": str(err),
               "subcommand": subcommand, "exit_code": code}
    try:
        snap.write_json_report(
            _resolve_path((cfg_out or "out") + "_error.json"), payload)
    except OSError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    schema = SCHEMAS[args.subcommand]
    out_stem = getattr(args, "out", None) or "out"
    try:
        file_cfg = {}
        if getattr(args, "config", None):
            file_cfg = _load_config_file(args.config)
        cfg = _resolve(schema, args, file_cfg)
        out_stem = cfg["out"]
        return _RUNNERS[args.subcommand](cfg)
    except (ValidationError, DomainError) as err:
        _write_error(out_stem, args.subcommand, err, 2)
        print(f"validation error: {err}", file=sys.stderr)
        return 2
    except BlowUpError as err:
        _write_error(out_stem, args.subcommand, err, 3)
        print(f"solver blow-up: {err}", file=sys.stderr)
        return 3
    except CapacityError as err:
        _write_error(out_stem, args.subcommand, err, 4)
        print(f"capacity error: {err}", file=sys.stderr)
        return 4
    except TorusNSError as err:
        _write_error(out_stem, args.subcommand, err, 2)
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
