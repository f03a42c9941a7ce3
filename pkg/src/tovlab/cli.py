"""Command-line entry point: config parsing, orchestration, persistence.

One JSON document configures everything; flags override individual leaves by
dotted path (``--sweep.points=400``), so a report is reproducible from its
config alone.  Every output file carries the sha256 of the resolved config
on its first line, and all serialization uses fixed key order and %.17g
floats, so identical config + build gives bit-identical outputs.

Subcommands map onto the library layers: ``eos-validate`` probes the model
assumptions, ``solve`` integrates one star, ``sweep`` traces the mass-radius
curve, ``spectrum`` and ``modes`` run the two independent stability routes
for one star, ``tpp`` joins all of them into the turning-point report, and
``newtonian-check`` fits the small-kappa convergence rate.

Exit codes: 0 success; 1 invariant/consistency violation (a confidently
classified row breaking the mode-count identity, an invalid EOS); 2
configuration error; 3 numerical failure.  Failures print a JSON error
record to stdout.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import re
import sys

import numpy as np

from . import eos as eos_models
from .errors import (ConfigError, ConsistencyError, DegenerateCurveError,
                     DomainError, EosModelError, TovlabError)
from .family import (IndexConfig, SweepConfig, find_extrema, sweep_family,
                     tpp_report)
from .modes import unstable_modes
from .newtonian import newtonian_limit_check
from .spectral import spectral_report
from .tov import SolverConfig, solve_steady_state

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3

DEFAULT_CONFIG = {
    "eos": {
        "type": "hybrid",        # hybrid | polytrope | tabulated
        "k": 1.0,
        "gamma": 5.0 / 3.0,
        "rho_t": None,           # hybrid stiffening density (None = model default)
        "cs2_target": 1.0,
        "table_path": None,      # tabulated only
        "rho_cap": 1e30,
    },
    "solver": {
        "rel_tol": 1e-9,
        "abs_tol": 1e-12,
        "r_min_factor": 1e-3,
        "surface_tol": 1e-9,
    },
    "spectral": {
        "elements": 256,
        "out_factor": 25.0,
        "clustering": None,
    },
    "sweep": {
        "kappa_min": 0.05,
        "kappa_max": 4.0,
        "points": 60,
        "scale": "log",          # log | linear
    },
    "modes": {
        "cells": 400,
        "nodes": 400,            # velocity nodes are the cell edges: must equal cells
        "weight": "baryon",
    },
    "output": {
        "directory": ".",
        "formats": ["csv", "json"],
    },
    "workers": 0,                # 0 = available parallelism; reductions are order-fixed
}


# --- config plumbing --------------------------------------------------------

def _deep_update(base, override):
    for key, val in override.items():
        if (isinstance(val, dict) and isinstance(base.get(key), dict)):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


_OVERRIDE_RE = re.compile(r"^--([a-z_]+(?:\.[a-z_0-9]+)+)=(.*)$")


def split_overrides(argv):
    """Pull ``--block.leaf=value`` tokens out of argv; JSON-parse values."""
    rest, overrides = [], []
    for tok in argv:
        m = _OVERRIDE_RE.match(tok)
        if m:
            path, raw = m.groups()
            try:
                val = json.loads(raw)
            except json.JSONDecodeError:
                val = raw            # bare strings stay strings
            overrides.append((path.split("."), val))
        else:
            rest.append(tok)
    return rest, overrides


def load_config(path=None, overrides=()):
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        unknown = set(user) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
        _deep_update(cfg, user)
    for keys, val in overrides:
        node = cfg
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                raise ConfigError(f"no config block {'.'.join(keys[:-1])!r}")
            node = node[key]
        if keys[-1] not in node:
            raise ConfigError(f"no config leaf {'.'.join(keys)!r}")
        node[keys[-1]] = val
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    sw = cfg["sweep"]
    if not 0.0 < sw["kappa_min"] < sw["kappa_max"]:
        raise ConfigError("need kappa_max > kappa_min > 0")
    if sw["scale"] not in ("log", "linear"):
        raise ConfigError(f"sweep.scale must be log|linear, got {sw['scale']!r}")
    sp = cfg["spectral"]
    if sp["elements"] < 64:
        raise ConfigError("spectral.elements must be >= 64")
    if sp["out_factor"] < 10.0:
        raise ConfigError("spectral.out_factor must be >= 10")
    md = cfg["modes"]
    if md["nodes"] != md["cells"]:
        raise ConfigError("modes.nodes must equal modes.cells (the velocity "
                          "nodes are the density-cell edges)")
    if not 16 <= md["cells"] <= 2000:
        raise ConfigError("modes.cells must lie in [16, 2000]")
    fmts = set(cfg["output"]["formats"])
    if not fmts or not fmts <= {"csv", "json"}:
        raise ConfigError("output.formats must be a nonempty subset of "
                          "['csv', 'json']")
    if cfg["workers"] < 0:
        raise ConfigError("workers must be >= 0 (0 = auto)")


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _build_eos(cfg):
    block = dict(cfg["eos"])
    mapped = {"kind": block.pop("type", "hybrid")}
    table = block.pop("table_path", None)
    if table is not None:
        mapped["table"] = table
    mapped.update({k: v for k, v in block.items() if v is not None})
    return eos_models.from_config(mapped)


def _solver_cfg(cfg):
    return SolverConfig(**cfg["solver"])


# --- serialization ----------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def _sanitize(obj):
    """JSON-safe copy: numpy scalars/arrays to python, non-finite to None."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload, chash):
    doc = {"schema_version": SCHEMA_VERSION, "config_hash": chash}
    doc.update(_sanitize(payload))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows, chash):
    with open(path, "w") as fh:
        fh.write(f"# config_hash={chash}\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _emit_error(code, exc):
    record = {"schema_version": SCHEMA_VERSION,
              "error": {"exit_code": code, "type": type(exc).__name__,
                        "message": str(exc)}}
    print(json.dumps(record, sort_keys=True))


def emit_plot_data(report, out_dir, chash=None, formats=("csv",)):
    """Write the plotter inputs: the kappa-ordered curve with a stability
    color index (growing modes, saturated at 3) and the labeled event list."""
    if "csv" not in formats:
        return
    chash = chash or ""
    rows = [",".join((_fmt(r.R), _fmt(r.M), _fmt(r.kappa),
                      str(min(r.n_u_direct, 3))))
            for r in report.rows]
    write_csv(os.path.join(out_dir, "mass_radius.csv"),
              "R,M,kappa,color", rows, chash)
    ev_rows = []
    for i, ev in enumerate(report.events):
        label = chr(ord("A") + i) if i < 26 else f"E{i}"
        ev_rows.append(",".join((
            label, _fmt(ev["kappa_star"]), ev["which"], ev["kind"],
            ev["orientation"], str(bool(ev["confident"])).lower())))
    write_csv(os.path.join(out_dir, "events.csv"),
              "label,kappa_star,which,kind,orientation,confident",
              ev_rows, chash)


# --- subcommands ------------------------------------------------------------

def cmd_eos_validate(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    report = model.validate()
    if "json" in cfg["output"]["formats"]:
        write_json(os.path.join(out_dir, "eos_report.json"),
                   report.as_dict(), chash)
    return EXIT_OK if report.ok else EXIT_INVARIANT


def cmd_solve(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    st = solve_steady_state(model, args.kappa, _solver_cfg(cfg))
    fmts = cfg["output"]["formats"]
    if "json" in fmts:
        write_json(os.path.join(out_dir, "star.json"), {
            "kappa": st.kappa, "z": st.z, "M": st.M, "R": st.R,
            "M_over_R": st.M / st.R, "mu_R": st.mu_R, "Nbar": st.Nbar,
            "eos": model.descriptor(), "solver": st.solver_diag,
        }, chash)
    if "csv" in fmts:
        cols = (st.grid, st.y, st.m, st.rho, st.p, st.lam, st.mu)
        rows = (",".join(_fmt(c[i]) for c in cols)
                for i in range(st.grid.size))
        write_csv(os.path.join(out_dir, "star.csv"),
                  "r,y,m,rho,p,lam,mu", rows, chash)
    return EXIT_OK


def cmd_spectrum(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    sp = cfg["spectral"]
    report = spectral_report(model, args.kappa, elements=sp["elements"],
                             out_factor=sp["out_factor"],
                             cfg=_solver_cfg(cfg),
                             clustering=sp["clustering"])
    if "json" in cfg["output"]["formats"]:
        write_json(os.path.join(out_dir, "spectrum.json"),
                   report.as_dict(), chash)
    return EXIT_OK


def cmd_modes(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    st = solve_steady_state(model, args.kappa, _solver_cfg(cfg))
    report = unstable_modes(st, cells=cfg["modes"]["cells"],
                            weight=cfg["modes"]["weight"])
    fmts = cfg["output"]["formats"]
    if "json" in fmts:
        write_json(os.path.join(out_dir, "modes.json"),
                   report.as_dict(), chash)
    if "csv" in fmts:
        rows = list(report.profile_rows())
        write_csv(os.path.join(out_dir, "mode_profile.csv"),
                  rows[0], rows[1:], chash)
    return EXIT_OK


def cmd_sweep(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    grid = _sweep_cfg(cfg).grid()
    curve = sweep_family(model, grid, _solver_cfg(cfg))
    find_extrema(curve, "mass")
    find_extrema(curve, "ratio")
    fmts = cfg["output"]["formats"]
    if "csv" in fmts:
        rows = []
        for i, p in enumerate(curve.points):
            rows.append(",".join(
                [_fmt(v) for v in (p.kappa, p.M, p.R, p.MR, p.dM, p.dMR)]
                + [str(int(curve.i_kappa[i]))]))
        write_csv(os.path.join(out_dir, "curve.csv"),
                  "kappa,M,R,M_over_R,dM,dMR,i", rows, chash)
    if "json" in fmts:
        write_json(os.path.join(out_dir, "sweep.json"), {
            "eos": model.descriptor(),
            "events": [e.as_dict()
                       for e in curve.extrema_M + curve.extrema_MR],
            "deepest_kappa": float(curve.kappas[-1]),
        }, chash)
    return EXIT_OK


def _sweep_cfg(cfg):
    sw = cfg["sweep"]
    return SweepConfig(kappa_min=sw["kappa_min"], kappa_max=sw["kappa_max"],
                       points=sw["points"], spacing=sw["scale"],
                       solver=_solver_cfg(cfg))


def cmd_tpp(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    sp = cfg["spectral"]
    report = tpp_report(model, _sweep_cfg(cfg),
                        IndexConfig(elements=sp["elements"],
                                    out_factor=sp["out_factor"],
                                    cells=cfg["modes"]["cells"],
                                    weight=cfg["modes"]["weight"]))
    violations = report.verify()
    fmts = cfg["output"]["formats"]
    if "json" in fmts:
        payload = report.as_dict()
        payload["violations"] = violations
        write_json(os.path.join(out_dir, "tpp.json"), payload, chash)
    if "csv" in fmts:
        rows = list(report.csv_rows())
        write_csv(os.path.join(out_dir, "curve.csv"),
                  rows[0], rows[1:], chash)
    emit_plot_data(report, out_dir, chash, fmts)
    return EXIT_INVARIANT if violations else EXIT_OK


def cmd_newtonian_check(cfg, args, out_dir, chash):
    model = _build_eos(cfg)
    kappas = [float(v) for v in args.kappas.split(",")]
    report = newtonian_limit_check(model, kappas, _solver_cfg(cfg))
    fmts = cfg["output"]["formats"]
    if "json" in fmts:
        write_json(os.path.join(out_dir, "newtonian.json"), {
            "gamma": report.gamma, "k": report.k, "rate": report.rate,
            "prefactor": report.prefactor,
            "kappas": report.kappas, "err_c0": report.err_c0,
            "err_c1": report.err_c1,
        }, chash)
    if "csv" in fmts:
        rows = list(report.to_csv_rows())
        write_csv(os.path.join(out_dir, "newtonian.csv"),
                  rows[0], rows[1:], chash)
    return EXIT_OK


# --- driver -----------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tovlab",
        description="Relativistic star families and their growing modes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, needs_kappa=False):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="JSON config file (defaults apply otherwise)")
        p.add_argument("--out", default=None,
                       help="output directory (overrides output.directory)")
        if needs_kappa:
            p.add_argument("--kappa", type=float, required=True,
                           help="central enthalpy potential of the star")
        p.set_defaults(handler=handler)
        return p

    add("eos-validate", cmd_eos_validate)
    add("solve", cmd_solve, needs_kappa=True)
    add("sweep", cmd_sweep)
    add("spectrum", cmd_spectrum, needs_kappa=True)
    add("modes", cmd_modes, needs_kappa=True)
    add("tpp", cmd_tpp)
    p = add("newtonian-check", cmd_newtonian_check)
    p.add_argument("--kappas", default="0.2,0.1,0.05,0.025,0.0125",
                   help="comma-separated kappa values in (0, 0.2]")
    return parser


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    argv, overrides = split_overrides(argv)
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, EosModelError, DomainError) as exc:
        _emit_error(EXIT_CONFIG, exc)
        return EXIT_CONFIG
    chash = config_hash(cfg)
    out_dir = args.out or cfg["output"]["directory"]
    try:
        os.makedirs(out_dir, exist_ok=True)
        return args.handler(cfg, args, out_dir, chash)
    except (ConfigError, EosModelError) as exc:
        _emit_error(EXIT_CONFIG, exc)
        return EXIT_CONFIG
    except DomainError as exc:
        _emit_error(EXIT_CONFIG, exc)
        return EXIT_CONFIG
    except (ConsistencyError, DegenerateCurveError) as exc:
        _emit_error(EXIT_INVARIANT, exc)
        return EXIT_INVARIANT
    except (TovlabError, OSError) as exc:
        _emit_error(EXIT_NUMERICS, exc)
        return EXIT_NUMERICS


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
