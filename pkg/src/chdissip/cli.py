"""Command line front end.

Exit codes: 0 success, 1 runtime or input error, 2 diagnostics failed.
``CH_LOG`` sets the log level (``DEBUG``, ``INFO``, ``WARNING``, ...).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .diagnostics import run_diagnostics
from .eulerian import EulerianError, EulerianState
from .evolution import BlowUpError, Trajectory, solve
from .io import (FIELD_COLUMNS, load_run, meta_line, write_csv, write_json, write_plot_script,
                 write_run)
from .lagrangian import LagrangianError, LagrangianState
from .oracle import oracle_table, params_from_Dtstar, params_from_initial
from .transform import eul_to_lag, lag_to_eul

log = logging.getLogger("chdissip")

EXIT_OK, EXIT_ERROR, EXIT_DIAGNOSTICS = 0, 1, 2


def _formats(flag: str | None):
    if flag is None:
        return None
    return ["csv", "json"] if flag == "both" else [flag]


def _setup_logging() -> None:
    level = os.environ.get("CH_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


# -- run -------------------------------------------------------------------
def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    overrides = {"formats": _formats(args.format)}
    if args.out:
        overrides["directory"] = str(Path(args.out).resolve())
    cfg = cfg.with_overrides(**overrides)
    solver = cfg.solver_config()
    if args.resume:
        doc = json.loads(Path(args.resume).read_text())
        initial = LagrangianState.from_dict(doc["lagrangian"])
    else:
        initial = cfg.initial_state()
    log.info("run: config sha256 %s", cfg.sha256())
    traj = solve(initial, solver)
    report = run_diagnostics(traj)
    out = cfg.directory
    write_run(traj, out, cfg.to_dict(), cfg.sha256(), cfg.formats)
    if "csv" in cfg.formats:
        write_plot_script(out, "fields.csv")
    write_json(out / "report.json", report.to_dict(), cfg.sha256())
    (out / "report.txt").write_text(meta_line(cfg.sha256()) + "\n" + report.table() + "\n")
    print(report.table())
    print(f"wrote {out}")
    return EXIT_OK if report.passed else EXIT_DIAGNOSTICS


# -- oracle ----------------------------------------------------------------
def cmd_oracle(args) -> int:
    if args.config:
        cfg = RunConfig.load(args.config)
        if cfg.raw["initial"]["preset"] != "peakon_antipeakon":
            raise ConfigError("oracle needs initial.preset = peakon_antipeakon")
        params = cfg.pap_params()
        times = cfg.solver_config().output_times
        sha = cfg.sha256()
    else:
        if args.p0 is not None or args.q0 is not None:
            if args.p0 is None or args.q0 is None:
                raise ConfigError("give both --p0 and --q0")
            params = params_from_initial(args.p0, args.q0)
        else:
            params = params_from_Dtstar(args.D, args.t_star)
        times = tuple(args.times)
        doc = {"oracle": {"p0": params.p0, "q0": params.q0}, "times": list(times),
               "x": [args.x_min, args.x_max, args.nx]}
        sha = hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()
    if args.nx < 2 or not args.x_min < args.x_max:
        raise ConfigError("need --nx >= 2 and --x-min < --x-max")
    x = np.linspace(args.x_min, args.x_max, args.nx)
    table = oracle_table(params, times, x)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    fmts = _formats(args.format) or ["csv"]
    if "csv" in fmts:
        write_csv(out / "oracle.csv", FIELD_COLUMNS, table, sha)
        write_plot_script(out, "oracle.csv")
    if "json" in fmts:
        write_json(out / "oracle.json",
                   {"params": {"p0": params.p0, "q0": params.q0, "D": params.D,
                               "t_star": params.t_star},
                    "columns": list(FIELD_COLUMNS), "rows": table.tolist()}, sha)
    print(f"oracle: D={params.D:.12g} t_star={params.t_star:.12g}, {table.shape[0]} rows -> {out}")
    return EXIT_OK


# -- verify ----------------------------------------------------------------
def cmd_verify(args) -> int:
    run_dir = Path(args.run_dir)
    try:
        cfg_doc, snaps, hist = load_run(run_dir)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"corrupt snapshot data in {run_dir}: {exc}") from exc
    cfg = RunConfig.from_dict(cfg_doc, run_dir)
    initial = snaps[0].eulerian if snaps[0].t == 0.0 else cfg.initial_state()
    traj = Trajectory(config=cfg.solver_config(), initial=initial, snapshots=snaps)
    if hist:
        traj.step_t = list(hist["t"])
        traj.step_energy = list(hist["energy"])
        traj.step_total = list(hist["total"])
    report = run_diagnostics(traj)
    print(report.table())
    out = Path(args.out) if args.out else run_dir
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "verify_report.json", report.to_dict(), cfg.sha256())
    if not report.passed:
        names = ", ".join(c.name for c in report.failures())
        print(f"verify: FAILED checks: {names}", file=sys.stderr)
        return EXIT_DIAGNOSTICS
    return EXIT_OK


# -- transform -------------------------------------------------------------
def cmd_transform(args) -> int:
    src = Path(args.input)
    if not src.is_file():
        raise FileNotFoundError(f"input file not found: {src}")
    try:
        doc = json.loads(src.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {src}: {exc}") from exc
    doc.pop("meta", None)
    if args.direction == "to-lagrangian":
        result = eul_to_lag(EulerianState.from_dict(doc)).to_dict()
    else:
        state = LagrangianState.from_dict(doc)
        x_grid = None
        if args.x_grid:
            x_grid = np.asarray(json.loads(Path(args.x_grid).read_text())["x"], dtype=float)
        result = lag_to_eul(state, x_grid).to_dict()
    out = Path(args.out) if args.out else src.with_suffix(f".{args.direction[3:]}.json")
    if out.is_dir():
        out = out / f"{src.stem}.{args.direction[3:]}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    sha = hashlib.sha256(src.read_bytes()).hexdigest()
    write_json(out, result, sha)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chdissip", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"chdissip {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="solve from a config and write snapshots")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (overrides output.directory)")
    r.add_argument("--format", choices=("csv", "json", "both"))
    r.add_argument("--resume", help="checkpoint.json of an earlier run")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="write the closed-form peakon-antipeakon fields")
    o.add_argument("--config")
    o.add_argument("--D", type=float, default=1.0)
    o.add_argument("--t-star", dest="t_star", type=float, default=1.0)
    o.add_argument("--p0", type=float)
    o.add_argument("--q0", type=float)
    o.add_argument("--times", type=float, nargs="+", default=[0.0, 0.5, 0.99, 1.5])
    o.add_argument("--x-min", type=float, default=-5.0)
    o.add_argument("--x-max", type=float, default=5.0)
    o.add_argument("--nx", type=int, default=201)
    o.add_argument("--out")
    o.add_argument("--format", choices=("csv", "json", "both"))
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="re-run all diagnostics on a run directory")
    v.add_argument("run_dir")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("transform", help="map between Eulerian and Lagrangian JSON")
    t.add_argument("direction", choices=("to-lagrangian", "to-eulerian"))
    t.add_argument("input")
    t.add_argument("--out")
    t.add_argument("--x-grid", help="Eulerian JSON whose x grid the output should use")
    t.set_defaults(func=cmd_transform)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except BlowUpError as exc:
        print(f"error: solver {exc}", file=sys.stderr)
    except (ConfigError, EulerianError, LagrangianError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
