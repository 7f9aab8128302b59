"""Command-line entry point: ``vortexlab <subcommand> [--config FILE] [--out DIR] ...``.

Exit codes: 0 success, 2 validation error, 3 numerical abort, 4 I/O error.
``VORTEX_LOG`` in {error, warn, info, debug} sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import NumericalAbort
from .harness import SweepConfig, SweepReport, default_sweep_config, export_report, run_sweep, source_bank
from .initial_data import InitialDatumSpec, make_rough_datum, mollify
from .ns_solver import run_forward
from .renorm import BetaFunction, default_beta_bank, default_test_bank, export_renorm_report, renorm_report
from .report import dump_json
from .stepping import SolverConfig
from .storage import grid_from_dict, load_trajectory, save_trajectory
from .transport import (
    DualConfig,
    StepperSpec,
    VelocitySource,
    dual_backward,
    dual_backward_adjoint,
    duality_terms,
    gronwall_ratio,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}

log = logging.getLogger("vortexlab")


def _configure_logging():
    level = LOG_LEVELS.get(os.environ.get("VORTEX_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _read_config(path) -> dict:
    if path is None:
        return {}
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def _datum(d: dict) -> InitialDatumSpec:
    d = dict(d)
    if d.get("center") is not None:
        d["center"] = tuple(d["center"])
    d["modes"] = tuple(tuple(m) for m in d.get("modes", ()))
    return InitialDatumSpec(**d)


def _emit(obj):
    sys.stdout.write(dump_json(obj))


def cmd_run_ns(args) -> int:
    cfg = _read_config(args.config)
    allowed = {"datum", "grid", "nu", "dt", "t_final", "snapshot_stride", "cfl_fraction", "mollify_constant", "seed"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown run-ns config keys: {sorted(unknown)}")
    grid = grid_from_dict(cfg.get("grid", {"n_points": 64, "side_length": 2 * math.pi}))
    datum = _datum(cfg.get("datum", {"kind": "taylor_green"}))
    sc = SolverConfig(
        float(cfg.get("nu", 0.01)),
        float(cfg.get("dt", 1e-3)),
        float(cfg.get("t_final", 1.0)),
        int(cfg.get("snapshot_stride", 1)),
        cfl_fraction=float(cfg.get("cfl_fraction", 0.5)),
        p_target=datum.p,
    )
    c = cfg.get("mollify_constant")
    delta = (grid.side_length if c is None else float(c)) * math.sqrt(sc.nu)
    w0 = mollify(make_rough_datum(datum, grid), delta)
    traj = run_forward(w0, sc)
    save_trajectory(traj, args.out)
    _emit({
        "out": str(args.out),
        "steps": sc.step_count,
        "snapshots": len(traj.times),
        "lp_target_final": traj.diagnostics["lp_target"][-1],
        "max_velocity": traj.attributes["max_velocity"],
    })
    return EXIT_OK


def cmd_run_sweep(args) -> int:
    cfg = _read_config(args.config)
    overrides = {"output_dir": str(args.out)}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.seed is not None:
        overrides["seed"] = args.seed
    config = SweepConfig.from_dict({**cfg, **overrides}) if cfg else default_sweep_config(**overrides)
    report = run_sweep(config)
    if args.format == "csv":
        export_report(report, args.out, "csv_bundle")
    _emit({"out": str(args.out), "status": report.status, "violations": report.violations, "failures": report.failures})
    if report.status != "complete":
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_dual_check(args) -> int:
    cfg = _read_config(args.config)
    traj = load_trajectory(args.run)
    if traj.config.snapshot_stride != 1:
        raise ValueError("dual-check needs a run stored with snapshot_stride 1")
    sc = traj.config
    q = float(cfg.get("q", sc.p_target / (sc.p_target - 1.0) if 1 < sc.p_target < 2 else 2.0))
    vel = VelocitySource.from_trajectory(traj)
    stepper = StepperSpec.for_navier_stokes(traj)
    rows = []
    for chi in source_bank(traj.grid, sc.t_final):
        dc = DualConfig(sc.nu, sc.dt, sc.t_final, q=q, chi=chi)
        for mode in ("adjoint", "pde"):
            phi = dual_backward_adjoint(dc, vel, stepper) if mode == "adjoint" else dual_backward(dc, vel)
            terms = duality_terms(traj, phi, chi)
            rows.append({
                "source": chi.name,
                "mode": mode,
                "residual": terms["residual"],
                "scale": terms["scale"],
                "relative": abs(terms["residual"]) / terms["scale"] if terms["scale"] > 0 else 0.0,
                "gronwall_ratio_q2": gronwall_ratio(phi, chi, None, 2.0),
                "gronwall_ratio_q": gronwall_ratio(phi, chi, None, q),
            })
            if args.out is not None and mode == "adjoint" and cfg.get("save_duals", False):
                save_trajectory(phi, Path(args.out) / f"dual_{chi.name}")
    doc = {"run": str(args.run), "q": q, "rows": rows}
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "duality.json").write_text(dump_json(doc))
    _emit(doc)
    return EXIT_OK


def cmd_renorm_report(args) -> int:
    cfg = _read_config(args.config)
    traj = load_trajectory(args.run)
    transport = load_trajectory(args.transport) if args.transport else None
    if "beta_bank" in cfg:
        bank = [BetaFunction(b["kind"], tuple(b.get("params", ()))) for b in cfg["beta_bank"]]
    else:
        bank = default_beta_bank(traj.initial()) + [BetaFunction("power_convex", (traj.config.p_target,))]
    amax = float(np.max(np.abs(traj.initial().values)))
    thresholds = cfg.get("thresholds", [f * amax for f in (0.0, 0.1, 0.25, 0.5, 0.75)])
    center = tuple(cfg["center"]) if cfg.get("center") is not None else None
    test_bank = default_test_bank(traj.grid, center)
    ball = cfg.get("ball_radius")
    written = []
    for beta in bank:
        rep = renorm_report(traj, beta, thresholds, test_bank, transport, traj.config.p_target, ball, center)
        out = Path(args.out) / beta.name.replace("(", "_").replace(")", "").replace(", ", "_")
        written.extend(str(p) for p in export_renorm_report(rep, out))
    _emit({"out": str(args.out), "files": written})
    return EXIT_OK


def cmd_export(args) -> int:
    src = Path(args.report)
    if src.is_dir():
        src = src / "report.json"
    report = SweepReport.from_dict(json.loads(src.read_text()))
    fmt = "csv_bundle" if args.format == "csv" else "json"
    paths = export_report(report, args.out, fmt)
    _emit({"out": str(args.out), "files": [str(p) for p in paths]})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vortexlab", description="Vanishing-viscosity experiments on the periodic box.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, required=out_required, help="output directory")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("run-ns", help="single forward Navier-Stokes run")
    common(p)
    p.set_defaults(func=cmd_run_ns)
    p = sub.add_parser("run-sweep", help="full vanishing-viscosity sweep")
    common(p)
    p.set_defaults(func=cmd_run_sweep)
    p = sub.add_parser("dual-check", help="duality residuals for a stored run")
    p.add_argument("run", type=Path, help="stored forward run directory")
    common(p, out_required=False)
    p.set_defaults(func=cmd_dual_check)
    p = sub.add_parser("renorm-report", help="renormalization diagnostics for a stored run")
    p.add_argument("run", type=Path)
    p.add_argument("--transport", type=Path, default=None, help="stored transport run to compare against")
    common(p)
    p.set_defaults(func=cmd_renorm_report)
    p = sub.add_parser("export", help="re-serialize a sweep report")
    p.add_argument("report", type=Path, help="report.json or the directory holding it")
    common(p)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NumericalAbort as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERICAL
    except (ValueError, TypeError, KeyError) as exc:
        log.error("validation error: %s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
