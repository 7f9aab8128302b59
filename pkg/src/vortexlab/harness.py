"""Vanishing-viscosity sweep: run every viscosity, check the invariants, tabulate convergence."""

from __future__ import annotations

import hashlib
import logging
import math
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import _spectral as sp
from .biot_savart import growth_ratio, velocity_gradient_norm
from .errors import NumericalAbort
from .fields import Grid, ScalarField, VectorField, _lp, ball_mask, local_lp_distance
from .initial_data import InitialDatumSpec, make_rough_datum, mollify
from .ns_solver import run_forward
from .renorm import (
    BetaFunction,
    beta_series,
    compare_fields_lp,
    default_beta_bank,
    bump,
    default_test_bank,
    distribution_function,
    is_non_increasing,
    renorm_drift,
    weak_star_pairings,
)
from .report import dump_json, write_csv
from .stepping import SolverConfig, Trajectory, trapezoid_weights
from .storage import grid_from_dict, grid_to_dict, save_trajectory
from .transport import (
    DualConfig,
    SeparableSource,
    StepperSpec,
    TemporalBump,
    VelocitySource,
    dual_backward,
    dual_backward_adjoint,
    duality_terms,
    gronwall_ratio,
    transport_forward,
)

__all__ = [
    "SweepConfig",
    "SweepReport",
    "run_sweep",
    "run_single",
    "cauchy_rate",
    "export_report",
    "default_sweep_config",
    "source_bank",
    "TABLE_COLUMNS",
]

log = logging.getLogger(__name__)

LP_TOL = 1e-8
DUALITY_TOL = 1e-10
GRONWALL_SLACK = 0.10
MASS_TOL = 1e-12

TABLE_COLUMNS = {
    "velocity_cauchy": ["nu_coarse", "nu_fine", "distance"],
    "pairing_drift": ["nu_coarse", "nu_fine", "max_pairing_difference"],
    "duality_residuals": ["nu", "source", "mode", "residual", "scale", "relative", "passed"],
    "gronwall": ["nu", "source", "mode", "q", "ratio", "passed"],
    "lp_estimates": ["nu", "p", "initial_norm", "sup_norm", "ratio", "monotone", "passed"],
    "renorm_drift": ["nu", "beta", "field", "max_drift"],
    "step4_distances": ["nu", "time", "l1_distance", "lp_distance"],
    "growth_ratios": ["nu", "max_growth_ratio", "max_velocity_bound"],
}


@dataclass(frozen=True)
class SweepConfig:
    """Everything that defines one sweep.

    ``dt_policy`` is ``"fixed"`` (use ``dt``) or ``"cfl"``: half the CFL step of
    the fastest mollified initial velocity over the sweep, capped at ``dt_max``
    and shrunk so ``t_final`` is a whole number of steps.  ``mollify_constant``
    ``c`` sets ``delta(nu) = c sqrt(nu)``; ``None`` means ``c = side_length``.
    """

    nu_list: tuple
    datum: InitialDatumSpec
    grid: Grid
    t_final: float = 1.0
    dt_policy: str = "cfl"
    dt: float | None = None
    dt_max: float = 0.01
    cfl_fraction: float = 0.5
    mollify_constant: float | None = None
    ball_radius: float = 1.0
    output_dir: str | None = None
    persist_trajectories: bool = True
    workers: int = 1
    seed: int = 0
    beta_bank: tuple | None = None
    test_widths: tuple | None = None
    pde_duality: bool = True

    def __post_init__(self):
        nus = tuple(float(v) for v in self.nu_list)
        if not nus:
            raise ValueError("nu_list must not be empty")
        if any(v <= 0 for v in nus):
            raise ValueError("all viscosities must be positive")
        if any(b >= a for a, b in zip(nus, nus[1:])):
            raise ValueError("nu_list must be strictly decreasing")
        object.__setattr__(self, "nu_list", nus)
        if not 1 < self.datum.p < 2:
            raise ValueError("datum.p must lie in (1, 2)")
        if self.dt_policy not in ("fixed", "cfl"):
            raise ValueError(f"unknown dt_policy {self.dt_policy!r}")
        if self.dt_policy == "fixed" and not (self.dt and self.dt > 0):
            raise ValueError("dt_policy 'fixed' needs a positive dt")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if not 0 < self.ball_radius < self.grid.side_length / 2:
            raise ValueError("ball_radius must be positive and fit inside the torus")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.beta_bank is not None:
            object.__setattr__(self, "beta_bank", tuple(self.beta_bank))

    def delta(self, nu: float) -> float:
        c = self.grid.side_length if self.mollify_constant is None else self.mollify_constant
        return c * math.sqrt(nu)

    def center(self) -> tuple[float, float]:
        return self.datum.resolved_center(self.grid)

    def to_dict(self) -> dict:
        d = self.datum
        return {
            "nu_list": list(self.nu_list),
            "datum": {
                "kind": d.kind,
                "p": d.p,
                "gamma": d.gamma,
                "support_radius": d.support_radius,
                "center": list(d.center) if d.center is not None else None,
                "amplitude": d.amplitude,
                "aspect": d.aspect,
                "modes": [list(m) for m in d.modes],
            },
            "grid": grid_to_dict(self.grid),
            "t_final": self.t_final,
            "dt_policy": self.dt_policy,
            "dt": self.dt,
            "dt_max": self.dt_max,
            "cfl_fraction": self.cfl_fraction,
            "mollify_constant": self.mollify_constant,
            "ball_radius": self.ball_radius,
            "seed": self.seed,
            "beta_bank": None if self.beta_bank is None else [b.to_dict() for b in self.beta_bank],
            "test_widths": None if self.test_widths is None else list(self.test_widths),
            "pde_duality": self.pde_duality,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep config keys: {sorted(unknown)}")
        datum = d.get("datum", {})
        if not isinstance(datum, InitialDatumSpec):
            datum = dict(datum)
            if datum.get("center") is not None:
                datum["center"] = tuple(datum["center"])
            datum["modes"] = tuple(tuple(m) for m in datum.get("modes", ()))
            d["datum"] = InitialDatumSpec(**datum)
        if not isinstance(d.get("grid"), Grid):
            d["grid"] = grid_from_dict(d["grid"])
        if d.get("beta_bank") is not None:
            d["beta_bank"] = tuple(
                b if isinstance(b, BetaFunction) else BetaFunction(b["kind"], tuple(b.get("params", ())))
                for b in d["beta_bank"]
            )
        if d.get("test_widths") is not None:
            d["test_widths"] = tuple(d["test_widths"])
        d["nu_list"] = tuple(d["nu_list"])
        return cls(**d)

    def config_hash(self) -> str:
        return hashlib.sha256(dump_json(self.to_dict()).encode()).hexdigest()


def default_sweep_config(**overrides) -> SweepConfig:
    """Desk-scale rough-datum sweep: n=128, L=8 pi, T=1, p=1.5, gamma=1.2.

    ``delta = 3 pi sqrt(nu)``: wide enough that the smallest viscosity stays
    resolved at n=128, narrow enough that ``delta`` sits below the support
    radius, so the mollified data actually sharpen along the sweep.
    """
    L = 8 * np.pi
    base = dict(
        nu_list=(4e-2, 2e-2, 1e-2, 5e-3),
        datum=InitialDatumSpec("power_singularity", p=1.5, gamma=1.2, support_radius=4.0),
        grid=Grid(128, L),
        t_final=1.0,
        dt_policy="cfl",
        dt_max=0.01,
        mollify_constant=3 * np.pi,
        ball_radius=L / 4,
    )
    base.update(overrides)
    return SweepConfig(**base)


def source_bank(grid: Grid, t_final: float, center=None) -> list[SeparableSource]:
    """Three space-time bumps with disjoint time supports inside (0.1 T, 0.9 T)."""
    L = grid.side_length
    cx, cy = center if center is not None else (L / 2, L / 2)
    width = L / 8
    windows = [(0.10, 0.35), (0.375, 0.625), (0.65, 0.90)]
    offsets = [(0.0, 0.0), (L / 16, 0.0), (0.0, -L / 16)]
    bank = []
    for j, ((a, b), (ox, oy)) in enumerate(zip(windows, offsets)):
        spatial = bump(grid, (cx + ox, cy + oy), width)
        bank.append(SeparableSource(spatial, TemporalBump(a * t_final, b * t_final), name=f"chi_{j}"))
    return bank


def choose_dt(config: SweepConfig, data: dict) -> float:
    if config.dt_policy == "fixed":
        dt = config.dt
    else:
        umax = 0.0
        for w in data.values():
            u1, u2 = sp.velocity(w.values, config.grid)
            umax = max(umax, float(np.sqrt(np.max(u1 * u1 + u2 * u2))))
        dt = config.dt_max
        if umax > 0:
            dt = min(dt, 0.5 * config.cfl_fraction * config.grid.h / umax)
    steps = math.ceil(config.t_final / dt - 1e-9)
    return config.t_final / steps


def _lp_checks(traj: Trajectory, p_target: float) -> list[dict]:
    rows = []
    for p, key in ((1.0, "lp_1"), (p_target, "lp_target"), (2.0, "lp_2")):
        s = traj.diagnostics[key]
        ratio = float(np.max(s) / s[0]) if s[0] > 0 else (0.0 if np.max(s) == 0 else math.inf)
        monotone = bool(np.all(np.diff(s) <= LP_TOL * s[0]))
        rows.append({
            "p": p,
            "initial_norm": float(s[0]),
            "sup_norm": float(np.max(s)),
            "ratio": ratio,
            "monotone": monotone,
            "passed": bool(np.max(s) <= (1 + LP_TOL) * s[0]) and monotone,
        })
    return rows


def _dual_checks(traj, vel, stepper, config: SweepConfig, nu, dt, sources, q):
    duality, gronwall, mass = [], [], {}
    modes = ["adjoint"] + (["pde"] if config.pde_duality else [])
    for chi in sources:
        dc = DualConfig(nu, dt, config.t_final, q=q, chi=chi)
        for mode in modes:
            phi = dual_backward_adjoint(dc, vel, stepper) if mode == "adjoint" else dual_backward(dc, vel)
            terms = duality_terms(traj, phi, chi)
            rel = abs(terms["residual"]) / terms["scale"] if terms["scale"] > 0 else abs(terms["residual"])
            duality.append({
                "source": chi.name,
                "mode": mode,
                "residual": terms["residual"],
                "scale": terms["scale"],
                "relative": rel,
                # The discrete-adjoint identity is exact; PDE mode only converges.
                "passed": bool(rel <= DUALITY_TOL) if mode == "adjoint" else True,
            })
            for qq in (2.0, q):
                r = gronwall_ratio(phi, chi, None, qq)
                gronwall.append({"source": chi.name, "mode": mode, "q": qq, "ratio": r, "passed": bool(r <= 1 + GRONWALL_SLACK)})
    # Homogeneous dual: no source, bump terminal datum; the mean must be conserved.
    phi_T = sources[0].spatial
    dc = DualConfig(nu, dt, config.t_final, q=q, chi=None, phi_terminal=phi_T)
    scale = _lp(phi_T.values, phi_T.grid.cell_area, 1.0)
    for mode in modes:
        phi = dual_backward_adjoint(dc, vel, stepper) if mode == "adjoint" else dual_backward(dc, vel)
        integ = phi.diagnostics["integral"]
        drift = float(np.max(np.abs(integ - integ[-1])) / scale)
        mass[mode] = {"relative_drift": drift, "passed": bool(drift <= MASS_TOL)}
        for qq in (2.0, q):
            r = gronwall_ratio(phi, None, phi_T, qq)
            gronwall.append({"source": "homogeneous", "mode": mode, "q": qq, "ratio": r, "passed": bool(r <= 1 + GRONWALL_SLACK)})
    return duality, gronwall, mass


def run_single(config: SweepConfig, nu: float, dt: float, omega0: ScalarField) -> dict:
    """All per-viscosity work of the sweep; returns a result dict (trajectories included)."""
    grid = config.grid
    p = config.datum.p
    q = p / (p - 1.0)
    center = config.center()
    delta = config.delta(nu)
    w0 = mollify(omega0, delta)
    ns_cfg = SolverConfig(nu, dt, config.t_final, 1, cfl_fraction=config.cfl_fraction, p_target=p)
    log.info("nu=%g: forward run (delta=%.4g, dt=%.4g)", nu, delta, dt)
    traj = run_forward(w0, ns_cfg)
    vel = VelocitySource.from_trajectory(traj)
    stepper = StepperSpec.for_navier_stokes(traj)
    sources = source_bank(grid, config.t_final, center)
    log.info("nu=%g: dual problems", nu)
    duality, gronwall, mass = _dual_checks(traj, vel, stepper, config, nu, dt, sources, q)
    log.info("nu=%g: frozen-velocity transport", nu)
    wbar = transport_forward(w0, vel, dt, config.t_final, 1, config.cfl_fraction)

    bank = list(config.beta_bank) if config.beta_bank is not None else default_beta_bank(w0)
    drifts = []
    for beta in bank:
        drifts.append({"beta": beta.name, "field": "omega", "max_drift": float(np.max(renorm_drift(traj, beta)))})
        drifts.append({"beta": beta.name, "field": "transport", "max_drift": float(np.max(renorm_drift(wbar, beta)))})
    convex = BetaFunction("power_convex", (p,))
    decay = beta_series(traj, convex)
    cross = float(np.max(np.abs(decay - traj.diagnostics["lp_target"] ** p)) / decay[0]) if decay[0] > 0 else 0.0

    l1 = compare_fields_lp(traj, wbar, 1.0, config.ball_radius, center)
    lp = compare_fields_lp(traj, wbar, p, config.ball_radius, center)
    growth = max(growth_ratio(u, center) for u in traj.velocity_snapshots)
    zero = VectorField.zeros(grid)
    # ||u||_{L^p(B_R)} + ||grad u||_p, the quantity the a-priori velocity bound controls.
    vbound = max(
        local_lp_distance(u, zero, p, config.ball_radius, center) + velocity_gradient_norm(u, p)
        for u in traj.velocity_snapshots
    )
    widths = config.test_widths
    test_bank = default_test_bank(grid, center, widths)
    pairings = weak_star_pairings(traj, test_bank)
    amax = float(np.max(np.abs(w0.values)))
    thresholds = [f * amax for f in (0.0, 0.1, 0.25, 0.5, 0.75)]

    lp_rows = _lp_checks(traj, p)
    violations = []
    for r in lp_rows:
        if not r["passed"]:
            violations.append(f"nu={nu:g}: L^{r['p']:g} a-priori estimate violated (ratio {r['ratio']:.3e})")
    for r in duality:
        if not r["passed"]:
            violations.append(f"nu={nu:g}: duality residual {r['relative']:.3e} for {r['source']}")
    for r in gronwall:
        if not r["passed"]:
            violations.append(f"nu={nu:g}: Gronwall envelope ratio {r['ratio']:.3f} ({r['source']}, {r['mode']}, q={r['q']:g})")
    for mode, m in mass.items():
        if not m["passed"]:
            violations.append(f"nu={nu:g}: dual mass drift {m['relative_drift']:.3e} ({mode})")
    if not is_non_increasing(decay, LP_TOL):
        violations.append(f"nu={nu:g}: convex beta integral increased")

    summary = {
        "nu": nu,
        "delta": delta,
        "dt": dt,
        "steps": ns_cfg.step_count,
        "max_velocity": traj.attributes["max_velocity"],
        "lp_estimates": lp_rows,
        "duality": duality,
        "gronwall": gronwall,
        "dual_mass": mass,
        "renorm_drift": drifts,
        "decay": {"beta": convex.name, "non_increasing": is_non_increasing(decay, LP_TOL), "cross_check": cross},
        "step4": {"times": traj.times, "l1": l1, "lp": lp, "terminal_l1": float(l1[-1]), "terminal_lp": float(lp[-1])},
        "growth_ratio_max": growth,
        "velocity_bound_max": vbound,
        "pairings": pairings,
        "distribution": {
            "thresholds": thresholds,
            "omega_initial": distribution_function(traj.initial(), thresholds),
            "omega_final": distribution_function(traj.final(), thresholds),
            "transport_final": distribution_function(wbar.final(), thresholds),
        },
        "violations": violations,
    }
    return {"nu": nu, "summary": summary, "trajectory": traj, "transport": wbar}


def _space_time_ball_norm(a: Trajectory, b: Trajectory, p: float, radius: float, center) -> float:
    mask = ball_mask(a.grid, radius, center)
    dA = a.grid.cell_area
    w = trapezoid_weights(len(a.times)) * a.config.dt
    total = 0.0
    for wk, ua, ub in zip(w, a.velocity_snapshots, b.velocity_snapshots):
        d = np.hypot(ua.x_component - ub.x_component, ua.y_component - ub.y_component)[mask]
        total += wk * dA * float(np.sum(d**p))
    return total ** (1.0 / p)


@dataclass
class SweepReport:
    config: dict
    runs: dict
    tables: dict
    status: str = "complete"
    failures: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    cauchy_rate: float | None = None
    # (forward, transport) trajectories keyed by nu; in memory only, never serialized.
    trajectories: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "runs": self.runs,
            "tables": self.tables,
            "status": self.status,
            "failures": self.failures,
            "violations": self.violations,
            "provenance": self.provenance,
            "cauchy_rate": self.cauchy_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepReport":
        return cls(**{k: d.get(k) for k in ("config", "runs", "tables", "status", "failures", "violations", "provenance", "cauchy_rate")})

    def table(self, name: str) -> list[dict]:
        t = self.tables[name]
        return [dict(zip(t["columns"], row)) for row in t["rows"]]


def _nu_key(nu: float) -> str:
    return "%.17g" % nu


def run_sweep(config: SweepConfig, keep_trajectories: bool = False) -> SweepReport:
    """Run the whole sweep and, if ``output_dir`` is set, persist it.

    A numerical abort in one run marks the report ``failed`` and records the
    viscosity and step index; the other runs still complete.
    """
    omega0 = make_rough_datum(config.datum, config.grid)
    data = {nu: mollify(omega0, config.delta(nu)) for nu in config.nu_list}
    dt = choose_dt(config, data)
    log.info("sweep: %d viscosities, dt=%.6g, n=%d", len(config.nu_list), dt, config.grid.n_points)

    def job(nu):
        try:
            return run_single(config, nu, dt, omega0)
        except NumericalAbort as exc:
            log.error("nu=%g aborted: %s", nu, exc)
            return {"nu": nu, "error": str(exc), "step_index": exc.step_index}

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(job, config.nu_list))
    else:
        results = [job(nu) for nu in config.nu_list]
    by_nu = {r["nu"]: r for r in results}
    ordered = [by_nu[nu] for nu in sorted(by_nu, reverse=True)]

    failures = [{"nu": r["nu"], "error": r["error"], "step_index": r["step_index"]} for r in ordered if "error" in r]
    good = [r for r in ordered if "error" not in r]
    center = config.center()
    p = config.datum.p

    tables = {name: {"columns": cols, "rows": []} for name, cols in TABLE_COLUMNS.items()}
    for r in good:
        s, nu = r["summary"], r["nu"]
        for row in s["lp_estimates"]:
            tables["lp_estimates"]["rows"].append([nu, row["p"], row["initial_norm"], row["sup_norm"], row["ratio"], row["monotone"], row["passed"]])
        for row in s["duality"]:
            tables["duality_residuals"]["rows"].append([nu, row["source"], row["mode"], row["residual"], row["scale"], row["relative"], row["passed"]])
        for row in s["gronwall"]:
            tables["gronwall"]["rows"].append([nu, row["source"], row["mode"], row["q"], row["ratio"], row["passed"]])
        for row in s["renorm_drift"]:
            tables["renorm_drift"]["rows"].append([nu, row["beta"], row["field"], row["max_drift"]])
        for t, a, b in zip(s["step4"]["times"], s["step4"]["l1"], s["step4"]["lp"]):
            tables["step4_distances"]["rows"].append([nu, float(t), float(a), float(b)])
        tables["growth_ratios"]["rows"].append([nu, s["growth_ratio_max"], s["velocity_bound_max"]])
    for ra, rb in zip(good, good[1:]):
        dist = _space_time_ball_norm(ra["trajectory"], rb["trajectory"], p, config.ball_radius, center)
        tables["velocity_cauchy"]["rows"].append([ra["nu"], rb["nu"], dist])
        diff = float(np.max(np.abs(ra["summary"]["pairings"] - rb["summary"]["pairings"])))
        tables["pairing_drift"]["rows"].append([ra["nu"], rb["nu"], diff])

    rate = None
    cauchy = [row[2] for row in tables["velocity_cauchy"]["rows"]]
    if len(cauchy) >= 2 and all(c > 0 for c in cauchy):
        rate = cauchy_rate(cauchy, [row[0] for row in tables["velocity_cauchy"]["rows"]])

    violations = [v for r in good for v in r["summary"]["violations"]]
    report = SweepReport(
        config=config.to_dict(),
        runs={_nu_key(r["nu"]): r["summary"] for r in good},
        tables=tables,
        status="failed" if failures else "complete",
        failures=failures,
        violations=violations,
        provenance={
            "config_hash": config.config_hash(),
            "package_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "dt": dt,
        },
        cauchy_rate=rate,
    )
    if config.output_dir:
        out = Path(config.output_dir)
        if config.persist_trajectories:
            for r in good:
                run_dir = out / "runs" / f"nu_{_nu_key(r['nu'])}"
                save_trajectory(r["trajectory"], run_dir / "navier_stokes")
                save_trajectory(r["transport"], run_dir / "transport")
        export_report(report, out, "json")
        export_report(report, out, "csv_bundle")
    if keep_trajectories:
        report.trajectories = {r["nu"]: (r["trajectory"], r["transport"]) for r in good}
    return report


def cauchy_rate(table, nus=None) -> float:
    """Least-squares slope of ``log(table)`` against ``log(nu)``.

    Without ``nus`` the entries are taken at successively halved viscosities.
    """
    vals = np.asarray(table, dtype=float)
    if vals.size < 2:
        raise ValueError("cauchy_rate needs at least two entries")
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise ValueError("cauchy_rate needs positive finite entries")
    x = np.log(np.asarray(nus, dtype=float)) if nus is not None else -np.arange(vals.size) * np.log(2.0)
    if x.size != vals.size:
        raise ValueError("table and nus differ in length")
    slope = np.polyfit(x, np.log(vals), 1)[0]
    return float(slope) if abs(slope) > 1e-14 else 0.0


def export_report(report: SweepReport, out_dir, format: str = "json") -> list[Path]:
    """Write ``report.json`` or one CSV per table into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if format == "json":
            path = out / "report.json"
            path.write_text(dump_json(report.to_dict()))
            return [path]
        if format in ("csv", "csv_bundle"):
            paths = []
            for name in sorted(report.tables):
                path = out / f"{name}.csv"
                write_csv(path, report.tables[name])
                paths.append(path)
            return paths
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    raise ValueError(f"unknown export format {format!r}")
