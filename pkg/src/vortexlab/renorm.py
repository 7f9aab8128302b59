"""Renormalization diagnostics over trajectories.

For a divergence-free velocity, a renormalized transport solution conserves
``int beta(w) dx`` for every bounded C^1 ``beta`` and the measure of every
superlevel set of ``|w|``.  These are the quantities probed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, integrate, local_lp_distance
from .report import dump_json, write_csv
from .stepping import Trajectory

__all__ = [
    "BetaFunction",
    "RenormReport",
    "beta_integral",
    "beta_series",
    "renorm_drift",
    "is_non_increasing",
    "distribution_function",
    "weak_star_pairings",
    "compare_fields_lp",
    "default_beta_bank",
    "default_test_bank",
    "bump",
    "renorm_report",
    "export_renorm_report",
]

BETA_KINDS = ("arctan", "bounded_rational", "smooth_clip", "power_convex", "constant")


@dataclass(frozen=True)
class BetaFunction:
    """A renormalization nonlinearity.

    Parameters by kind: ``arctan`` (scale), ``bounded_rational`` (scale) for
    ``(s/a) / (1 + (s/a)^2)``, ``smooth_clip`` (M) for ``M tanh(s/M)``,
    ``power_convex`` (r) for ``|s|^r``, ``constant`` (c).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in BETA_KINDS:
            raise ValueError(f"unknown beta kind {self.kind!r}")
        defaults = {"arctan": (1.0,), "bounded_rational": (1.0,), "smooth_clip": (1.0,), "power_convex": (2.0,), "constant": (0.0,)}
        params = tuple(float(v) for v in self.params) or defaults[self.kind]
        if self.kind == "power_convex" and params[0] <= 1:
            raise ValueError("power_convex needs exponent r > 1")
        if self.kind in ("arctan", "bounded_rational", "smooth_clip") and params[0] <= 0:
            raise ValueError(f"{self.kind} scale must be positive")
        object.__setattr__(self, "params", params)

    @property
    def bounded_c1(self) -> bool:
        return self.kind != "power_convex"

    @property
    def convex(self) -> bool:
        return self.kind in ("power_convex", "constant")

    @property
    def name(self) -> str:
        return f"{self.kind}({', '.join(f'{v:g}' for v in self.params)})"

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        a = self.params[0]
        if self.kind == "arctan":
            return np.arctan(s / a)
        if self.kind == "bounded_rational":
            z = s / a
            return z / (1.0 + z * z)
        if self.kind == "smooth_clip":
            return a * np.tanh(s / a)
        if self.kind == "power_convex":
            return np.abs(s) ** a
        return np.full_like(s, a)

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        a = self.params[0]
        if self.kind == "arctan":
            return (1.0 / a) / (1.0 + (s / a) ** 2)
        if self.kind == "bounded_rational":
            z2 = (s / a) ** 2
            return (1.0 - z2) / (a * (1.0 + z2) ** 2)
        if self.kind == "smooth_clip":
            return 1.0 - np.tanh(s / a) ** 2
        if self.kind == "power_convex":
            return a * np.sign(s) * np.abs(s) ** (a - 1.0)
        return np.zeros_like(s)

    def sampled_bounds(self, span: float = 1e6, count: int = 200001) -> tuple[float, float]:
        """``(sup |beta|, sup |beta'|)`` over a symmetric 1D sample grid."""
        s = np.concatenate([-np.geomspace(span, 1e-8, count // 2), [0.0], np.geomspace(1e-8, span, count // 2)])
        return float(np.max(np.abs(self(s)))), float(np.max(np.abs(self.derivative(s))))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}


def beta_integral(omega: ScalarField, beta: BetaFunction) -> float:
    """``int beta(omega) dx`` on the grid."""
    return integrate(ScalarField(omega.grid, beta(omega.values)))


def beta_series(traj: Trajectory, beta: BetaFunction) -> np.ndarray:
    return np.array([beta_integral(w, beta) for w in traj.omega_snapshots])


def renorm_drift(traj: Trajectory, beta: BetaFunction, mode: str = "conservation") -> np.ndarray:
    """``|int beta(w(t_k)) - int beta(w(0))|`` at every snapshot.

    ``mode="decay"`` is for convex ``beta`` on viscous runs, where the integral
    must not increase; it rejects non-convex ``beta``.  ``mode="conservation"``
    requires a bounded C^1 ``beta``.
    """
    if mode == "decay":
        if not beta.convex:
            raise ValueError(f"decay mode needs a convex beta, got {beta.name}")
    elif mode == "conservation":
        if not beta.bounded_c1:
            raise ValueError(f"{beta.name} is not bounded; use mode='decay'")
    else:
        raise ValueError(f"unknown drift mode {mode!r}")
    series = beta_series(traj, beta)
    return np.abs(series - series[0])


def is_non_increasing(series, rtol: float = 1e-8) -> bool:
    """True if no entry exceeds its predecessor by more than ``rtol * |series[0]|``."""
    series = np.asarray(series, dtype=float)
    slack = rtol * max(abs(series[0]), np.finfo(float).tiny)
    return bool(np.all(np.diff(series) <= slack))


def distribution_function(omega: ScalarField, thresholds) -> np.ndarray:
    """``lambda -> h^2 #{cells : |omega| > lambda}`` for ascending ``thresholds``."""
    lam = np.asarray(thresholds, dtype=float)
    if lam.ndim != 1 or np.any(np.diff(lam) < 0):
        raise ValueError("thresholds must be a sorted ascending list")
    a = np.sort(np.abs(omega.values).ravel())
    counts = a.size - np.searchsorted(a, lam, side="right")
    return omega.grid.cell_area * counts.astype(float)


def weak_star_pairings(traj: Trajectory, test_bank) -> np.ndarray:
    """``int_0^T int w eta_j dx dt`` for each test function (trapezoid in time)."""
    grid = traj.grid
    for eta in test_bank:
        if eta.grid != grid:
            raise ValueError("test function lives on a different grid")
    if not test_bank:
        return np.zeros(0)
    etas = np.stack([eta.values for eta in test_bank])
    inst = np.array([grid.cell_area * np.tensordot(etas, w.values, axes=([1, 2], [0, 1])) for w in traj.omega_snapshots])
    if len(traj.times) == 1:
        return np.zeros(len(test_bank))
    return np.trapezoid(inst, traj.times, axis=0)


def compare_fields_lp(a: Trajectory, b: Trajectory, p: float, ball_radius: float, center=None) -> np.ndarray:
    """Local L^p distance between matching snapshots of two trajectories."""
    if a.grid != b.grid:
        raise ValueError("trajectories live on different grids")
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0, atol=1e-12 * max(a.times[-1], 1.0)):
        raise ValueError("trajectories do not share snapshot times")
    if center is None:
        center = (a.grid.side_length / 2, a.grid.side_length / 2)
    return np.array(
        [local_lp_distance(x, y, p, ball_radius, center) for x, y in zip(a.omega_snapshots, b.omega_snapshots)]
    )


def default_beta_bank(omega0: ScalarField) -> list[BetaFunction]:
    m = 0.5 * float(np.max(np.abs(omega0.values)))
    m = m if m > 0 else 1.0
    return [
        BetaFunction("arctan"),
        BetaFunction("bounded_rational"),
        BetaFunction("smooth_clip", (m,)),
        BetaFunction("smooth_clip", (2 * m,)),
    ]


def bump(grid: Grid, center, width: float) -> ScalarField:
    """Tensor-product C-infinity bump of half-width ``width`` (periodic offsets)."""
    L = grid.side_length
    X, Y = grid.mesh

    def b1(d):
        s = ((d + L / 2) % L - L / 2) / width
        inside = np.abs(s) < 1
        out = np.zeros_like(s)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    return ScalarField(grid, b1(X - center[0]) * b1(Y - center[1]))


def default_test_bank(grid: Grid, center=None, widths=None, spacing=None) -> list[ScalarField]:
    """Bumps at 5 centres (a plus-shaped stencil) times 2 widths, then the constant 1."""
    L = grid.side_length
    if center is None:
        center = (L / 2, L / 2)
    if widths is None:
        widths = (L / 16, L / 8)
    if spacing is None:
        spacing = L / 8
    cx, cy = center
    centers = [(cx, cy), (cx + spacing, cy), (cx - spacing, cy), (cx, cy + spacing), (cx, cy - spacing)]
    bank = [bump(grid, c, w) for w in widths for c in centers]
    bank.append(ScalarField(grid, np.ones(grid.shape)))
    return bank


@dataclass
class RenormReport:
    """Diagnostics of one trajectory against one beta."""

    beta: BetaFunction
    times: np.ndarray
    drift_series: np.ndarray
    thresholds: np.ndarray
    distribution_snapshots: np.ndarray
    pairing_matrix: np.ndarray
    step4_distance: dict = field(default_factory=dict)

    def tables(self) -> dict:
        drift = {"columns": ["time", "drift"], "rows": [[t, d] for t, d in zip(self.times, self.drift_series)]}
        dist_cols = ["time"] + [f"lambda_{j}" for j in range(len(self.thresholds))]
        dist = {"columns": dist_cols, "rows": [[t, *row] for t, row in zip(self.times, self.distribution_snapshots)]}
        pair = {"columns": ["test_index", "pairing"], "rows": [[j, v] for j, v in enumerate(self.pairing_matrix)]}
        s4_cols = ["time"] + sorted(self.step4_distance)
        s4_rows = []
        if self.step4_distance:
            keys = sorted(self.step4_distance)
            s4_rows = [[t, *(self.step4_distance[k][i] for k in keys)] for i, t in enumerate(self.times)]
        step4 = {"columns": s4_cols, "rows": s4_rows}
        return {"drift": drift, "distribution": dist, "pairings": pair, "step4": step4}


def renorm_report(
    traj: Trajectory,
    beta: BetaFunction,
    thresholds,
    test_bank,
    transport_traj: Trajectory | None = None,
    p: float = 1.5,
    ball_radius: float | None = None,
    center=None,
) -> RenormReport:
    mode = "conservation" if beta.bounded_c1 else "decay"
    drift = renorm_drift(traj, beta, mode)
    dist = np.array([distribution_function(w, thresholds) for w in traj.omega_snapshots])
    pairings = weak_star_pairings(traj, test_bank)
    step4 = {}
    if transport_traj is not None:
        R = ball_radius if ball_radius is not None else traj.grid.side_length / 4
        step4 = {
            "l1": compare_fields_lp(traj, transport_traj, 1.0, R, center),
            f"lp_{p:g}": compare_fields_lp(traj, transport_traj, p, R, center),
        }
    return RenormReport(beta, np.array(traj.times), drift, np.asarray(thresholds, float), dist, pairings, step4)


def export_renorm_report(report: RenormReport, out_dir) -> list[Path]:
    """Write ``renorm.json`` plus one CSV per series; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = report.tables()
    doc = {"beta": report.beta.to_dict(), "thresholds": list(report.thresholds), "tables": tables}
    paths = [out / "renorm.json"]
    paths[0].write_text(dump_json(doc))
    for name, table in tables.items():
        path = out / f"{name}.csv"
        write_csv(path, table)
        paths.append(path)
    return paths
