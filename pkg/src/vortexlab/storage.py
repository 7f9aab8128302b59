"""Trajectory directories: ``manifest.json`` plus VRT1 snapshot files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fields import Grid
from .report import dump_json
from .snapshots import read_snapshot, write_snapshot
from .stepping import SolverConfig, Trajectory

__all__ = ["save_trajectory", "load_trajectory", "grid_to_dict", "grid_from_dict"]

MANIFEST = "manifest.json"


def grid_to_dict(grid: Grid) -> dict:
    return {"n_points": grid.n_points, "side_length": grid.side_length, "dealias_fraction": grid.dealias_fraction}


def grid_from_dict(d: dict) -> Grid:
    return Grid(int(d["n_points"]), float(d["side_length"]), float(d.get("dealias_fraction", 2.0 / 3.0)))


def _plain(value):
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return None


def save_trajectory(traj: Trajectory, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, (t, w) in enumerate(zip(traj.times, traj.omega_snapshots)):
        entry = {"time": float(t), "scalar": f"scalar_{k:05d}.vrt"}
        write_snapshot(d / entry["scalar"], w, t)
        if traj.velocity_snapshots:
            entry["velocity"] = f"velocity_{k:05d}.vrt"
            write_snapshot(d / entry["velocity"], traj.velocity_snapshots[k], t)
        entries.append(entry)
    attributes = {k: _plain(v) for k, v in traj.attributes.items() if _plain(v) is not None}
    manifest = {
        "format": "VRT1",
        "role": traj.role,
        "attributes": attributes,
        "config": traj.config.to_dict(),
        "grid": grid_to_dict(traj.grid),
        "times": traj.times,
        "step_times": traj.step_times,
        "diagnostics": {k: np.asarray(v) for k, v in traj.diagnostics.items()},
        "snapshots": entries,
    }
    (d / MANIFEST).write_text(dump_json(manifest))
    return d


def load_trajectory(directory) -> Trajectory:
    d = Path(directory)
    manifest = json.loads((d / MANIFEST).read_text())
    grid = grid_from_dict(manifest["grid"])
    config = SolverConfig(**manifest["config"])
    omegas, vels = [], []
    for entry in manifest["snapshots"]:
        w, _ = read_snapshot(d / entry["scalar"], grid.dealias_fraction)
        omegas.append(w)
        if "velocity" in entry:
            u, _ = read_snapshot(d / entry["velocity"], grid.dealias_fraction)
            vels.append(u)
    return Trajectory(
        config=config,
        grid=grid,
        times=np.array(manifest["times"], dtype=float),
        omega_snapshots=omegas,
        velocity_snapshots=vels,
        step_times=np.array(manifest["step_times"], dtype=float),
        diagnostics={k: np.array(v, dtype=float) for k, v in manifest["diagnostics"].items()},
        role=manifest["role"],
        attributes=manifest.get("attributes", {}),
    )
