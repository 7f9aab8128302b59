"""Integrating-factor RK4 core, solver configuration and trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CFLViolation
from .fields import Grid, ScalarField, _lp

__all__ = [
    "SolverConfig",
    "Trajectory",
    "ifrk4_step",
    "ifrk4_adjoint_step",
    "STAGE_OFFSETS",
    "check_cfl",
    "field_diagnostics",
    "trapezoid_weights",
]

# Stage times of the classical RK4 tableau, as fractions of dt.
STAGE_OFFSETS = (0.0, 0.5, 0.5, 1.0)


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping parameters; ``t_final`` must be a multiple of ``dt``."""

    nu: float
    dt: float
    t_final: float
    snapshot_stride: int = 1
    integrator: str = "IFRK4"
    cfl_fraction: float = 0.5
    p_target: float = 1.5

    def __post_init__(self):
        if not self.nu >= 0:
            raise ValueError(f"nu must be >= 0, got {self.nu}")
        if not self.dt > 0 or not self.t_final > 0:
            raise ValueError("dt and t_final must be positive")
        if self.integrator != "IFRK4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be an integer >= 1")
        if not 0 < self.cfl_fraction <= 1:
            raise ValueError("cfl_fraction must lie in (0, 1]")
        if self.p_target < 1:
            raise ValueError("p_target must be >= 1")
        steps = round(self.t_final / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError(f"t_final = {self.t_final} is not a multiple of dt = {self.dt}")
        if steps % self.snapshot_stride:
            raise ValueError(
                f"step count {steps} is not a multiple of snapshot_stride {self.snapshot_stride}"
            )
        object.__setattr__(self, "snapshot_stride", int(self.snapshot_stride))

    @property
    def step_count(self) -> int:
        return round(self.t_final / self.dt)

    def step_time(self, k: int) -> float:
        return self.t_final if k == self.step_count else k * self.dt

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "dt": self.dt,
            "t_final": self.t_final,
            "snapshot_stride": self.snapshot_stride,
            "integrator": self.integrator,
            "cfl_fraction": self.cfl_fraction,
            "p_target": self.p_target,
        }


@dataclass(eq=False)
class Trajectory:
    """Stride-thinned snapshots plus per-step diagnostic series of one solve.

    ``omega_snapshots`` holds whatever scalar the solve evolves (the vorticity,
    a transported scalar, or a dual solution); ``role`` says which.
    """

    config: SolverConfig
    grid: Grid
    times: np.ndarray
    omega_snapshots: list
    velocity_snapshots: list = field(default_factory=list)
    step_times: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)
    role: str = "forward"
    attributes: dict = field(default_factory=dict)

    @property
    def fields(self) -> list:
        return self.omega_snapshots

    @property
    def step_count(self) -> int:
        return self.config.step_count

    def final(self) -> ScalarField:
        return self.omega_snapshots[-1]

    def initial(self) -> ScalarField:
        return self.omega_snapshots[0]


def trapezoid_weights(count: int) -> np.ndarray:
    """Weights of the composite trapezoid rule on ``count`` equispaced nodes (unit spacing)."""
    w = np.ones(count)
    if count > 1:
        w[0] = w[-1] = 0.5
    return w


def check_cfl(u1: np.ndarray, u2: np.ndarray, dt: float, grid: Grid, cfl_fraction: float, step_index: int):
    umax = float(np.sqrt(np.max(u1 * u1 + u2 * u2)))
    if umax > 0:
        admissible = cfl_fraction * grid.h / umax
        if dt > admissible:
            raise CFLViolation(umax, dt, admissible, step_index)
    return umax


def field_diagnostics(w: np.ndarray, grid: Grid, p_target: float, u=None) -> dict:
    dA = grid.cell_area
    out = {
        "lp_1": _lp(w, dA, 1.0),
        "lp_target": _lp(w, dA, p_target),
        "lp_2": _lp(w, dA, 2.0),
        "lp_inf": _lp(w, dA, math.inf),
        "integral": float(dA * np.sum(w)),
    }
    if u is not None:
        out["energy"] = float(0.5 * dA * np.sum(u[0] ** 2 + u[1] ** 2))
    return out


def ifrk4_step(w_hat, t, dt, E, E2, rhs):
    """One Lawson (integrating-factor) RK4 step in spectral space.

    ``E``/``E2`` are the linear semigroup multipliers over ``dt``/``dt/2``;
    ``rhs(stage, time, state_hat)`` returns the spectral right-hand side.
    """
    k1 = rhs(0, t, w_hat)
    a = E2 * (w_hat + 0.5 * dt * k1)
    k2 = rhs(1, t + 0.5 * dt, a)
    b = E2 * w_hat + 0.5 * dt * k2
    k3 = rhs(2, t + 0.5 * dt, b)
    c = E * w_hat + dt * E2 * k3
    k4 = rhs(3, t + dt, c)
    return E * w_hat + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def ifrk4_adjoint_step(l_hat, dt, E, E2, rhs_t):
    """Transpose of :func:`ifrk4_step` for a linear rhs.

    ``rhs_t(stage, x_hat)`` applies the transpose of the stage operator.
    """
    c_bar = (dt / 6.0) * rhs_t(3, l_hat)
    b_bar = rhs_t(2, E2 * ((dt / 3.0) * l_hat + dt * c_bar))
    a_bar = rhs_t(1, (dt / 3.0) * E2 * l_hat + 0.5 * dt * b_bar)
    E_l = E * l_hat
    return E_l + E * c_bar + E2 * (b_bar + a_bar) + rhs_t(0, (dt / 6.0) * E_l + 0.5 * dt * E2 * a_bar)
