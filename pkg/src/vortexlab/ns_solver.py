"""Pseudospectral Navier-Stokes / Euler solver in vorticity form on the torus.

``d_t w + u . grad w = nu lap w`` with ``u`` the Biot-Savart velocity of ``w``.
Diffusion is integrated exactly through the factor ``exp(-nu |k|^2 t)``; the
dealiased advection term is advanced with RK4 (Lawson form).
"""

from __future__ import annotations

import logging

import numpy as np

from . import _spectral as sp
from .errors import NonFiniteState
from .fields import ScalarField, VectorField
from .stepping import (
    SolverConfig,
    Trajectory,
    check_cfl,
    field_diagnostics,
    ifrk4_step,
)

__all__ = ["nonlinear_term", "step", "advance", "run_forward", "SolverConfig", "Trajectory"]

log = logging.getLogger(__name__)


def nonlinear_term(omega: ScalarField) -> ScalarField:
    """Dealiased ``-(u . grad) omega`` with ``u`` from Biot-Savart."""
    grid = omega.grid
    w_hat = sp.fwd(omega.values)
    u1, u2 = (sp.inv(c, grid) for c in sp.biot_savart_hat(w_hat, grid))
    return ScalarField(grid, sp.inv(sp.advection(w_hat, u1, u2, grid), grid))


def advance(w: np.ndarray, config: SolverConfig, grid, t: float = 0.0, step_index: int = 0, multipliers=None):
    """Advance the array ``w`` by one step.

    Returns ``(w_next, stage_velocities)`` where ``stage_velocities`` lists the
    four ``(u1, u2)`` pairs the RK stages used.  Replaying those velocities in
    the linear advection step reproduces ``w_next``; the discrete adjoint relies
    on that.
    """
    if multipliers is None:
        multipliers = (sp.heat(config.dt, config.nu, grid), sp.heat(0.5 * config.dt, config.nu, grid))
    E, E2 = multipliers
    stages = []

    def rhs(i, _t, s_hat):
        u1h, u2h = sp.biot_savart_hat(s_hat, grid)
        u1, u2 = sp.inv(u1h, grid), sp.inv(u2h, grid)
        if i == 0:
            check_cfl(u1, u2, config.dt, grid, config.cfl_fraction, step_index)
        stages.append((u1, u2))
        return sp.advection(s_hat, u1, u2, grid)

    new_hat = ifrk4_step(sp.fwd(w), t, config.dt, E, E2, rhs)
    w_next = sp.inv(new_hat, grid)
    if not np.all(np.isfinite(w_next)):
        raise NonFiniteState(step_index + 1)
    return w_next, stages


def step(omega: ScalarField, config: SolverConfig) -> ScalarField:
    """One IFRK4 step; raises :class:`CFLViolation` if ``dt`` is too large."""
    w_next, _ = advance(omega.values, config, omega.grid)
    return ScalarField(omega.grid, w_next)


def run_forward(omega0: ScalarField, config: SolverConfig) -> Trajectory:
    """Integrate from ``omega0`` to ``config.t_final``, recording diagnostics every step."""
    grid = omega0.grid
    multipliers = (sp.heat(config.dt, config.nu, grid), sp.heat(0.5 * config.dt, config.nu, grid))
    N, stride = config.step_count, config.snapshot_stride
    w = np.array(omega0.values)
    times, omegas, vels = [], [], []
    series: dict[str, list] = {}
    max_u = 0.0
    log.info("run_forward: nu=%g dt=%g steps=%d n=%d", config.nu, config.dt, N, grid.n_points)
    for k in range(N + 1):
        t = config.step_time(k)
        if k < N:
            w_next, stages = advance(w, config, grid, t, k, multipliers)
            u = stages[0]
        else:
            u = sp.velocity(w, grid)
        for key, val in field_diagnostics(w, grid, config.p_target, u).items():
            series.setdefault(key, []).append(val)
        max_u = max(max_u, float(np.sqrt(np.max(u[0] ** 2 + u[1] ** 2))))
        if k % stride == 0:
            times.append(t)
            omegas.append(ScalarField(grid, w))
            vels.append(VectorField(grid, *u))
        if k < N:
            w = w_next
    return Trajectory(
        config=config,
        grid=grid,
        times=np.array(times),
        omega_snapshots=omegas,
        velocity_snapshots=vels,
        step_times=np.array([config.step_time(k) for k in range(N + 1)]),
        diagnostics={key: np.array(v) for key, v in series.items()},
        role="forward",
        attributes={"stepper": "navier_stokes", "max_velocity": max_u},
    )
