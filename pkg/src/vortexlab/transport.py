"""Linear transport with a prescribed velocity, the backward dual problem and duality checks.

Forward:  ``d_t w + u . grad w = 0``.
Dual:     ``-d_t phi - nu lap phi - div(u phi) = chi``, ``phi(T) = phi_T``,
solved in reversed time ``s = T - t`` as a forward parabolic problem.

The adjoint mode builds ``phi`` as the exact transpose of the discrete
forward stepper, so the discrete duality identity holds to rounding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _spectral as sp
from .errors import NonFiniteState, StepperMismatch
from .fields import Grid, ScalarField, VectorField, _lp
from .stepping import (
    STAGE_OFFSETS,
    SolverConfig,
    Trajectory,
    check_cfl,
    field_diagnostics,
    ifrk4_adjoint_step,
    ifrk4_step,
    trapezoid_weights,
)

__all__ = [
    "VelocitySource",
    "TemporalBump",
    "SeparableSource",
    "DualConfig",
    "StepperSpec",
    "transport_forward",
    "dual_backward",
    "dual_backward_adjoint",
    "duality_terms",
    "duality_residual",
    "gronwall_envelope",
    "gronwall_ratio",
    "linear_step",
    "linear_step_transpose",
]

log = logging.getLogger(__name__)

_TIME_TOL = 1e-9


class VelocitySource:
    """Time-dependent divergence-free velocity ``b(t)`` on ``[0, t_final]``.

    ``stored_trajectory`` interpolates linearly between snapshot velocities;
    ``analytic`` evaluates a callable ``t -> VectorField`` (or ``(u1, u2)``).
    """

    def __init__(self, grid: Grid, t_final: float, mode: str, times=None, snapshots=None, func=None):
        if mode not in ("stored_trajectory", "analytic"):
            raise ValueError(f"unknown velocity mode {mode!r}")
        self.grid = grid
        self.t_final = float(t_final)
        self.mode = mode
        self._func = func
        if mode == "stored_trajectory":
            self._times = np.asarray(times, dtype=float)
            self._u1 = np.stack([u.x_component for u in snapshots])
            self._u2 = np.stack([u.y_component for u in snapshots])
            if self._times.size < 2 and self._times.size != 1:
                raise ValueError("stored velocity source needs at least one snapshot")

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "VelocitySource":
        if not traj.velocity_snapshots:
            raise ValueError("trajectory carries no velocity snapshots")
        return cls(traj.grid, traj.config.t_final, "stored_trajectory", traj.times, traj.velocity_snapshots)

    @classmethod
    def analytic(cls, grid: Grid, func: Callable, t_final: float) -> "VelocitySource":
        return cls(grid, t_final, "analytic", func=func)

    @classmethod
    def constant(cls, grid: Grid, u: VectorField, t_final: float) -> "VelocitySource":
        pair = (np.array(u.x_component), np.array(u.y_component))
        return cls(grid, t_final, "analytic", func=lambda t: pair)

    @classmethod
    def zero(cls, grid: Grid, t_final: float) -> "VelocitySource":
        return cls.constant(grid, VectorField.zeros(grid), t_final)

    def at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        if t < -_TIME_TOL * self.t_final or t > self.t_final * (1 + _TIME_TOL):
            raise ValueError(f"time {t} outside the velocity source span [0, {self.t_final}]")
        if self.mode == "analytic":
            u = self._func(t)
            if isinstance(u, VectorField):
                return u.x_component, u.y_component
            return u
        ts = self._times
        if ts.size == 1:
            return self._u1[0], self._u2[0]
        i = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2))
        theta = (t - ts[i]) / (ts[i + 1] - ts[i])
        if theta == 0.0:
            return self._u1[i], self._u2[i]
        return (
            (1 - theta) * self._u1[i] + theta * self._u1[i + 1],
            (1 - theta) * self._u2[i] + theta * self._u2[i + 1],
        )

    def field_at(self, t: float) -> VectorField:
        return VectorField(self.grid, *self.at(t))

    def max_divergence(self, samples: int = 5) -> float:
        """Largest ``||div u||_2 / ||u||_2`` over equispaced sample times."""
        k1, k2 = self.grid.rk_odd
        worst = 0.0
        for t in np.linspace(0.0, self.t_final, samples):
            u1, u2 = self.at(t)
            div = sp.inv(1j * k1 * sp.fwd(u1) + 1j * k2 * sp.fwd(u2), self.grid)
            norm = np.sqrt(np.sum(u1 * u1 + u2 * u2))
            if norm > 0:
                worst = max(worst, float(np.sqrt(np.sum(div * div)) / norm))
        return worst


@dataclass(frozen=True)
class TemporalBump:
    """C-infinity bump supported on ``(start, stop)`` with peak value ``height``."""

    start: float
    stop: float
    height: float = 1.0

    def __call__(self, t: float) -> float:
        mid, half = 0.5 * (self.start + self.stop), 0.5 * (self.stop - self.start)
        s = (t - mid) / half
        if abs(s) >= 1:
            return 0.0
        return float(self.height * np.exp(1.0 - 1.0 / (1.0 - s * s)))


@dataclass(frozen=True, eq=False)
class SeparableSource:
    """Space-time source ``chi(x, t) = spatial(x) * temporal(t)``."""

    spatial: ScalarField
    temporal: Callable[[float], float]
    name: str = "chi"

    def __call__(self, t: float) -> np.ndarray:
        m = self.temporal(t)
        if m == 0:
            return np.zeros(self.spatial.grid.shape)
        return m * self.spatial.values


def _source_values(chi, t: float, grid: Grid) -> np.ndarray | None:
    if chi is None:
        return None
    v = chi(t)
    if isinstance(v, ScalarField):
        v = v.values
    return np.asarray(v, dtype=float)


@dataclass(frozen=True, eq=False)
class DualConfig:
    """Parameters of the backward dual problem.

    ``chi`` maps a time to a ScalarField or array (``None`` means zero);
    ``phi_terminal`` ``None`` means ``phi(T) = 0``.
    """

    nu: float
    dt: float
    t_final: float
    q: float = 2.0
    chi: Callable | None = None
    phi_terminal: ScalarField | None = None
    snapshot_stride: int = 1

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.nu, self.dt, self.t_final, self.snapshot_stride, p_target=self.q)

    def terminal(self, grid: Grid) -> ScalarField:
        return self.phi_terminal if self.phi_terminal is not None else ScalarField.zeros(grid)


def _validate_span(vel: VelocitySource, t_final: float, grid: Grid):
    if vel.grid != grid:
        raise ValueError("velocity source lives on a different grid")
    if vel.t_final < t_final * (1 - _TIME_TOL):
        raise ValueError(f"velocity source spans [0, {vel.t_final}], need [0, {t_final}]")


def _collect(config, grid, arrays, us, role, attributes, p_target):
    """Build a Trajectory from per-step arrays listed in ascending time."""
    N, stride = config.step_count, config.snapshot_stride
    series: dict[str, list] = {}
    for k, w in enumerate(arrays):
        u = us[k] if us else None
        for key, val in field_diagnostics(w, grid, p_target, u).items():
            series.setdefault(key, []).append(val)
    keep = range(0, N + 1, stride)
    return Trajectory(
        config=config,
        grid=grid,
        times=np.array([config.step_time(k) for k in keep]),
        omega_snapshots=[ScalarField(grid, arrays[k]) for k in keep],
        velocity_snapshots=[VectorField(grid, *us[k]) for k in keep] if us else [],
        step_times=np.array([config.step_time(k) for k in range(N + 1)]),
        diagnostics={key: np.array(v) for key, v in series.items()},
        role=role,
        attributes=attributes,
    )


def transport_forward(w0: ScalarField, vel: VelocitySource, dt: float, t_final: float, snapshot_stride: int = 1, cfl_fraction: float = 0.5) -> Trajectory:
    """Advect ``w0`` by ``vel`` (no diffusion) with the same IFRK4 stepper as the NS solver."""
    grid = w0.grid
    _validate_span(vel, t_final, grid)
    config = SolverConfig(0.0, dt, t_final, snapshot_stride, cfl_fraction=cfl_fraction)
    N = config.step_count
    ones = np.ones(grid.rk_sq.shape)
    w = np.array(w0.values)
    arrays, us = [w], []
    for k in range(N):
        t = config.step_time(k)
        stage_u = [vel.at(t + c * dt) for c in STAGE_OFFSETS]
        check_cfl(*stage_u[0], dt, grid, cfl_fraction, k)
        us.append(stage_u[0])
        w = linear_step(w, stage_u, dt, ones, ones, grid)
        if not np.all(np.isfinite(w)):
            raise NonFiniteState(k + 1)
        arrays.append(w)
    us.append(vel.at(t_final))
    return _collect(config, grid, arrays, us, "transport", {"stepper": "transport"}, config.p_target)


def linear_step(w: np.ndarray, stage_u, dt: float, E, E2, grid: Grid) -> np.ndarray:
    """IFRK4 step of ``d_t w = nu lap w - u . grad w`` with frozen stage velocities."""

    def rhs(i, _t, s_hat):
        return sp.advection(s_hat, *stage_u[i], grid)

    return sp.inv(ifrk4_step(sp.fwd(w), 0.0, dt, E, E2, rhs), grid)


def linear_step_transpose(l: np.ndarray, stage_u, dt: float, E, E2, grid: Grid) -> np.ndarray:
    """Exact transpose of :func:`linear_step` in the grid inner product."""

    def rhs_t(i, x_hat):
        return sp.advection_transpose(x_hat, *stage_u[i], grid)

    return sp.inv(ifrk4_adjoint_step(sp.fwd(l), dt, E, E2, rhs_t), grid)


def dual_backward(config: DualConfig, vel: VelocitySource) -> Trajectory:
    """PDE-mode solve of the backward dual problem, returned in forward time order."""
    if config.q < 2:
        raise ValueError(f"dual exponent q must be >= 2, got {config.q}")
    phi_T = config.terminal(vel.grid)
    grid = phi_T.grid
    _validate_span(vel, config.t_final, grid)
    sc = config.solver_config()
    T, dt, N = config.t_final, config.dt, sc.step_count
    E, E2 = sp.heat(dt, config.nu, grid), sp.heat(0.5 * dt, config.nu, grid)

    def rhs(_i, s, psi_hat):
        t = max(T - s, 0.0)
        out = sp.divergence_form(psi_hat, *vel.at(t), grid)
        src = _source_values(config.chi, t, grid)
        if src is not None:
            out = out + sp.fwd(src)
        return out

    psi = np.array(phi_T.values)
    reversed_arrays = [psi]
    for j in range(N):
        s = j * dt
        if j == 0:
            check_cfl(*vel.at(T), dt, grid, sc.cfl_fraction, 0)
        psi = sp.inv(ifrk4_step(sp.fwd(psi), s, dt, E, E2, rhs), grid)
        if not np.all(np.isfinite(psi)):
            raise NonFiniteState(j + 1)
        reversed_arrays.append(psi)
    arrays = reversed_arrays[::-1]
    return _collect(sc, grid, arrays, None, "dual", {"mode": "pde", "q": config.q}, config.q)


@dataclass(frozen=True, eq=False)
class StepperSpec:
    """Identifies the discrete forward stepper whose transpose is wanted.

    ``navier_stokes`` replays the stage velocities of a stored stride-1 NS
    trajectory by recomputing each step from its stored state;
    ``transport`` evaluates the velocity source at the stage times.
    """

    kind: str
    grid: Grid
    nu: float
    dt: float
    t_final: float
    trajectory: Trajectory | None = None
    velocity: VelocitySource | None = None
    cfl_fraction: float = 0.5

    @classmethod
    def for_navier_stokes(cls, traj: Trajectory) -> "StepperSpec":
        c = traj.config
        if c.snapshot_stride != 1:
            raise ValueError("the adjoint mode needs every step stored (snapshot_stride = 1)")
        return cls("navier_stokes", traj.grid, c.nu, c.dt, c.t_final, trajectory=traj, cfl_fraction=c.cfl_fraction)

    @classmethod
    def for_transport(cls, vel: VelocitySource, dt: float, t_final: float, cfl_fraction: float = 0.5, nu: float = 0.0) -> "StepperSpec":
        """Linear transport stepper; ``nu > 0`` adds exact diffusion through the integrating factor."""
        return cls("transport", vel.grid, nu, dt, t_final, velocity=vel, cfl_fraction=cfl_fraction)

    def stage_velocities(self, n: int):
        if self.kind == "transport":
            t = n * self.dt
            return [self.velocity.at(t + c * self.dt) for c in STAGE_OFFSETS]
        from .ns_solver import advance

        c = self.trajectory.config
        w = self.trajectory.omega_snapshots[n].values
        _, stages = advance(w, c, self.grid, c.step_time(n), n)
        return stages


def dual_backward_adjoint(config: DualConfig, vel: VelocitySource, stepper: StepperSpec) -> Trajectory:
    """Dual solution as the exact transpose of the forward stepper.

    ``phi_N = phi_T + (dt/2) chi_N`` and ``phi_n = S_n^T phi_{n+1} + w_n dt chi_n``
    with trapezoid weights ``w_n``, so that
    ``sum_n w_n dt <chi_n, w_n> = <phi_0, w_0> - <phi_T, w_N>`` exactly.
    """
    phi_T = config.terminal(stepper.grid)
    grid = stepper.grid
    mismatches = []
    if phi_T.grid != grid or vel.grid != grid:
        mismatches.append("grid")
    if config.nu != stepper.nu:
        mismatches.append(f"nu ({config.nu} vs {stepper.nu})")
    if config.dt != stepper.dt:
        mismatches.append(f"dt ({config.dt} vs {stepper.dt})")
    if abs(config.t_final - stepper.t_final) > _TIME_TOL * stepper.t_final:
        mismatches.append(f"t_final ({config.t_final} vs {stepper.t_final})")
    if mismatches:
        raise StepperMismatch("dual config does not match the forward stepper: " + ", ".join(mismatches))
    _validate_span(vel, config.t_final, grid)
    sc = config.solver_config()
    N, dt = sc.step_count, config.dt
    E, E2 = sp.heat(dt, config.nu, grid), sp.heat(0.5 * dt, config.nu, grid)
    weights = trapezoid_weights(N + 1)

    def source(n):
        return _source_values(config.chi, sc.step_time(n), grid)

    phi = np.array(phi_T.values)
    src = source(N)
    if src is not None:
        phi = phi + weights[N] * dt * src
    reversed_arrays = [phi]
    for n in range(N - 1, -1, -1):
        phi = linear_step_transpose(phi, stepper.stage_velocities(n), dt, E, E2, grid)
        src = source(n)
        if src is not None:
            phi = phi + weights[n] * dt * src
        if not np.all(np.isfinite(phi)):
            raise NonFiniteState(n)
        reversed_arrays.append(phi)
    arrays = reversed_arrays[::-1]
    return _collect(sc, grid, arrays, None, "dual", {"mode": "adjoint", "q": config.q}, config.q)


def _check_meshes(omega_traj: Trajectory, phi_traj: Trajectory):
    if omega_traj.grid != phi_traj.grid:
        raise ValueError("trajectories live on different grids")
    for tr in (omega_traj, phi_traj):
        if tr.config.snapshot_stride != 1:
            raise ValueError("duality pairing needs every step stored (snapshot_stride = 1)")
    if omega_traj.times.shape != phi_traj.times.shape or not np.allclose(
        omega_traj.times, phi_traj.times, rtol=0, atol=1e-12 * max(omega_traj.times[-1], 1.0)
    ):
        raise ValueError("trajectories do not share a time mesh")


def duality_terms(omega_traj: Trajectory, phi_traj: Trajectory, chi, omega0: ScalarField | None = None, phi_terminal: ScalarField | None = None) -> dict:
    """Terms of ``int int chi w - int phi(0) w_0 + int phi_T w(T)`` and its scale.

    The time integral uses the trapezoid rule on the step mesh.  ``scale`` is
    ``||chi|| ||w||`` in the discrete space-time L^2 norm plus the magnitudes of
    the two boundary pairings.
    """
    _check_meshes(omega_traj, phi_traj)
    grid = omega_traj.grid
    dA = grid.cell_area
    dt = omega_traj.config.dt
    w0 = omega0.values if omega0 is not None else omega_traj.omega_snapshots[0].values
    phiT = phi_terminal.values if phi_terminal is not None else np.zeros(grid.shape)
    weights = trapezoid_weights(len(omega_traj.times))
    pairing = chi_sq = w_sq = 0.0
    for k, (t, w) in enumerate(zip(omega_traj.times, omega_traj.omega_snapshots)):
        c = _source_values(chi, t, grid)
        wk = weights[k] * dt * dA
        w_sq += wk * float(np.sum(w.values**2))
        if c is not None:
            pairing += wk * float(np.sum(c * w.values))
            chi_sq += wk * float(np.sum(c * c))
    initial = dA * float(np.sum(phi_traj.omega_snapshots[0].values * w0))
    terminal = dA * float(np.sum(phiT * omega_traj.omega_snapshots[-1].values))
    residual = pairing - initial + terminal
    scale = np.sqrt(chi_sq * w_sq) + abs(initial) + abs(terminal)
    return {
        "pairing": pairing,
        "initial": initial,
        "terminal": terminal,
        "residual": residual,
        "scale": float(scale),
    }


def duality_residual(omega_traj: Trajectory, phi_traj: Trajectory, chi, omega0: ScalarField | None = None, phi_terminal: ScalarField | None = None) -> float:
    return duality_terms(omega_traj, phi_traj, chi, omega0, phi_terminal)["residual"]


def gronwall_envelope(phi_traj: Trajectory, chi, phi_terminal: ScalarField | None, q: float = 2.0) -> np.ndarray:
    """``||phi_T||_q + int_t^T ||chi(s)||_q ds`` at every step time (trapezoid in time).

    Transport by a divergence-free field and diffusion do not increase L^q
    norms, so ``||phi(t)||_q`` stays below this envelope.  For adjoint-mode
    trajectories the tail integral is the weighted sum the adjoint recursion
    itself accumulates (``sum_{m >= n} w_m dt ||chi_m||_q``).
    """
    grid = phi_traj.grid
    times = phi_traj.step_times
    dA = grid.cell_area
    chi_norms = np.array(
        [0.0 if (c := _source_values(chi, t, grid)) is None else _lp(c, dA, q) for t in times]
    )
    dt = phi_traj.config.dt
    if phi_traj.attributes.get("mode") == "adjoint":
        contrib = trapezoid_weights(times.size) * dt * chi_norms
        tail = np.cumsum(contrib[::-1])[::-1]
    else:
        seg = 0.5 * dt * (chi_norms[1:] + chi_norms[:-1])
        tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    base = 0.0 if phi_terminal is None else _lp(phi_terminal.values, dA, q)
    return base + tail


def gronwall_ratio(phi_traj: Trajectory, chi, phi_terminal: ScalarField | None, q: float = 2.0) -> float:
    """Max over steps of ``||phi(t)||_q / envelope(t)`` (``<= 1.1`` passes with 10% slack)."""
    env = gronwall_envelope(phi_traj, chi, phi_terminal, q)
    if q == 2:
        norms = phi_traj.diagnostics["lp_2"]
    elif q == phi_traj.config.p_target:
        norms = phi_traj.diagnostics["lp_target"]
    else:
        raise ValueError(f"trajectory has no stored L^{q} series")
    ratios = np.where(env > 0, norms / np.where(env > 0, env, 1.0), np.where(norms > 0, np.inf, 0.0))
    return float(np.max(ratios))
