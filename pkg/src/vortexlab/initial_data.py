"""Rough initial vorticities and their Gaussian mollifications."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _spectral as sp
from .fields import Grid, ScalarField

__all__ = ["InitialDatumSpec", "make_rough_datum", "mollify", "smooth_cutoff", "cell_power_mean"]

KINDS = ("power_singularity", "vortex_patch", "taylor_green", "custom_modes")


@dataclass(frozen=True)
class InitialDatumSpec:
    """Recipe for an initial vorticity.

    ``power_singularity`` is ``amplitude * rho**-gamma * cutoff(rho / support_radius)``
    with ``rho`` the (optionally anisotropic) distance to ``center``.  With
    ``1 < gamma < 2/p`` it lies in L^p but not in L^2.  ``aspect`` stretches the
    level sets into ellipses (``aspect = 1`` is radial).  ``modes`` is a sequence
    of ``(k1, k2, amplitude, phase)`` used by ``custom_modes``.
    """

    kind: str = "power_singularity"
    p: float = 1.5
    gamma: float = 1.2
    support_radius: float = 1.0
    center: tuple[float, float] | None = None
    amplitude: float = 1.0
    aspect: float = 1.0
    modes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown datum kind {self.kind!r}; expected one of {KINDS}")
        if not 1.0 < self.p < 2.0:
            raise ValueError(f"p must lie in (1, 2), got {self.p}")
        if self.kind == "power_singularity" and not 1.0 < self.gamma < 2.0 / self.p:
            raise ValueError(
                f"gamma must satisfy 1 < gamma < 2/p = {2.0 / self.p:.4g}, got {self.gamma}"
            )
        if self.support_radius <= 0:
            raise ValueError("support_radius must be positive")
        if self.aspect <= 0:
            raise ValueError("aspect must be positive")
        if self.center is not None:
            object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "modes", tuple(tuple(float(v) for v in m) for m in self.modes))

    def resolved_center(self, grid: Grid) -> tuple[float, float]:
        if self.center is None:
            return (grid.side_length / 2, grid.side_length / 2)
        return self.center


def smooth_cutoff(s):
    """C-infinity step: 1 for ``s <= 1/2``, 0 for ``s >= 1``."""
    s = np.asarray(s, dtype=float)

    def f(t):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    a, b = f(1.0 - s), f(s - 0.5)
    return a / (a + b)


def _offsets(grid: Grid, center, X=None, Y=None):
    L = grid.side_length
    if X is None:
        X, Y = grid.mesh
    dx = (X - center[0] + L / 2) % L - L / 2
    dy = (Y - center[1] + L / 2) % L - L / 2
    return dx, dy


def _rho(dx, dy, aspect):
    return np.hypot(dx / aspect, dy * aspect)


def _origin_cell_power_integral(h: float, aspect: float, s: float) -> float:
    """Exact ``int_{cell} rho**-s`` over the square cell centred at the singularity.

    After ``z = (dx/aspect, dy*aspect)`` the cell becomes a rectangle with
    half-sides ``(h/(2 aspect), h aspect/2)``; integrate in polar coordinates.
    """
    a, b = h / (2 * aspect), h * aspect / 2
    theta0 = np.arctan2(b, a)
    xg, wg = np.polynomial.legendre.leggauss(96)

    def gl(lo, hi, func):
        t = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        return 0.5 * (hi - lo) * np.sum(wg * func(t))

    part1 = gl(0.0, theta0, lambda t: (a / np.cos(t)) ** (2 - s))
    part2 = gl(theta0, np.pi / 2, lambda t: (b / np.sin(t)) ** (2 - s))
    return 4.0 * (part1 + part2) / (2 - s)


def cell_power_mean(func, grid: Grid, center, i: int, j: int, p: float, sub: int = 32) -> float:
    """``((1/h^2) int_cell |func|^p)^(1/p)`` over the cell of node ``(i, j)`` by sub-cell midpoints."""
    h = grid.h
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    X = grid.x[i] + h * offs[:, None]
    Y = grid.x[j] + h * offs[None, :]
    dx, dy = _offsets(grid, center, X, Y)
    vals = np.abs(func(dx, dy)) ** p
    return float(np.mean(vals) ** (1.0 / p))


def _power_singularity(spec: InitialDatumSpec, grid: Grid) -> np.ndarray:
    center = spec.resolved_center(grid)
    h = grid.h
    # The singular point sits on the nearest node so the origin cell is symmetric.
    node = np.round(np.asarray(center) / h).astype(int) % grid.n_points
    center = (node[0] * h, node[1] * h)
    R, g, a = spec.support_radius, spec.gamma, spec.aspect

    def profile(dx, dy):
        rho = _rho(dx, dy, a)
        with np.errstate(divide="ignore"):
            return np.where(rho > 0, rho ** -g, 0.0) * smooth_cutoff(rho / R)

    dx, dy = _offsets(grid, center)
    values = profile(dx, dy)

    # Near the singularity, node sampling misses most of the L^p mass of each
    # cell; sample the cell L^p-mean instead (exact for the origin cell).
    p = spec.p
    near = np.argwhere(np.hypot(dx, dy) <= 4 * h)
    for i, j in near:
        if i == node[0] and j == node[1]:
            values[i, j] = (_origin_cell_power_integral(h, a, g * p) / h**2) ** (1.0 / p)
        else:
            values[i, j] = cell_power_mean(profile, grid, center, i, j, p)
    return spec.amplitude * values


def make_rough_datum(spec: InitialDatumSpec, grid: Grid) -> ScalarField:
    """Evaluate an :class:`InitialDatumSpec` on ``grid``."""
    L = grid.side_length
    if spec.kind in ("power_singularity", "vortex_patch"):
        if spec.support_radius >= L / 4:
            raise ValueError(
                f"support_radius {spec.support_radius} must be < side_length/4 = {L / 4}"
            )
        if spec.support_radius < 16 * grid.h * (1 - 1e-12):
            raise ValueError(
                f"grid spacing {grid.h:.4g} resolves support_radius with fewer than 16 cells"
            )
    if spec.amplitude == 0:
        return ScalarField.zeros(grid)
    X, Y = grid.mesh
    k0 = 2 * np.pi / L
    if spec.kind == "power_singularity":
        values = _power_singularity(spec, grid)
    elif spec.kind == "vortex_patch":
        dx, dy = _offsets(grid, spec.resolved_center(grid))
        values = spec.amplitude * (_rho(dx, dy, spec.aspect) < spec.support_radius)
    elif spec.kind == "taylor_green":
        values = spec.amplitude * 2.0 * np.sin(k0 * X) * np.sin(k0 * Y)
    else:
        values = np.zeros(grid.shape)
        for k1, k2, amp, phase in spec.modes:
            values = values + amp * np.cos(k0 * (k1 * X + k2 * Y) + phase)
        values = spec.amplitude * values
    return ScalarField(grid, values)


def mollify(omega0: ScalarField, delta: float) -> ScalarField:
    """Gaussian filter ``exp(delta^2 lap / 2)``; ``delta = 0`` returns the input."""
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta}")
    if delta == 0:
        return omega0
    grid = omega0.grid
    hat = sp.fwd(omega0.values) * np.exp(-0.5 * delta**2 * grid.rk_sq)
    return ScalarField(grid, sp.inv(hat, grid))
