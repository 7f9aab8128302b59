"""Velocity recovery from vorticity on the torus, and kernel diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _spectral as sp
from .fields import ScalarField, VectorField, torus_distance

__all__ = [
    "KernelSplit",
    "NonzeroMeanWarning",
    "velocity_from_vorticity",
    "vorticity_from_velocity",
    "divergence",
    "velocity_gradient_norm",
    "kernel_split_norms",
    "growth_ratio",
]


class NonzeroMeanWarning(UserWarning):
    """Vorticity with nonzero mean; its k = 0 part cannot drive a periodic velocity."""


@dataclass(frozen=True)
class KernelSplit:
    """Norms of the near/far pieces of ``|K(x)| = 1 / (2 pi |x|)``."""

    inner_l1_norm: float
    outer_sup_norm: float
    split_radius: float = 1.0


def velocity_from_vorticity(omega: ScalarField) -> VectorField:
    """Biot-Savart velocity ``u = grad_perp(psi)``, ``lap(psi) = omega``.

    The mean velocity is fixed to zero.  A nonzero mean of ``omega`` is dropped
    with a :class:`NonzeroMeanWarning`.
    """
    grid = omega.grid
    vals = omega.values
    mean = float(np.mean(vals))
    if abs(mean) > 1e-12 * max(float(np.max(np.abs(vals))), 1e-300):
        warnings.warn(
            f"vorticity has mean {mean:.3e}; the k=0 mode is dropped",
            NonzeroMeanWarning,
            stacklevel=2,
        )
    u1, u2 = sp.velocity(vals, grid)
    return VectorField(grid, u1, u2)


def vorticity_from_velocity(u: VectorField) -> ScalarField:
    """Spectral curl ``d1 u2 - d2 u1``."""
    grid = u.grid
    k1, k2 = grid.rk_odd
    hat = 1j * k1 * sp.fwd(u.y_component) - 1j * k2 * sp.fwd(u.x_component)
    return ScalarField(grid, sp.inv(hat, grid))


def divergence(u: VectorField) -> ScalarField:
    grid = u.grid
    k1, k2 = grid.rk_odd
    hat = 1j * k1 * sp.fwd(u.x_component) + 1j * k2 * sp.fwd(u.y_component)
    return ScalarField(grid, sp.inv(hat, grid))


def velocity_gradient_norm(u: VectorField, p: float) -> float:
    """L^p norm of the pointwise Frobenius norm of the spectral gradient of ``u``."""
    grid = u.grid
    a, b = sp.gradient(sp.fwd(u.x_component), grid)
    c, d = sp.gradient(sp.fwd(u.y_component), grid)
    frob = np.sqrt(a * a + b * b + c * c + d * d)
    if p == np.inf:
        return float(frob.max())
    return float((grid.cell_area * np.sum(frob**p)) ** (1.0 / p))


def kernel_split_norms(split_radius: float = 1.0) -> KernelSplit:
    """Closed-form ``||K 1_{|x|<=r}||_1 = r`` and ``||K 1_{|x|>r}||_inf = 1/(2 pi r)``."""
    if not np.isfinite(split_radius) or split_radius <= 0:
        raise ValueError(f"split_radius must be positive, got {split_radius}")
    r = float(split_radius)
    return KernelSplit(inner_l1_norm=r, outer_sup_norm=1.0 / (2.0 * np.pi * r), split_radius=r)


def growth_ratio(u: VectorField, center) -> float:
    """``max |u(x)| / (1 + |x - center|)`` over the grid (periodic distance)."""
    dist = torus_distance(u.grid, center)
    return float(np.max(u.magnitude() / (1.0 + dist)))
