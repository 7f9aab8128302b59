# Array-level kernels in the rfft2 (half-spectrum) layout shared by the steppers.
# Every multiplier used here is Hermitian-symmetric, so irfft2 loses nothing and
# the transpose of a multiplier m is the multiplier conj(m).

from __future__ import annotations

import numpy as np

from .fields import Grid


def fwd(values: np.ndarray) -> np.ndarray:
    return np.fft.rfft2(values)


def inv(hat: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfft2(hat, s=grid.shape)


def biot_savart_hat(omega_hat: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Velocity coefficients ``u = grad_perp(psi)`` with ``lap(psi) = omega``.

    Uses the first-derivative wavenumbers (Nyquist zeroed) in the denominator
    too, so curl recovers omega on every mode except the four with k' = 0.
    """
    k1, k2 = grid.rk_odd
    ksq = k1 * k1 + k2 * k2
    inv_ksq = np.divide(1.0, ksq, out=np.zeros_like(ksq), where=ksq > 0)
    u1 = 1j * k2 * inv_ksq * omega_hat
    u2 = -1j * k1 * inv_ksq * omega_hat
    return u1, u2


def velocity(omega: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    u1h, u2h = biot_savart_hat(fwd(omega), grid)
    return inv(u1h, grid), inv(u2h, grid)


def gradient(f_hat: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    k1, k2 = grid.rk_odd
    return inv(1j * k1 * f_hat, grid), inv(1j * k2 * f_hat, grid)


def advection(w_hat: np.ndarray, u1: np.ndarray, u2: np.ndarray, grid: Grid) -> np.ndarray:
    """Dealiased ``-(u . grad) w`` returned in spectral form."""
    wx, wy = gradient(w_hat, grid)
    return -(grid.rmask * fwd(u1 * wx + u2 * wy))


def advection_transpose(l_hat: np.ndarray, u1: np.ndarray, u2: np.ndarray, grid: Grid) -> np.ndarray:
    """Exact transpose of :func:`advection`: ``div(u * P l)``."""
    k1, k2 = grid.rk_odd
    pl = inv(grid.rmask * l_hat, grid)
    return 1j * k1 * fwd(u1 * pl) + 1j * k2 * fwd(u2 * pl)


def divergence_form(w_hat: np.ndarray, u1: np.ndarray, u2: np.ndarray, grid: Grid) -> np.ndarray:
    """Dealiased ``+(u . grad) w``; equals ``div(u w)`` for divergence-free ``u``."""
    return -advection(w_hat, u1, u2, grid)


def heat(tau: float, nu: float, grid: Grid) -> np.ndarray:
    """Diffusion semigroup multiplier ``exp(-nu |k|^2 tau)``."""
    return np.exp(-nu * tau * grid.rk_sq)
