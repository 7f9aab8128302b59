"""Periodic grids, real fields on them, spectral transforms and norms.

Everything downstream works on the square torus ``[0, L)^2`` sampled at
``n x n`` nodes.  Arrays are indexed ``values[i, j] = f(x_i, y_j)`` so that
axis 0 is the x direction; flattening is row-major.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "Spectrum",
    "make_grid",
    "transform_forward",
    "transform_inverse",
    "integrate",
    "inner",
    "lp_norm",
    "dealias",
    "torus_distance",
    "ball_mask",
    "local_lp_distance",
]


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform ``n x n`` grid on the torus of side ``side_length``."""

    n_points: int
    side_length: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or int(n) != n:
            raise ValueError(f"n_points must be an integer, got {n!r}")
        object.__setattr__(self, "n_points", int(n))
        if self.n_points < 8 or not _is_power_of_two(self.n_points):
            raise ValueError(f"n_points must be a power of two >= 8, got {n}")
        if not np.isfinite(self.side_length) or self.side_length <= 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")
        object.__setattr__(self, "side_length", float(self.side_length))
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise ValueError(
                f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}"
            )
        object.__setattr__(self, "dealias_fraction", float(self.dealias_fraction))

    @property
    def h(self) -> float:
        return self.side_length / self.n_points

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_points)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def x(self) -> np.ndarray:
        """1D node coordinates ``0, h, ..., L - h``."""
        return np.arange(self.n_points) * self.h

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = np.meshgrid(self.x, self.x, indexing="ij")
        X.setflags(write=False)
        Y.setflags(write=False)
        return X, Y

    @cached_property
    def integer_wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, covering ``[-n/2, n/2)``."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points).astype(int)

    @property
    def wavenumber_unit(self) -> float:
        return 2.0 * np.pi / self.side_length

    @cached_property
    def dealias_cutoff(self) -> float:
        return self.dealias_fraction * self.n_points / 2

    # Tables in the half-spectrum (rfft2) layout used by the time steppers.
    # Axis 0 holds k1 (all n values), axis 1 holds k2 >= 0 (n//2 + 1 values).

    @cached_property
    def _rk_int(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.n_points
        k1 = np.fft.fftfreq(n, d=1.0 / n)[:, None]
        k2 = np.fft.rfftfreq(n, d=1.0 / n)[None, :]
        return k1, k2

    @cached_property
    def rk_sq(self) -> np.ndarray:
        """``|k|^2`` with physical wavenumbers (Nyquist kept)."""
        k1, k2 = self._rk_int
        return (k1**2 + k2**2) * self.wavenumber_unit**2

    @cached_property
    def rk_odd(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical wavenumbers for first derivatives, Nyquist entries zeroed."""
        n = self.n_points
        k1, k2 = self._rk_int
        k1 = np.where(np.abs(k1) == n // 2, 0.0, k1) * self.wavenumber_unit
        k2 = np.where(np.abs(k2) == n // 2, 0.0, k2) * self.wavenumber_unit
        return np.broadcast_to(k1, self.rk_sq.shape), np.broadcast_to(k2, self.rk_sq.shape)

    @cached_property
    def rmask(self) -> np.ndarray:
        """Dealiasing mask (True = kept) in half-spectrum layout."""
        k1, k2 = self._rk_int
        return np.maximum(np.abs(k1), np.abs(k2)) <= self.dealias_cutoff

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)


def make_grid(n_points: int, side_length: float, dealias_fraction: float = 2.0 / 3.0) -> Grid:
    return Grid(n_points, side_length, dealias_fraction)


def _frozen_array(values, shape, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.size != shape[0] * shape[1]:
        raise ValueError(f"{what} has {arr.size} values, expected {shape[0] * shape[1]}")
    arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real scalar field on a grid; values are copied and made read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, self.grid.shape, "field"))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, grid.zeros())

    @classmethod
    def from_function(cls, grid: Grid, func) -> "ScalarField":
        X, Y = grid.mesh
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape))

    def _check(self, other: "ScalarField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values + other.values)
        return ScalarField(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, ScalarField):
            self._check(other)
            return ScalarField(self.grid, self.values - other.values)
        return ScalarField(self.grid, self.values - other)

    def __mul__(self, scalar):
        return ScalarField(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    x_component: np.ndarray
    y_component: np.ndarray

    def __post_init__(self):
        shape = self.grid.shape
        object.__setattr__(self, "x_component", _frozen_array(self.x_component, shape, "x component"))
        object.__setattr__(self, "y_component", _frozen_array(self.y_component, shape, "y component"))

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, grid.zeros(), grid.zeros())

    @classmethod
    def constant(cls, grid: Grid, cx: float, cy: float) -> "VectorField":
        return cls(grid, np.full(grid.shape, float(cx)), np.full(grid.shape, float(cy)))

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.x_component, self.y_component)

    def __sub__(self, other: "VectorField") -> "VectorField":
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return VectorField(
            self.grid,
            self.x_component - other.x_component,
            self.y_component - other.y_component,
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier-series coefficients ``c_k`` with ``f(x) = sum_k c_k exp(i k.x)``.

    Stored in FFT order; ``coefficient(k1, k2)`` accepts integer wavevectors in
    ``[-n/2, n/2)``.
    """

    grid: Grid
    coefficients: np.ndarray
    conjugate_symmetric: bool = True

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex, copy=True)
        if c.shape != self.grid.shape:
            raise ValueError(f"spectrum shape {c.shape} does not match grid {self.grid.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def coefficient(self, k1: int, k2: int) -> complex:
        n = self.grid.n_points
        for k in (k1, k2):
            if not -n // 2 <= k < n // 2:
                raise IndexError(f"wavenumber {k} outside [-{n // 2}, {n // 2})")
        return complex(self.coefficients[k1 % n, k2 % n])

    def nonzero_wavevectors(self, atol: float = 1e-12) -> list[tuple[int, int]]:
        kint = self.grid.integer_wavenumbers
        idx = np.argwhere(np.abs(self.coefficients) > atol)
        return sorted((int(kint[i]), int(kint[j])) for i, j in idx)


def transform_forward(f: ScalarField) -> Spectrum:
    coeffs = np.fft.fft2(f.values, norm="forward")
    return Spectrum(f.grid, coeffs, conjugate_symmetric=True)


def transform_inverse(spec: Spectrum) -> ScalarField:
    values = np.fft.ifft2(spec.coefficients, norm="forward")
    scale = max(np.max(np.abs(values.real)), np.finfo(float).tiny)
    if np.max(np.abs(values.imag)) > 1e-12 * scale:
        raise ValueError("spectrum is not conjugate-symmetric; inverse is not real")
    return ScalarField(spec.grid, values.real)


def integrate(f: ScalarField) -> float:
    """Trapezoid rule on the torus, ``h^2 * sum(values)``."""
    return float(f.grid.cell_area * np.sum(f.values))


def inner(a: ScalarField, b: ScalarField) -> float:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(a.grid.cell_area * np.sum(a.values * b.values))


def _lp(values: np.ndarray, cell_area: float, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(values))) if values.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    a = np.abs(values)
    if p == 1:
        return float(cell_area * np.sum(a))
    if p == 2:
        return float(np.sqrt(cell_area * np.sum(a * a)))
    return float((cell_area * np.sum(a**p)) ** (1.0 / p))


def lp_norm(f: ScalarField, p: float) -> float:
    """Discrete L^p norm; ``p = np.inf`` gives the max of ``|f|``."""
    return _lp(f.values, f.grid.cell_area, p)


def dealias(spec: Spectrum, grid: Grid) -> Spectrum:
    """Zero every coefficient with ``max(|k1|, |k2|)`` above the cutoff."""
    if spec.grid != grid:
        raise ValueError("spectrum grid does not match")
    k = grid.integer_wavenumbers
    keep = np.maximum(np.abs(k)[:, None], np.abs(k)[None, :]) <= grid.dealias_cutoff
    return Spectrum(grid, np.where(keep, spec.coefficients, 0.0), spec.conjugate_symmetric)


def torus_distance(grid: Grid, center) -> np.ndarray:
    """Periodic distance from every node to ``center``."""
    L = grid.side_length
    X, Y = grid.mesh
    dx = (X - center[0] + L / 2) % L - L / 2
    dy = (Y - center[1] + L / 2) % L - L / 2
    return np.hypot(dx, dy)


def ball_mask(grid: Grid, radius: float, center) -> np.ndarray:
    if radius >= grid.side_length / 2:
        raise ValueError(
            f"ball radius {radius} does not fit in a torus of side {grid.side_length}"
        )
    return torus_distance(grid, center) <= radius


def local_lp_distance(a, b, p: float, ball_radius: float, center) -> float:
    """L^p norm of ``a - b`` restricted to a ball; works for scalar or vector fields."""
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    mask = ball_mask(a.grid, ball_radius, center)
    if isinstance(a, VectorField):
        diff = np.hypot(a.x_component - b.x_component, a.y_component - b.y_component)
    else:
        diff = a.values - b.values
    return _lp(diff[mask], a.grid.cell_area, p)
