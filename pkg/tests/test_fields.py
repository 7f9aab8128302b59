import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TWO_PI, band_limited
from vortexlab import (
    Grid,
    ScalarField,
    Spectrum,
    VectorField,
    dealias,
    integrate,
    inner,
    local_lp_distance,
    lp_norm,
    make_grid,
    transform_forward,
    transform_inverse,
)


class TestGrid:
    """Construction and validation of the periodic grid."""

    def test_spacing(self):
        assert make_grid(64, TWO_PI, 2 / 3).h == pytest.approx(TWO_PI / 64, rel=1e-15)
        assert make_grid(8, 1.0, 1.0).h == 0.125

    @pytest.mark.parametrize("n", [60, 4, 0, -8, 12])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            make_grid(n, TWO_PI)

    @pytest.mark.parametrize("L", [0.0, -1.0, np.inf, np.nan])
    def test_rejects_bad_side(self, L):
        with pytest.raises(ValueError):
            make_grid(16, L)

    @pytest.mark.parametrize("f", [0.0, 1.5, -0.1])
    def test_rejects_bad_dealias_fraction(self, f):
        with pytest.raises(ValueError):
            make_grid(16, 1.0, f)

    def test_physical_wavenumbers(self):
        g = Grid(16, 4.0)
        assert g.wavenumber_unit == pytest.approx(2 * np.pi / 4.0)
        assert list(g.integer_wavenumbers[:3]) == [0, 1, 2]
        assert g.integer_wavenumbers.min() == -8


class TestFields:
    def test_rejects_non_finite(self, grid32):
        v = np.zeros(grid32.shape)
        v[3, 3] = np.nan
        with pytest.raises(ValueError):
            ScalarField(grid32, v)
        with pytest.raises(ValueError):
            VectorField(grid32, np.zeros(grid32.shape), np.full(grid32.shape, np.inf))

    def test_rejects_wrong_size(self, grid32):
        with pytest.raises(ValueError):
            ScalarField(grid32, np.zeros(31 * 31))

    def test_values_are_read_only(self, grid32):
        f = ScalarField.zeros(grid32)
        with pytest.raises(ValueError):
            f.values[0, 0] = 1.0

    def test_arithmetic(self, grid32):
        a = ScalarField(grid32, np.ones(grid32.shape))
        b = 2 * a - a + a
        assert np.all(b.values == 2.0)
        with pytest.raises(ValueError):
            a + ScalarField.zeros(Grid(16, TWO_PI))


class TestTransforms:
    """Fourier-series transforms and their inverse."""

    def test_zero(self, grid32):
        spec = transform_forward(ScalarField.zeros(grid32))
        assert np.all(spec.coefficients == 0)
        assert np.all(transform_inverse(spec).values == 0)

    def test_pure_mode_has_two_coefficients(self, grid64):
        f = ScalarField.from_function(grid64, lambda X, Y: np.sin(X))
        spec = transform_forward(f)
        assert spec.nonzero_wavevectors() == [(-1, 0), (1, 0)]
        # sin x = (e^{ix} - e^{-ix}) / 2i
        assert spec.coefficient(1, 0) == pytest.approx(-0.5j, abs=1e-15)
        assert spec.coefficient(-1, 0) == pytest.approx(0.5j, abs=1e-15)

    def test_coefficient_index_range(self, grid32):
        spec = transform_forward(ScalarField.zeros(grid32))
        with pytest.raises(IndexError):
            spec.coefficient(16, 0)

    def test_non_symmetric_inverse_rejected(self, grid32):
        c = np.zeros(grid32.shape, dtype=complex)
        c[1, 0] = 1.0
        with pytest.raises(ValueError):
            transform_inverse(Spectrum(grid32, c, conjugate_symmetric=False))

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        g = Grid(32, 3.0)
        f = ScalarField(g, np.random.default_rng(seed).normal(size=g.shape))
        back = transform_inverse(transform_forward(f))
        assert lp_norm(back - f, 2) <= 1e-12 * lp_norm(f, 2)


class TestIntegrate:
    def test_constant(self, grid64):
        f = ScalarField(grid64, np.ones(grid64.shape))
        assert integrate(f) == pytest.approx(TWO_PI**2, rel=1e-14)

    def test_zero_mean_mode(self, grid64):
        assert abs(integrate(ScalarField.from_function(grid64, lambda X, Y: np.sin(X)))) < 1e-12

    def test_sin_squared(self, grid64):
        # int_0^{2 pi} int_0^{2 pi} sin^2 x dx dy = 2 pi^2
        f = ScalarField.from_function(grid64, lambda X, Y: np.sin(X) ** 2)
        assert integrate(f) == pytest.approx(2 * np.pi**2, rel=1e-14)

    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
    def test_linearity(self, seed, a, b):
        g = Grid(16, TWO_PI)
        rng = np.random.default_rng(seed)
        f, h = ScalarField(g, rng.normal(size=g.shape)), ScalarField(g, rng.normal(size=g.shape))
        lhs = integrate(a * f + b * h)
        rhs = a * integrate(f) + b * integrate(h)
        scale = abs(a) * lp_norm(f, 1) + abs(b) * lp_norm(h, 1)
        assert abs(lhs - rhs) <= 1e-12 * max(scale, 1e-300)

    def test_inner_matches_integrate(self, grid32):
        rng = np.random.default_rng(1)
        a, b = band_limited(grid32, rng), band_limited(grid32, rng)
        assert inner(a, b) == pytest.approx(integrate(ScalarField(grid32, a.values * b.values)), rel=1e-13)


class TestLpNorm:
    def test_zero(self, grid32):
        for p in (1, 1.5, 2, np.inf):
            assert lp_norm(ScalarField.zeros(grid32), p) == 0.0

    def test_sin_l2(self, grid64):
        f = ScalarField.from_function(grid64, lambda X, Y: np.sin(X))
        assert lp_norm(f, 2) == pytest.approx(np.pi * np.sqrt(2), rel=1e-14)

    def test_constant_sup(self, grid32):
        assert lp_norm(ScalarField(grid32, np.full(grid32.shape, -3.5)), np.inf) == 3.5

    def test_rejects_small_p(self, grid32):
        with pytest.raises(ValueError):
            lp_norm(ScalarField.zeros(grid32), 0.5)

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 1.3, 1.5, 2.0, 3.0, np.inf]))
    def test_triangle_inequality(self, seed, p):
        g = Grid(16, 2.0)
        rng = np.random.default_rng(seed)
        a, b = ScalarField(g, rng.normal(size=g.shape)), ScalarField(g, rng.standard_cauchy(size=g.shape))
        assert lp_norm(a + b, p) <= (lp_norm(a, p) + lp_norm(b, p)) * (1 + 1e-10)


class TestDealias:
    def _mode(self, grid, k1):
        c = np.zeros(grid.shape, dtype=complex)
        c[k1, 0] = c[-k1, 0] = 0.5
        return Spectrum(grid, c)

    def test_low_mode_survives(self, grid64):
        spec = self._mode(grid64, 1)
        assert np.array_equal(dealias(spec, grid64).coefficients, spec.coefficients)

    def test_high_mode_removed(self, grid64):
        # cutoff (2/3) * 32 = 21.3
        assert np.all(dealias(self._mode(grid64, 31), grid64).coefficients == 0)
        assert dealias(self._mode(grid64, 21), grid64).nonzero_wavevectors() == [(-21, 0), (21, 0)]
        assert np.all(dealias(self._mode(grid64, 22), grid64).coefficients == 0)

    def test_grid_mismatch(self, grid64):
        with pytest.raises(ValueError):
            dealias(self._mode(grid64, 1), Grid(32, TWO_PI))

    @given(st.integers(0, 2**32 - 1))
    def test_idempotent_and_l2_contracting(self, seed):
        g = Grid(32, TWO_PI)
        f = ScalarField(g, np.random.default_rng(seed).normal(size=g.shape))
        once = dealias(transform_forward(f), g)
        twice = dealias(once, g)
        assert np.array_equal(once.coefficients, twice.coefficients)
        assert lp_norm(transform_inverse(once), 2) <= lp_norm(f, 2) * (1 + 1e-12)


class TestLocalDistance:
    def test_identical(self, grid64):
        f = band_limited(grid64, np.random.default_rng(0))
        assert local_lp_distance(f, f, 1.5, 1.0, (np.pi, np.pi)) == 0.0

    @pytest.mark.parametrize("R", [0.5, 1.0, 2.5])
    def test_disc_area(self, R):
        g = Grid(128, TWO_PI)
        one, zero = ScalarField(g, np.ones(g.shape)), ScalarField.zeros(g)
        area = local_lp_distance(one, zero, 1.0, R, (np.pi, np.pi))
        assert abs(area - np.pi * R**2) <= 2 * np.pi * R * g.h

    def test_symmetric_and_vector(self, grid32):
        rng = np.random.default_rng(3)
        a, b = band_limited(grid32, rng), band_limited(grid32, rng)
        c = (1.0, 2.0)
        assert local_lp_distance(a, b, 1.5, 1.2, c) == local_lp_distance(b, a, 1.5, 1.2, c)
        u = VectorField(grid32, a.values, b.values)
        v = VectorField.zeros(grid32)
        expected = local_lp_distance(ScalarField(grid32, np.hypot(a.values, b.values)), ScalarField.zeros(grid32), 2, 1.2, c)
        assert local_lp_distance(u, v, 2, 1.2, c) == pytest.approx(expected, rel=1e-14)

    def test_ball_must_fit(self, grid32):
        f = ScalarField.zeros(grid32)
        with pytest.raises(ValueError):
            local_lp_distance(f, f, 1.0, np.pi, (0.0, 0.0))

    def test_periodic_wrap(self, grid64):
        # A ball centred on a corner covers the four corners of the fundamental cell.
        one, zero = ScalarField(grid64, np.ones(grid64.shape)), ScalarField.zeros(grid64)
        a = local_lp_distance(one, zero, 1.0, 1.0, (0.0, 0.0))
        b = local_lp_distance(one, zero, 1.0, 1.0, (np.pi, np.pi))
        assert a == pytest.approx(b, rel=1e-12)
