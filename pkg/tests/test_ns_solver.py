import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu

from conftest import TWO_PI, band_limited, taylor_green
from vortexlab import (
    CFLViolation,
    Grid,
    ScalarField,
    SolverConfig,
    lp_norm,
    nonlinear_term,
    run_forward,
    step,
    torus_distance,
)
from vortexlab.ns_solver import advance


def _rel_l2(a, b):
    return np.sqrt(np.sum((a - b) ** 2) / np.sum(b**2))


def radial_heat(profile, nu, t_final, r_max=20.0, dr=0.005, dt=1e-3):
    """Crank-Nicolson for ``w_t = nu (w_rr + w_r / r)`` with ``w_r(0) = 0`` and ``w(r_max) = 0``."""
    r = np.arange(0.0, r_max + dr / 2, dr)
    ri = r[1:-1]
    lower = np.r_[1 / dr**2 - 1 / (2 * dr * ri), 0.0]
    main = np.r_[-4 / dr**2, -2 / dr**2 * np.ones_like(ri), 0.0]
    upper = np.r_[4 / dr**2, 1 / dr**2 + 1 / (2 * dr * ri)]
    A = nu * diags([lower, main, upper], [-1, 0, 1], format="csc")
    eye = identity(r.size, format="csc")
    solve = splu((eye - 0.5 * dt * A).tocsc()).solve
    explicit = eye + 0.5 * dt * A
    w = profile(r)
    for _ in range(round(t_final / dt)):
        w = solve(explicit @ w)
    return r, w


class TestSolverConfig:
    def test_step_count(self):
        assert SolverConfig(0.01, 0.1, 1.0).step_count == 10

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(nu=-1.0, dt=0.1, t_final=1.0),
            dict(nu=0.0, dt=0.0, t_final=1.0),
            dict(nu=0.0, dt=0.3, t_final=1.0),
            dict(nu=0.0, dt=0.1, t_final=1.0, snapshot_stride=3),
            dict(nu=0.0, dt=0.1, t_final=1.0, snapshot_stride=0),
            dict(nu=0.0, dt=0.1, t_final=1.0, integrator="RK3"),
            dict(nu=0.0, dt=0.1, t_final=1.0, cfl_fraction=1.5),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

    def test_last_step_time_is_exact(self):
        cfg = SolverConfig(0.0, 0.1, 0.3)
        assert cfg.step_time(cfg.step_count) == 0.3


class TestNonlinearTerm:
    def test_function_of_x_only(self, grid64):
        X, _ = grid64.mesh
        w = ScalarField(grid64, np.sin(X) + 0.3 * np.cos(3 * X))
        assert np.max(np.abs(nonlinear_term(w).values)) < 1e-12

    def test_taylor_green(self, grid64):
        assert np.max(np.abs(nonlinear_term(taylor_green(grid64)).values)) < 1e-12

    def test_zero(self, grid32):
        assert np.all(nonlinear_term(ScalarField.zeros(grid32)).values == 0)

    @given(st.integers(0, 2**32 - 1))
    def test_zero_mean(self, seed):
        g = Grid(32, 3.0)
        w = band_limited(g, np.random.default_rng(seed), 8)
        n = nonlinear_term(w)
        assert abs(n.mean()) <= 1e-12 * max(lp_norm(n, 2), 1.0)

    def test_matches_physical_space_product(self, grid64):
        """For data with |k| <= 4 the product stays inside the dealiased band."""
        X, Y = grid64.mesh
        w = ScalarField(grid64, np.sin(X + 2 * Y) + 0.5 * np.cos(2 * X))
        # psi = -sin(x + 2y)/5 - cos(2x)/8 solves lap psi = w; u = (-psi_y, psi_x).
        u1 = 2 * np.cos(X + 2 * Y) / 5
        u2 = -np.cos(X + 2 * Y) / 5 + 0.5 * np.sin(2 * X) / 2
        wx = np.cos(X + 2 * Y) - np.sin(2 * X)
        wy = 2 * np.cos(X + 2 * Y)
        expected = -(u1 * wx + u2 * wy)
        assert np.max(np.abs(nonlinear_term(w).values - expected)) < 1e-13


class TestStep:
    def test_pure_mode_decays(self, grid64):
        X, _ = grid64.mesh
        cfg = SolverConfig(0.1, 0.01, 0.01)
        out = step(ScalarField(grid64, np.sin(X)), cfg)
        assert _rel_l2(out.values, np.sin(X) * np.exp(-0.1 * 0.01)) < 1e-10

    def test_euler_taylor_green_steady(self, grid64):
        w = taylor_green(grid64)
        out = step(w, SolverConfig(0.0, 0.01, 0.01))
        assert np.max(np.abs(out.values - w.values)) < 1e-10

    def test_constant_fixed(self, grid32):
        w = ScalarField(grid32, np.full(grid32.shape, 2.5))
        out = step(w, SolverConfig(0.3, 0.05, 0.05))
        assert np.max(np.abs(out.values - 2.5)) < 1e-14

    def test_cfl_violation_reports_velocity_and_dt(self, grid32):
        w = 50 * taylor_green(grid32)
        with pytest.raises(CFLViolation) as info:
            step(w, SolverConfig(0.0, 0.1, 0.1))
        err = info.value
        assert err.max_velocity == pytest.approx(50.0, rel=1e-12)
        assert err.admissible_dt == pytest.approx(0.5 * grid32.h / 50.0, rel=1e-12)
        assert err.step_index == 0

    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 0.05))
    def test_mean_conserved(self, seed, nu):
        g = Grid(32, TWO_PI)
        w = band_limited(g, np.random.default_rng(seed), 5, zero_mean=False)
        w = w * (1.0 / max(np.max(np.abs(w.values)), 1e-300))
        out = step(w, SolverConfig(nu, 0.01, 0.01))
        assert abs(out.mean() - w.mean()) < 1e-13

    def test_deterministic(self, grid32):
        w = band_limited(grid32, np.random.default_rng(1), 4)
        w = w * (1.0 / np.max(np.abs(w.values)))
        cfg = SolverConfig(0.01, 0.01, 0.01)
        a, _ = advance(w.values, cfg, grid32)
        b, _ = advance(w.values, cfg, grid32)
        assert np.array_equal(a, b)


class TestRunForward:
    def test_taylor_green_decay(self, grid64):
        cfg = SolverConfig(0.01, 1e-3, 1.0, snapshot_stride=100)
        traj = run_forward(taylor_green(grid64), cfg)
        expected = taylor_green(grid64).values * np.exp(-0.02)
        assert _rel_l2(traj.final().values, expected) < 1e-6

    def test_zero_data(self, grid32):
        traj = run_forward(ScalarField.zeros(grid32), SolverConfig(0.1, 0.1, 1.0))
        assert all(np.all(w.values == 0) for w in traj.omega_snapshots)
        assert np.all(traj.diagnostics["lp_2"] == 0)

    @pytest.mark.parametrize("stride", [1, 2, 5, 10])
    def test_snapshot_count_and_times(self, grid32, stride):
        cfg = SolverConfig(0.01, 0.05, 0.5, snapshot_stride=stride)
        traj = run_forward(taylor_green(grid32), cfg)
        assert len(traj.omega_snapshots) == cfg.step_count // stride + 1
        assert len(traj.velocity_snapshots) == len(traj.times)
        assert traj.times[0] == 0.0 and traj.times[-1] == 0.5
        assert np.all(np.diff(traj.times) > 0)
        assert len(traj.diagnostics["lp_1"]) == cfg.step_count + 1

    def test_lamb_oseen_against_radial_heat(self):
        grid = Grid(256, 16 * np.pi)
        center = (grid.side_length / 2, grid.side_length / 2)
        profile = lambda r: np.exp(-(r**2) / 2)  # noqa: E731
        d = torus_distance(grid, center)
        traj = run_forward(ScalarField(grid, profile(d)), SolverConfig(0.05, 0.05, 1.0, 20))
        r, w_r = radial_heat(profile, 0.05, 1.0)
        assert _rel_l2(traj.final().values, np.interp(d, r, w_r)) < 1e-4

    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.005, 0.02, 0.1]))
    def test_lp_norms_non_increasing(self, seed, nu):
        g = Grid(32, TWO_PI)
        w = band_limited(g, np.random.default_rng(seed), 4)
        w = w * (1.0 / np.max(np.abs(w.values)))
        traj = run_forward(w, SolverConfig(nu, 0.02, 0.4, p_target=1.5))
        for key in ("lp_1", "lp_target", "lp_2"):
            series = traj.diagnostics[key]
            assert np.max(series) <= series[0] * (1 + 1e-8)

    @given(st.integers(0, 2**32 - 1))
    def test_integral_conserved(self, seed):
        g = Grid(32, TWO_PI)
        w = band_limited(g, np.random.default_rng(seed), 4, zero_mean=False)
        w = w * (1.0 / np.max(np.abs(w.values)))
        traj = run_forward(w, SolverConfig(0.01, 0.02, 0.4))
        integral = traj.diagnostics["integral"]
        scale = max(abs(integral[0]), lp_norm(w, 1))
        assert np.max(np.abs(integral - integral[0])) <= 1e-12 * scale

    def test_euler_l2_drift_small(self, grid32):
        w = band_limited(grid32, np.random.default_rng(3), 3)
        w = w * (1.0 / np.max(np.abs(w.values)))
        traj = run_forward(w, SolverConfig(0.0, 0.01, 0.5))
        l2 = traj.diagnostics["lp_2"]
        assert np.max(np.abs(l2 - l2[0])) < 1e-3 * l2[0]

    def test_temporal_order_four(self):
        """Halving dt cuts the error against a fine reference by roughly 16."""
        g = Grid(32, TWO_PI)
        w0 = band_limited(g, np.random.default_rng(5), 3)
        w0 = w0 * (1.0 / np.max(np.abs(w0.values)))
        ref = run_forward(w0, SolverConfig(0.01, 1 / 1280, 0.5, snapshot_stride=640)).final().values
        errs = []
        for dt in (0.05, 0.025, 0.0125):
            out = run_forward(w0, SolverConfig(0.01, dt, 0.5, snapshot_stride=round(0.5 / dt)))
            errs.append(np.sqrt(np.mean((out.final().values - ref) ** 2)))
        ratios = [errs[0] / errs[1], errs[1] / errs[2]]
        assert all(12 <= r <= 20 for r in ratios), ratios
