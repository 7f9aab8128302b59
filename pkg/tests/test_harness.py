import json

import numpy as np
import pytest
from scipy import integrate as quad

from vortexlab import (
    TABLE_COLUMNS,
    Grid,
    InitialDatumSpec,
    ScalarField,
    SweepConfig,
    SweepReport,
    cauchy_rate,
    default_sweep_config,
    dump_json,
    export_report,
    load_trajectory,
    run_sweep,
    source_bank,
)
from vortexlab.harness import choose_dt

TWO_PI = 2 * np.pi
TG = InitialDatumSpec(kind="taylor_green")


def tg_config(**overrides):
    base = dict(
        nu_list=(0.04, 0.02),
        datum=TG,
        grid=Grid(32, TWO_PI),
        t_final=0.2,
        dt_policy="fixed",
        dt=0.01,
        mollify_constant=0.0,
        ball_radius=np.pi / 2,
    )
    base.update(overrides)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def tg_report():
    return run_sweep(tg_config(nu_list=(0.04, 0.02, 0.01)))


class TestSweepConfig:
    @pytest.mark.parametrize(
        "overrides",
        [
            dict(nu_list=(0.02, 0.02)),
            dict(nu_list=(0.01, 0.02)),
            dict(nu_list=(0.02, -0.01)),
            dict(nu_list=()),
            dict(dt=None),
            dict(dt_policy="adaptive"),
            dict(ball_radius=4.0),
            dict(workers=0),
            dict(t_final=0.0),
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ValueError):
            tg_config(**overrides)

    def test_datum_p_out_of_range(self):
        with pytest.raises(ValueError):
            tg_config(datum=InitialDatumSpec(kind="taylor_green", p=2.5))

    def test_dict_round_trip(self):
        cfg = default_sweep_config()
        back = SweepConfig.from_dict(json.loads(dump_json(cfg.to_dict())))
        assert back.config_hash() == cfg.config_hash()
        assert back.datum == cfg.datum and back.grid == cfg.grid

    def test_from_dict_unknown_key(self):
        d = tg_config().to_dict()
        d["viscosity"] = 1.0
        with pytest.raises(ValueError, match="viscosity"):
            SweepConfig.from_dict(d)

    def test_hash_tracks_content(self):
        assert tg_config().config_hash() != tg_config(seed=1).config_hash()
        assert tg_config().config_hash() == tg_config().config_hash()

    def test_default_sweep(self):
        cfg = default_sweep_config()
        assert cfg.nu_list == (4e-2, 2e-2, 1e-2, 5e-3)
        assert cfg.grid.n_points == 128 and cfg.grid.side_length == pytest.approx(8 * np.pi)
        assert (cfg.datum.p, cfg.datum.gamma, cfg.t_final) == (1.5, 1.2, 1.0)
        assert cfg.delta(0.01) == pytest.approx(0.3 * np.pi)

    def test_delta_defaults_to_side_length(self):
        cfg = tg_config(mollify_constant=None)
        assert cfg.delta(0.04) == pytest.approx(0.2 * TWO_PI)


class TestSourceBank:
    def test_disjoint_windows_inside_interval(self):
        g = Grid(64, 8.0)
        bank = source_bank(g, 2.0)
        assert [c.name for c in bank] == ["chi_0", "chi_1", "chi_2"]
        windows = [(c.temporal.start, c.temporal.stop) for c in bank]
        assert all(0.2 <= a < b <= 1.8 for a, b in windows)
        assert all(b1 <= a2 for (_, b1), (a2, _) in zip(windows, windows[1:]))
        for c in bank:
            assert c(0.0).max() == 0 and c(2.0).max() == 0
            assert c(0.5 * (c.temporal.start + c.temporal.stop)).max() > 0.9


class TestChooseDt:
    def test_fixed_fits_horizon(self):
        cfg = tg_config(dt=0.03, t_final=0.2)
        dt = choose_dt(cfg, {})
        assert round(0.2 / dt) * dt == pytest.approx(0.2) and dt <= 0.03

    def test_cfl_bound(self):
        g = Grid(32, TWO_PI)
        X, Y = g.mesh
        cfg = tg_config(dt_policy="cfl", dt=None, dt_max=1.0)
        w = ScalarField(g, 20 * np.sin(X) * np.sin(Y))
        dt = choose_dt(cfg, {0.04: w})
        assert dt <= 0.5 * 0.5 * g.h / 10.0
        assert round(cfg.t_final / dt) * dt == pytest.approx(cfg.t_final)

    def test_cfl_cap(self):
        cfg = tg_config(dt_policy="cfl", dt=None, dt_max=0.01)
        assert choose_dt(cfg, {0.04: ScalarField.zeros(cfg.grid)}) == pytest.approx(0.01)


class TestCauchyRate:
    def test_log_linear(self):
        assert cauchy_rate([0.4, 0.2, 0.1], [0.04, 0.02, 0.01]) == pytest.approx(1.0, abs=1e-12)
        assert cauchy_rate([0.4, 0.2, 0.1]) == pytest.approx(1.0, abs=1e-12)

    def test_constant(self):
        assert cauchy_rate([0.3, 0.3, 0.3], [0.04, 0.02, 0.01]) == 0.0

    @pytest.mark.parametrize("table", [[0.4], [0.4, 0.0], [0.4, -0.1], [0.4, float("nan")]])
    def test_rejects(self, table):
        with pytest.raises(ValueError):
            cauchy_rate(table)


class TestRunSweep:
    def test_single_viscosity(self):
        report = run_sweep(tg_config(nu_list=(0.02,)))
        assert report.status == "complete" and report.violations == []
        assert report.tables["velocity_cauchy"]["rows"] == []
        assert report.tables["pairing_drift"]["rows"] == []
        assert report.cauchy_rate is None
        assert len(report.table("lp_estimates")) == 3
        assert len(report.table("duality_residuals")) == 6

    def test_rows_descending(self, tg_report):
        nus = [row["nu"] for row in tg_report.table("growth_ratios")]
        assert nus == [0.04, 0.02, 0.01]
        assert [(r["nu_coarse"], r["nu_fine"]) for r in tg_report.table("velocity_cauchy")] == [(0.04, 0.02), (0.02, 0.01)]

    def test_invariant_suites_pass(self, tg_report):
        assert tg_report.status == "complete" and tg_report.violations == []
        assert all(r["passed"] for r in tg_report.table("lp_estimates"))
        assert all(r["passed"] for r in tg_report.table("gronwall"))
        adjoint = [r for r in tg_report.table("duality_residuals") if r["mode"] == "adjoint"]
        assert len(adjoint) == 9 and all(r["relative"] <= 1e-10 for r in adjoint)

    def test_tables_finite(self, tg_report):
        for name, table in tg_report.tables.items():
            assert table["columns"] == TABLE_COLUMNS[name]
            for row in table["rows"]:
                assert all(np.isfinite(v) for v in row if isinstance(v, float)), name

    def test_taylor_green_cauchy_closed_form(self):
        """u^nu = u_0 exp(-2 nu t); the table entries are the matching space-time norms."""
        nus = (0.04, 0.02, 0.01, 0.005)
        p, R, T = 1.5, np.pi / 2, 1.0
        report = run_sweep(tg_config(nu_list=nus, grid=Grid(64, TWO_PI), t_final=T, dt=0.01, pde_duality=False))
        speed = lambda r, th: (  # noqa: E731
            np.sin(np.pi + r * np.cos(th)) ** 2 * np.cos(np.pi + r * np.sin(th)) ** 2
            + np.cos(np.pi + r * np.cos(th)) ** 2 * np.sin(np.pi + r * np.sin(th)) ** 2
        ) ** (p / 2) * r
        ball, _ = quad.dblquad(speed, 0, TWO_PI, 0, R, epsabs=1e-12)
        for row in report.table("velocity_cauchy"):
            a, b = row["nu_coarse"], row["nu_fine"]
            time_part, _ = quad.quad(lambda t: abs(np.exp(-2 * a * t) - np.exp(-2 * b * t)) ** p, 0, T)
            closed = (ball * time_part) ** (1 / p)
            assert row["distance"] == pytest.approx(closed, rel=0.05)

    def test_growth_bounded(self, tg_report):
        rows = tg_report.table("growth_ratios")
        ratios = [r["max_growth_ratio"] for r in rows]
        assert all(np.isfinite(r) and r > 0 for r in ratios)
        assert max(ratios) <= 2 * ratios[0]
        assert all(np.isfinite(r["max_velocity_bound"]) for r in rows)

    def test_order_independence(self):
        cfg = tg_config(nu_list=(0.04, 0.02, 0.01), pde_duality=False)
        serial = run_sweep(cfg)
        threaded = run_sweep(tg_config(nu_list=(0.04, 0.02, 0.01), pde_duality=False, workers=3))
        assert dump_json(serial.to_dict()) == dump_json(threaded.to_dict())

    def test_abort_marks_failed(self, tmp_path):
        cfg = tg_config(dt=0.2, t_final=0.4, datum=InitialDatumSpec(kind="taylor_green", amplitude=20.0),
                        output_dir=str(tmp_path))
        report = run_sweep(cfg)
        assert report.status == "failed"
        assert [f["nu"] for f in report.failures] == [0.04, 0.02]
        assert all(f["step_index"] == 0 and "CFL" in f["error"] for f in report.failures)
        saved = json.loads((tmp_path / "report.json").read_text())
        assert saved["status"] == "failed"

    def test_persistence(self, tmp_path):
        report = run_sweep(tg_config(output_dir=str(tmp_path)), keep_trajectories=True)
        assert (tmp_path / "report.json").exists()
        for name in TABLE_COLUMNS:
            assert (tmp_path / f"{name}.csv").exists()
        run_dir = tmp_path / "runs" / "nu_0.040000000000000001"
        fwd = load_trajectory(run_dir / "navier_stokes")
        assert load_trajectory(run_dir / "transport").role == "transport"
        mem_fwd, _ = report.trajectories[0.04]
        assert np.array_equal(fwd.final().values, mem_fwd.final().values)
        assert "trajectories" not in report.to_dict()

    def test_no_trajectory_persistence(self, tmp_path):
        run_sweep(tg_config(output_dir=str(tmp_path), persist_trajectories=False))
        assert not (tmp_path / "runs").exists()
        assert (tmp_path / "report.json").exists()


class TestExport:
    def test_deterministic(self, tg_report, tmp_path):
        for sub in ("a", "b"):
            export_report(tg_report, tmp_path / sub, "json")
            export_report(tg_report, tmp_path / sub, "csv_bundle")
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_csv_headers(self, tg_report, tmp_path):
        paths = export_report(tg_report, tmp_path, "csv_bundle")
        assert sorted(p.stem for p in paths) == sorted(TABLE_COLUMNS)
        for p in paths:
            assert p.read_text().splitlines()[0] == ",".join(TABLE_COLUMNS[p.stem])

    def test_empty_table_header_only(self, tmp_path):
        report = run_sweep(tg_config(nu_list=(0.02,)))
        export_report(report, tmp_path, "csv_bundle")
        assert (tmp_path / "velocity_cauchy.csv").read_text() == "nu_coarse,nu_fine,distance\n"

    def test_report_round_trip(self, tg_report, tmp_path):
        export_report(tg_report, tmp_path, "json")
        back = SweepReport.from_dict(json.loads((tmp_path / "report.json").read_text()))
        export_report(back, tmp_path / "again", "json")
        assert (tmp_path / "report.json").read_bytes() == (tmp_path / "again" / "report.json").read_bytes()

    def test_unknown_format(self, tg_report, tmp_path):
        with pytest.raises(ValueError):
            export_report(tg_report, tmp_path, "xml")

    def test_io_error_names_path(self, tg_report, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(OSError, match="file"):
            export_report(tg_report, blocker / "sub", "json")
