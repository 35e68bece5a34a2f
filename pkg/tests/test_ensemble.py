"""Ensemble orchestration: determinism, aggregation, persistence, studies."""

import json

import numpy as np
import pytest

from phasesep import (
    SchemaVersionError,
    convergence_study,
    load_records,
    load_report,
    persist,
    run_ensemble,
    validate_config,
)
from phasesep.ensemble import CSV_HEADER, aggregate_summaries


def small_config(**over):
    raw = {
        "domain": {"d": 1, "n": 31, "L": 1.0},
        "time": {"T": 0.05, "dt": 1e-3, "stride": 10},
        "potential": {"theta": 1.0, "theta0": 2.0},
        "noise": {"s0": 3, "K": 8, "sigma0": 0.1, "gamma": 1.0},
        "init": {"kind": "eigen_bump", "delta0": 0.5},
        "ensemble": {"master_seed": 77, "n_traj": 5},
    }
    for key, section in over.items():
        raw.setdefault(key, {}).update(section)
    return validate_config(raw)


@pytest.fixture(scope="module")
def small_run():
    cfg = small_config()
    report, records = run_ensemble(cfg)
    return cfg, report, records


class TestRunEnsemble:
    def test_quiet_single_trajectory(self):
        cfg = small_config(noise={"sigma0": 0.0},
                           init={"kind": "constant", "amplitude": 0.0},
                           ensemble={"n_traj": 1})
        report, records = run_ensemble(cfg)
        agg = report.aggregate
        assert agg["delta_min_min"] == 1.0 and agg["delta_min_max"] == 1.0
        assert np.all(records[0].delta == 1.0)

    def test_every_trajectory_separated(self, small_run):
        _, report, records = small_run
        assert all(s["delta_min"] > 0 for s in report.per_trajectory)
        assert report.aggregate["total_clamp_events"] == 0

    def test_worker_count_independence(self, small_run):
        cfg, report, records = small_run
        report4, records4 = run_ensemble(cfg, workers=4)
        assert json.dumps(report.to_dict()) == json.dumps(report4.to_dict())
        for a, b in zip(records, records4):
            assert np.array_equal(a.final_values, b.final_values)

    def test_seed_isolation(self, small_run):
        cfg, _, records = small_run
        raw = cfg.effective_dict()
        raw["ensemble"]["n_traj"] = cfg.n_traj + 1
        _, longer = run_ensemble(validate_config(raw))
        for a, b in zip(records, longer):
            assert np.array_equal(a.final_values, b.final_values)

    def test_aggregate_recomputable(self, small_run):
        cfg, report, _ = small_run
        assert aggregate_summaries(report.per_trajectory, cfg.delta0) == report.aggregate

    def test_exp_moments_present(self, small_run):
        _, report, _ = small_run
        ems = report.aggregate["exp_moment"]
        assert set(ems) == {"1", "2", "4"}
        for em in ems.values():
            assert np.isfinite(em["mean"])


class TestInitialField:
    def test_file_init_round_trip(self, tmp_path):
        from phasesep.ensemble import initial_field, make_grid

        cfg0 = small_config()
        grid = make_grid(cfg0)
        values = 0.3 * np.sin(np.pi * grid.axis_coords())
        path = tmp_path / "u0.csv"
        np.savetxt(path, values)
        cfg = small_config(init={"kind": "file", "path": str(path),
                                 "delta0": 0.5})
        u0 = initial_field(cfg)
        assert np.allclose(u0.values, values, rtol=0, atol=1e-16)

    def test_file_init_validates_separation(self, tmp_path):
        from phasesep import ConfigError
        from phasesep.ensemble import initial_field

        path = tmp_path / "u0.csv"
        np.savetxt(path, np.full(31, 0.9))
        cfg = small_config(init={"kind": "file", "path": str(path),
                                 "delta0": 0.5})
        with pytest.raises(ConfigError):
            initial_field(cfg)


class TestPersistence:
    def test_round_trip(self, small_run, tmp_path):
        cfg, report, records = small_run
        persist(report, records, tmp_path)
        data, loaded = load_records(tmp_path)
        assert data == report.to_dict()
        assert len(loaded) == len(records)
        for a, b in zip(records, loaded):
            for name in ("times", "delta", "energy", "g_mass_s0", "g_mass_s0p1",
                         "l2", "h1", "h2_proxy", "sup_u", "holder_alpha"):
                assert np.array_equal(getattr(a, name), getattr(b, name)), name
            assert a.delta_min == b.delta_min
            assert a.clamp_events == b.clamp_events

    def test_csv_shape_and_format(self, small_run, tmp_path):
        cfg, report, records = small_run
        persist(report, records, tmp_path)
        lines = (tmp_path / "timeseries.csv").read_text().split("\n")
        assert lines[0] == CSV_HEADER
        body = [ln for ln in lines[1:] if ln]
        snapshots = cfg.n_steps // cfg.stride + 1
        assert len(body) == cfg.n_traj * snapshots
        # full double precision round trip
        val = body[3].split(",")[3]
        assert float(val) == records[0].energy[3]

    def test_rerun_byte_identical(self, small_run, tmp_path):
        cfg, report, records = small_run
        persist(report, records, tmp_path / "a")
        report2, records2 = run_ensemble(cfg)
        persist(report2, records2, tmp_path / "b")
        assert (tmp_path / "a" / "report.json").read_bytes() == \
            (tmp_path / "b" / "report.json").read_bytes()
        assert (tmp_path / "a" / "timeseries.csv").read_bytes() == \
            (tmp_path / "b" / "timeseries.csv").read_bytes()

    def test_schema_version_guard(self, small_run, tmp_path):
        cfg, report, records = small_run
        persist(report, records, tmp_path)
        path = tmp_path / "report.json"
        data = json.loads(path.read_text())
        data["schema_version"] = "999"
        path.write_text(json.dumps(data))
        with pytest.raises(SchemaVersionError):
            load_report(tmp_path)


class TestStudies:
    def test_dt_refine_monotone(self):
        cfg = small_config(time={"T": 0.2, "dt": 5e-4, "stride": 400},
                           ensemble={"n_traj": 4},
                           study={"kind": "dt_refine",
                                  "levels": [4e-3, 2e-3, 1e-3, 5e-4]})
        st = convergence_study(cfg)
        assert st.verdicts["pairwise_distances_strictly_decreasing"]

    def test_lambda_refine_monotone(self):
        cfg = small_config(domain={"n": 63},
                           time={"T": 0.05, "dt": 5e-5, "stride": 1000},
                           init={"kind": "eigen_bump", "delta0": 0.01},
                           ensemble={"master_seed": 42, "n_traj": 4},
                           study={"kind": "lambda_refine",
                                  "levels": [1e-1, 1e-2, 1e-3]})
        st = convergence_study(cfg)
        assert st.verdicts["distance_to_reference_strictly_decreasing"]

    def test_grid_refine_heat_decay(self):
        cfg = small_config(noise={"sigma0": 0.0},
                           time={"T": 0.1, "dt": 2e-4, "stride": 500},
                           study={"kind": "grid_refine", "levels": [15, 31, 63]})
        st = convergence_study(cfg)
        assert st.verdicts["mode1_error_strictly_decreasing"]
        assert st.verdicts["finest_within_2pct"]
        assert st.verdicts["spatial_error_second_order"]

    def test_noise_scale_reports(self):
        cfg = small_config(study={"kind": "noise_scale",
                                  "levels": [0.05, 0.1, 0.2]})
        st = convergence_study(cfg)
        assert len(st.metrics) == 3
        assert all("delta_min" in m for m in st.metrics)
