import json

import pytest

from dnls.cli import main, parse_overrides
from dnls.lattice import load_field


def run_cli(*args) -> int:
    return main(list(args))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


class TestConfigHandling:
    def test_overrides_nest(self):
        out = parse_overrides(["--dynamics.dt", "1e-3", "--lattice.L", "8"])
        assert out == {"dynamics": {"dt": 1e-3}, "lattice": {"L": 8}}

    def test_override_missing_value(self):
        from dnls.cli import ConfigError

        with pytest.raises(ConfigError):
            parse_overrides(["--dynamics.dt"])

    def test_unknown_experiment_exit_2(self, tmp_path, capsys):
        assert run_cli("--experiment", "simulate", "--out", str(tmp_path / "r")) == 0
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "nope", "out": str(tmp_path / "x")}))
        assert run_cli("--config", str(cfg)) == 2

    def test_missing_out_exit_2(self):
        assert run_cli("--experiment", "simulate") == 2

    def test_inconsistent_grid_exit_2(self, tmp_path):
        code = run_cli(
            "--experiment", "simulate", "--out", str(tmp_path / "r"),
            "--lattice.L", "4", "--dynamics.dt", "0.001", "--dynamics.t_end", "0.0105",
        )
        assert code == 2

    def test_bad_config_file_exit_2(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        assert run_cli("--config", str(cfg), "--out", str(tmp_path / "r")) == 2
        assert run_cli("--config", str(tmp_path / "missing.json"), "--out", "x") == 2


class TestSimulate:
    def test_zero_time_single_snapshot(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "simulate", "--out", str(out), "--seed", "1",
            "--lattice.L", "8", "--dynamics.t_end", "0.0", "--dynamics.stride", "1",
            "--dump_fields", "true",
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["results"]["snapshots"] == 1
        series = (out / "series.csv").read_text().splitlines()
        assert series[0].startswith("t,N_L,H_L")
        assert len(series) == 2
        assert (out / "fields" / "snapshot_000000.txt").exists()

    def test_manifest_hashes_artifacts(self, tmp_path):
        import hashlib

        out = tmp_path / "run"
        run_cli(
            "--experiment", "simulate", "--out", str(out), "--seed", "3",
            "--lattice.L", "4", "--dynamics.t_end", "0.1", "--dynamics.dt", "0.01",
            "--dynamics.stride", "10",
        )
        manifest = read_json(out / "manifest.json")
        digest = hashlib.sha256((out / "series.csv").read_bytes()).hexdigest()
        assert manifest["artifacts"]["series.csv"] == digest

    def test_field_dump_loadable(self, tmp_path):
        out = tmp_path / "run"
        run_cli(
            "--experiment", "simulate", "--out", str(out), "--seed", "4",
            "--lattice.L", "4", "--dynamics.t_end", "0.0", "--dynamics.stride", "1",
            "--dump_fields", "true",
        )
        field = load_field(out / "fields" / "snapshot_000000.txt")
        assert field.shape.L == 4


class TestConserve:
    def test_onsite_exact_case_passes(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "conserve", "--out", str(out), "--seed", "5",
            "--lattice.L", "8", "--kernel.type", "zero",
            "--dynamics.t_end", "1.0", "--dynamics.dt", "0.001", "--dynamics.stride", "100",
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["checks"]["particle_number_conserved"]
        assert manifest["checks"]["onsite_exact_solution"]

    def test_norm_losing_scheme_fails(self, tmp_path):
        # coarse RK4 loses enough norm to trip the conservation check
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "conserve", "--out", str(out), "--seed", "6",
            "--lattice.L", "8", "--dynamics.scheme", "rk4",
            "--dynamics.dt", "0.2", "--dynamics.t_end", "20.0", "--dynamics.stride", "10",
        )
        assert code == 1
        manifest = read_json(out / "manifest.json")
        assert manifest["checks"]["particle_number_conserved"] is False

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blow_up_exit_3(self, tmp_path):
        code = run_cli(
            "--experiment", "conserve", "--out", str(tmp_path / "run"), "--seed", "7",
            "--lattice.L", "4", "--dynamics.scheme", "rk4",
            "--dynamics.dt", "10.0", "--dynamics.t_end", "100.0", "--dynamics.stride", "1",
            "--initial.sigma2", "100.0",
        )
        assert code == 3


class TestBoundCheck:
    def test_growth_bound_passes(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "bound-check", "--out", str(out), "--seed", "8",
            "--lattice.L", "16", "--dynamics.t_end", "1.0", "--dynamics.dt", "0.005",
            "--dynamics.stride", "20", "--observables.eps", "0.1",
            "--observables.weight", '{"kind": "power", "parameter": 0.5}',
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["checks"]["growth_bound_x0"]
        assert manifest["checks"]["weighted_bound"]
        series = (out / "series.csv").read_text().splitlines()
        assert "ratio_eps0.1_x0" in series[0]


class TestSweep:
    def test_window_too_large_exit_2(self, tmp_path):
        code = run_cli(
            "--experiment", "sweep-L", "--out", str(tmp_path / "run"),
            "--sweep.L_list", "[6, 8]", "--sweep.k", "7",
        )
        assert code == 2

    def test_small_sweep_artifacts(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "sweep-L", "--out", str(out), "--seed", "9",
            "--initial.type", "hashed", "--initial.p", "0.45",
            "--sweep.L_list", "[6, 8, 10, 12]", "--sweep.k", "3",
            "--dynamics.scheme", "rk4", "--dynamics.dt", "0.005",
            "--dynamics.t_end", "0.5", "--dynamics.stride", "1",
        )
        assert code == 0
        report = read_json(out / "sweep.json")
        assert [e["L"] for e in report["entries"]] == [6, 8, 10, 12]
        csv_lines = (out / "sweep.csv").read_text().splitlines()
        assert csv_lines[0] == "L,delta_bar"
        assert len(csv_lines) == 5

    def test_gaussian_initial_rejected(self, tmp_path):
        code = run_cli(
            "--experiment", "sweep-L", "--out", str(tmp_path / "run"),
            "--initial.type", "gaussian", "--sweep.L_list", "[6, 8]", "--sweep.k", "3",
        )
        assert code == 2


class TestUniqueness:
    def test_order_check_passes(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "uniqueness", "--out", str(out), "--seed", "10",
            "--lattice.L", "10", "--dynamics.t_end", "0.5", "--dynamics.dt", "0.005",
            "--dynamics.stride", "10",
            "--uniqueness.dt_list", "[0.005, 0.0025, 0.00125]",
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["checks"]["refinement_order"]
        assert manifest["results"]["fitted_order"] >= 1.8


class TestSampling:
    def test_gaussian_stats_artifact(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "sample-gaussian", "--out", str(out), "--seed", "11",
            "--lattice.L", "8", "--sampling.n_samples", "50",
        )
        assert code == 0
        stats = read_json(out / "stats.json")
        assert set(stats) >= {"per_site_moments", "max_moment", "violations_by_radius"}
        assert len(stats["per_site_moments"]) == 17

    def test_gibbs_stats_artifact(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli(
            "--experiment", "sample-gibbs", "--out", str(out), "--seed", "12",
            "--lattice.L", "4", "--sampling.n_samples", "20",
            "--sampling.burn_in", "20", "--sampling.thinning", "2",
        )
        assert code == 0
        manifest = read_json(out / "manifest.json")
        assert 0.0 < manifest["results"]["acceptance"] < 1.0
        assert (out / "stats.json").exists()

    def test_gibbs_focusing_exit_2(self, tmp_path):
        code = run_cli(
            "--experiment", "sample-gibbs", "--out", str(tmp_path / "r"),
            "--sampling.lambda", "-1.0",
        )
        assert code == 2

    def test_stats_on_dumped_fields(self, tmp_path):
        sample_dir = tmp_path / "samples"
        code = run_cli(
            "--experiment", "sample-gaussian", "--out", str(sample_dir), "--seed", "13",
            "--lattice.L", "4", "--sampling.n_samples", "10", "--dump_fields", "true",
        )
        assert code == 0
        out = tmp_path / "stats"
        code = run_cli(
            "--experiment", "stats", "--out", str(out),
            "--stats.fields_dir", str(sample_dir / "fields"),
        )
        assert code == 0
        assert (out / "stats.json").exists()

    def test_stats_missing_dir_exit_2(self, tmp_path):
        assert run_cli("--experiment", "stats", "--out", str(tmp_path / "s")) == 2


class TestReproducibility:
    def _run(self, out, extra=()):
        args = [
            "--experiment", "conserve", "--out", str(out), "--seed", "17",
            "--lattice.L", "8", "--dynamics.t_end", "0.5", "--dynamics.dt", "0.005",
            "--dynamics.stride", "10", "--observables.eps", "0.1",
        ]
        return run_cli(*args, *extra)

    def test_byte_identical_artifacts(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert self._run(a) == 0
        assert self._run(b) == 0
        assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
        ma, mb = read_json(a / "manifest.json"), read_json(b / "manifest.json")
        for m in (ma, mb):
            m.pop("wall_clock_s")
            m["config"].pop("out")
        assert ma == mb

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        self._run(a)
        args = [
            "--experiment", "conserve", "--out", str(b), "--seed", "18",
            "--lattice.L", "8", "--dynamics.t_end", "0.5", "--dynamics.dt", "0.005",
            "--dynamics.stride", "10", "--observables.eps", "0.1",
        ]
        run_cli(*args)
        assert (a / "series.csv").read_bytes() != (b / "series.csv").read_bytes()

    def test_dotted_override_effective(self, tmp_path):
        out = tmp_path / "r"
        self._run(out, extra=("--dynamics.dt", "0.01",))
        manifest = read_json(out / "manifest.json")
        assert manifest["config"]["dynamics"]["dt"] == 0.01
