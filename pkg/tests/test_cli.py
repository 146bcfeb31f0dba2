import json
import os

from ggflow.cli import main


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


SYSTEM_3 = {
    "pi": [1 / 3, 1 / 3, 1 / 3],
    "kappa": [
        [0.0, 0.6, 0.3],
        [0.6, 0.0, 0.45],
        [0.3, 0.45, 0.0],
    ],
}


class TestCheckScenario:
    def test_check_passes(self, tmp_path, capsys):
        assert main(["check", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["schema"] == "ggflow/1"
        assert all(entry["passed"] for entry in report["checks"].values())


class TestEvolveScenario:
    def test_reports_and_artifacts(self, tmp_path):
        cfg = {
            "system": SYSTEM_3,
            "dissipation": {"family": "cosh"},
            "entropy": {"family": "boltzmann"},
            "u0": [2.0, 0.6, 0.4],
            "T": 1.0,
            "dt": 1e-3,
        }
        rc = main(["evolve", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert abs(report["edb"]["deficit"]) < 1e-4
        assert (tmp_path / "out" / "trajectory.csv").exists()
        assert (tmp_path / "out" / "fluxes.csv").exists()

    def test_negative_dt_is_config_error(self, tmp_path, capsys):
        cfg = {
            "system": SYSTEM_3,
            "u0": [1.0, 1.0, 1.0],
            "T": 1.0,
            "dt": -0.1,
        }
        rc = main(["evolve", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "out")])
        assert rc == 2
        assert "dt" in capsys.readouterr().err

    def test_missing_config_is_error(self, tmp_path):
        assert main(["evolve", "--config", str(tmp_path / "nope.json")]) == 2


class TestDVTScenario:
    def test_runs_and_reports_value(self, tmp_path):
        cfg = {
            "system": {"pi": [0.5, 0.5], "kappa": [[0.0, 1.0], [1.0, 0.0]]},
            "dissipation": {"family": "constant_alpha", "params": {}},
            "rho0": [0.8, 0.2],
            "rho1": [0.5, 0.5],
            "tau": 1.0,
        }
        rc = main(["dvt", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert abs(report["value"] - 0.09) < 1e-4


class TestJKOScenario:
    def test_convergence_table(self, tmp_path):
        cfg = {
            "system": SYSTEM_3,
            "rho0": [0.6, 0.2, 0.2],
            "T": 0.4,
            "tau_list": [0.2, 0.1],
        }
        rc = main(["jko", "--config", write_config(tmp_path, cfg),
                   "--out", str(tmp_path / "out")])
        assert rc == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(report["convergence_table"]) == 2
        gaps = [row["sup_tv_gap"] for row in report["convergence_table"]]
        assert gaps[1] <= gaps[0]


class TestLDPScenario:
    def test_deterministic_reports(self, tmp_path):
        cfg = {
            "system": SYSTEM_3,
            "n": 300,
            "T": 1.0,
            "seed": 5,
            "bins": 20,
        }
        path = write_config(tmp_path, cfg)
        assert main(["ldp", "--config", path, "--out", str(tmp_path / "a")]) == 0
        assert main(["ldp", "--config", path, "--out", str(tmp_path / "b")]) == 0
        ra = (tmp_path / "a" / "report.json").read_bytes()
        rb = (tmp_path / "b" / "report.json").read_bytes()
        assert ra == rb
        ea = (tmp_path / "a" / "events.csv").read_bytes()
        eb = (tmp_path / "b" / "events.csv").read_bytes()
        assert ea == eb

    def test_seed_flag_overrides(self, tmp_path):
        cfg = {"system": SYSTEM_3, "n": 100, "T": 0.5, "seed": 5, "bins": 10}
        path = write_config(tmp_path, cfg)
        assert main(["ldp", "--config", path, "--seed", "6",
                     "--out", str(tmp_path / "c")]) == 0
        report = json.loads((tmp_path / "c" / "report.json").read_text())
        assert report["seed"] == 6
