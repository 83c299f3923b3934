import json
import subprocess
import sys
from pathlib import Path

import pytest

from srdf_kit.cli import main

CONFIGS = Path(__file__).parent.parent / "configs"
GOLDEN = Path(__file__).parent / "golden"


def run(task, config, out, extra=()):
    return main([task, "--config", str(config), "--out", str(out), *extra])


class TestArtifacts:
    def test_srdf_outputs(self, tmp_path):
        assert run("srdf", CONFIGS / "three_component_srdf.yaml", tmp_path) == 0
        curve = (tmp_path / "curve.csv").read_text(encoding="utf-8")
        assert curve.splitlines()[0] == "delta,rate_bits"
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["tool"] == "srdf-kit"
        assert summary["task"] == "srdf"
        assert summary["delta_min"] == pytest.approx(1.66)
        assert summary["delta_max"] == pytest.approx(3.0)
        assert len(summary["eigenvalues"]) == 1

    def test_srdf_matches_golden(self, tmp_path):
        run("srdf", CONFIGS / "three_component_srdf.yaml", tmp_path)
        got = (tmp_path / "curve.csv").read_bytes()
        assert got == (GOLDEN / "three_component_srdf_curve.csv").read_bytes()

    def test_distrate_outputs(self, tmp_path):
        assert run("distrate", CONFIGS / "three_component_distrate.yaml", tmp_path) == 0
        lines = (tmp_path / "curve.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "rate_bits,delta"
        assert len(lines) == 18

    def test_gmf_outputs(self, tmp_path):
        assert run("gmf-srdf", CONFIGS / "exp_field_srdf.yaml", tmp_path) == 0
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["delta_min"] == pytest.approx(0.2786524795553, abs=1e-9)
        assert summary["delta_max"] == pytest.approx(1.0, abs=1e-9)

    def test_bayes_matches_golden(self, tmp_path):
        assert run("usrdf-bayes", CONFIGS / "corr_family_bayes.yaml", tmp_path) == 0
        got = (tmp_path / "curve.csv").read_bytes()
        assert got == (GOLDEN / "corr_family_bayes_curve.csv").read_bytes()
        assert (tmp_path / "allocation.csv").exists()

    def test_nonbayes_matches_golden(self, tmp_path):
        assert run("usrdf-nonbayes", CONFIGS / "corr_family_nonbayes.yaml", tmp_path) == 0
        got = (tmp_path / "curve.csv").read_bytes()
        assert got == (GOLDEN / "corr_family_nonbayes_curve.csv").read_bytes()

    def test_optimize_set_outputs(self, tmp_path):
        assert run("optimize-set", CONFIGS / "subset_search.yaml", tmp_path) == 0
        lines = (tmp_path / "table.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "subset,delta_min,rate_bits"
        assert len(lines) == 7  # header + C(4,2)
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        assert summary["best_subset"] == [2, 3]

    def test_place_outputs(self, tmp_path):
        assert run("place", CONFIGS / "exp_field_place.yaml", tmp_path) == 0
        summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
        pts = summary["points"]
        assert pts[0] == 0.0 and pts[-1] == 1.0
        assert pts[1] == pytest.approx(0.5, abs=1e-2)

    def test_simulate_outputs(self, tmp_path):
        assert run("simulate", CONFIGS / "two_step_sim.yaml", tmp_path) == 0
        payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        rep = payload["report"]
        assert rep["kind"] == "fixed"
        assert rep["eval_blocks"] == 5000
        assert rep["total_mse"]["mean"] > rep["delta_min"]

    def test_usim_outputs(self, tmp_path):
        assert run("usim", CONFIGS / "corr_family_usim.yaml", tmp_path) == 0
        payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        rep = payload["report"]
        assert rep["kind"] == "universal"
        assert 0.0 <= rep["estimator_hit_rate"] <= 1.0
        assert rep["grid_size"] == 1

    def test_seed_override_recorded(self, tmp_path):
        assert run("simulate", CONFIGS / "two_step_sim.yaml", tmp_path, ("--seed", "99")) == 0
        payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        assert payload["seed"] == 99
        assert payload["report"]["seed"] == 99


class TestDeterminism:
    @pytest.mark.parametrize(
        "task,config",
        [
            ("srdf", "three_component_srdf.yaml"),
            ("usrdf-bayes", "corr_family_bayes.yaml"),
            ("simulate", "two_step_sim.yaml"),
            ("usim", "corr_family_usim.yaml"),
        ],
    )
    def test_reruns_are_byte_identical(self, tmp_path, task, config):
        d1, d2 = tmp_path / "r1", tmp_path / "r2"
        assert run(task, CONFIGS / config, d1) == 0
        assert run(task, CONFIGS / config, d2) == 0
        files1 = sorted(p.name for p in d1.iterdir())
        files2 = sorted(p.name for p in d2.iterdir())
        assert files1 == files2 and files1
        for name in files1:
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


class TestExitCodes:
    def test_missing_config_is_validation(self, tmp_path, capsys):
        assert run("srdf", tmp_path / "nope.yaml", tmp_path) == 2
        assert "cli.config_parse" in capsys.readouterr().err

    def test_bad_model_is_validation(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text(
            "model:\n  sigma: [[1.0, 2.0], [2.0, 1.0]]\nsampling: [1]\ngrid: {min: 1.0, max: 2.0, count: 3}\n",
            encoding="utf-8",
        )
        assert run("srdf", cfg, tmp_path) == 2
        assert "model.not_positive_definite" in capsys.readouterr().err

    def test_infeasible_grid_is_validation(self, tmp_path):
        cfg = tmp_path / "low.yaml"
        cfg.write_text(
            "model:\n  sigma: [[1.0, 0.5], [0.5, 1.0]]\nsampling: [1]\ngrid: {min: 0.1, max: 0.5, count: 3}\n",
            encoding="utf-8",
        )
        assert run("srdf", cfg, tmp_path) == 2

    def test_under_resolved_quadrature_is_numerical(self, tmp_path, capsys):
        cfg = tmp_path / "rough.yaml"
        cfg.write_text(
            "field:\n  kernel: {type: gauss-markov, p: 1.0e-6}\n  quad_points: 16\n"
            "points: [0.37]\ngrid: {min: 0.95, max: 0.99, count: 2}\n",
            encoding="utf-8",
        )
        assert run("gmf-srdf", cfg, tmp_path) == 3
        assert "field.quadrature_under_resolved" in capsys.readouterr().err

    def test_unknown_family_template(self, tmp_path):
        cfg = tmp_path / "fam.yaml"
        cfg.write_text(
            "family: {template: mystery}\nsampling: [1]\ngrid: {min: 1.0, max: 1.5, count: 2}\n",
            encoding="utf-8",
        )
        assert run("usrdf-bayes", cfg, tmp_path) == 2


class TestEntryPoint:
    def test_console_script(self, tmp_path):
        proc = subprocess.run(
            [
                "srdf-kit",
                "srdf",
                "--config",
                str(CONFIGS / "three_component_srdf.yaml"),
                "--out",
                str(tmp_path),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "curve.csv").exists()

    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "srdf_kit.cli",
                "srdf",
                "--config",
                str(CONFIGS / "three_component_srdf.yaml"),
                "--out",
                str(tmp_path),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
