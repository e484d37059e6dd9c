import json
import subprocess
import sys

import numpy as np
import pytest

from collodyn.cli import main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheckCommand:
    def test_satellite_flags_non_integrable(self, capsys):
        code, out, _ = run_cli(["check", "--model", "satellite"], capsys)
        assert code == 2
        doc = json.loads(out)
        assert doc["verdicts"] == ["integrable", "non_integrable"]

    def test_pcc2_passes(self, capsys):
        code, out, _ = run_cli(["check", "--model", "pcc2"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert all(v == "integrable" for v in doc["verdicts"])

    def test_constant_fixture_via_volumetric_style_model(self, capsys):
        # spring2r over an explicit box
        code, out, _ = run_cli(
            ["check", "--model", "spring2r", "--box", "0.1..3.0", "--tol", "1e-4"],
            capsys,
        )
        assert code == 0

    def test_unknown_model(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["check", "--model", "bogus"], capsys)
        assert exc.value.code == 64

    def test_reports_are_byte_identical_across_runs(self, capsys):
        _, out1, _ = run_cli(["check", "--model", "pcc2", "--seed", "3"], capsys)
        _, out2, _ = run_cli(["check", "--model", "pcc2", "--seed", "3"], capsys)
        assert out1 == out2


class TestChartCommand:
    def test_pcc_residuals(self, capsys):
        code, out, _ = run_cli(
            ["chart", "--model", "pcc2", "--q0", "0.8,0.3,0.0,0.6,-0.5,0.0",
             "--rows", "0,1,2"],
            capsys,
        )
        assert code == 0
        doc = json.loads(out)
        chart = doc["charts"][0]
        assert chart["decoupling_residual"] < 1e-9
        assert chart["power_invariance_residual"] < 1e-9

    def test_finger_lists_two_charts(self, capsys):
        code, out, _ = run_cli(["chart", "--model", "finger", "--q0", "0.8"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert len(doc["charts"]) == 2
        assert [c["columns"] for c in doc["charts"]] == [[0], [1]]

    def test_satellite_not_collocated(self, capsys):
        code, out, _ = run_cli(
            ["chart", "--model", "satellite", "--q0", "1.2,0.1"], capsys
        )
        assert code == 2
        doc = json.loads(out)
        assert doc["error"] == "NotCollocated"


class TestSimulateCommand:
    def _base_config(self, tmp_path, **over):
        conf = {
            "schema": 1,
            "model": {"name": "spring2r", "params": {"gravity": 2.0, "viscous": 1.0}},
            "controller": {
                "name": "p_sat_i_d",
                "gains": {
                    "K_P": (800 * np.eye(2)).tolist(),
                    "K_D": (100 * np.eye(2)).tolist(),
                    "K_I": (4000 * np.eye(2)).tolist(),
                },
            },
            "chart": {"q0": [0.7, 0.4]},
            "schedule": {
                "kind": "theta",
                "times": [0.0, 2.0],
                "values": [[0.3081, 0.6172], [0.28, 0.65]],
            },
            "initial_state": {"q": [0.7, 0.4]},
            "integrator": {"dt": 1e-3, "t_final": 4.0},
            "output": {"basename": "run"},
            "seed": 0,
        }
        conf.update(over)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(conf))
        return path

    def test_regulation_run_artifacts(self, tmp_path, capsys):
        path = self._base_config(tmp_path)
        code, out, _ = run_cli(
            ["simulate", "--config", str(path), "--out", str(tmp_path)], capsys
        )
        assert code == 0
        summary = json.loads((tmp_path / "run.summary.json").read_text())
        assert not summary["failed"]
        assert summary["window_errors"][-1]["theta_error"] < 1e-3
        assert "min_tension" in summary
        meta = json.loads((tmp_path / "run.meta.json").read_text())
        assert meta["schema"] == 1
        assert (tmp_path / "run.csv").exists()

    def test_zero_input_run_conserves(self, tmp_path, capsys):
        conf = {
            "schema": 1,
            "model": {"name": "satellite"},
            "controller": {"name": "none"},
            "schedule": {"kind": "theta", "times": [0.0], "values": [[0.0, 0.0]]},
            "initial_state": {"q": [1.0, 0.0], "qdot": [0.0, 0.3]},
            "integrator": {"dt": 1e-3, "t_final": 2.0},
            "output": {"basename": "free"},
        }
        path = tmp_path / "c.json"
        path.write_text(json.dumps(conf))
        code, out, _ = run_cli(
            ["simulate", "--config", str(path), "--out", str(tmp_path)], capsys
        )
        assert code == 0
        summary = json.loads((tmp_path / "free.summary.json").read_text())
        assert summary["energy_residual"] < 1e-9

    def test_byte_stable_csv(self, tmp_path, capsys):
        path = self._base_config(tmp_path)
        run_cli(["simulate", "--config", str(path), "--out", str(tmp_path / "a")], capsys)
        run_cli(["simulate", "--config", str(path), "--out", str(tmp_path / "b")], capsys)
        assert (tmp_path / "a" / "run.csv").read_bytes() == (
            tmp_path / "b" / "run.csv"
        ).read_bytes()

    def test_env_var_output_dir(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("COLLODYN_OUT_DIR", str(tmp_path / "envdir"))
        path = self._base_config(tmp_path)
        code, _, _ = run_cli(["simulate", "--config", str(path)], capsys)
        assert code == 0
        assert (tmp_path / "envdir" / "run.csv").exists()

    def test_backbone_emission(self, tmp_path, capsys):
        conf = {
            "schema": 1,
            "model": {"name": "pcc2"},
            "controller": {"name": "none"},
            "schedule": {"kind": "theta", "times": [0.0], "values": [[0, 0, 0]]},
            "initial_state": {"q": [0.6, 0.3, 0.01, -0.4, 1.0, 0.0]},
            "integrator": {"dt": 1e-3, "t_final": 0.2},
            "output": {"basename": "bb", "backbone": True, "backbone_every": 50},
        }
        path = tmp_path / "c.json"
        path.write_text(json.dumps(conf))
        code, _, _ = run_cli(
            ["simulate", "--config", str(path), "--out", str(tmp_path)], capsys
        )
        assert code == 0
        lines = (tmp_path / "bb.backbone.csv").read_text().strip().splitlines()
        assert lines[0] == "t,point,x,y,z"
        assert len(lines) > 100

    def test_console_script_installed(self):
        proc = subprocess.run(
            [sys.executable, "-m", "collodyn.cli", "check", "--model", "satellite"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
        assert json.loads(proc.stdout)["verdicts"][1] == "non_integrable"
