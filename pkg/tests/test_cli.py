import json
import math

import numpy as np
import pytest

from debranges.cli import main


def write_space(tmp_path, name="space.json", **payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestKernelCommand:
    def test_discrete_sine_csv_49_rows(self, capsys):
        code, out, _ = run(capsys, ["kernel", "--family", "discrete-sine", "--b", "1.0471975512", "--grid", "-3..3"])
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x,y,K"
        assert len(lines) == 50

    def test_bessel_comma_grid_9_rows(self, capsys):
        code, out, _ = run(capsys, ["kernel", "--family", "bessel", "--s", "0.5", "--grid", "0.1,1,2"])
        assert code == 0
        assert len(out.strip().splitlines()) == 10

    def test_band_validation_exit_2(self, capsys):
        code, _, err = run(capsys, ["kernel", "--family", "discrete-sine", "--b", "2.0", "--grid", "-3..3"])
        assert code == 2
        assert "pi/2" in err

    def test_wide_band_override(self, capsys):
        code, out, _ = run(
            capsys,
            ["kernel", "--family", "discrete-sine", "--b", "2.0", "--grid", "0..1", "--allow-wide-b"],
        )
        assert code == 0

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "grid.csv"
        code, out, _ = run(
            capsys,
            ["kernel", "--family", "continuous-sine", "--b", "1.0", "--grid", "0:1:3", "--out", str(target)],
        )
        assert code == 0
        assert out == ""
        assert target.read_text().startswith("x,y,K")


class TestFactorizeCommand:
    def test_bessel_passes(self, capsys):
        code, out, _ = run(capsys, ["factorize", "--family", "bessel", "--s", "0.5"])
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["pass"] is True
        assert doc["result"]["parameters"]["c"] == pytest.approx(1.0 / math.pi**2, rel=1e-9)

    def test_continuous_sine_passes_with_unit_constant(self, capsys):
        code, out, _ = run(capsys, ["factorize", "--family", "continuous-sine", "--b", "3.1415926536"])
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["parameters"]["c"] == 1.0

    def test_bad_order_exit_2(self, capsys):
        code, _, err = run(capsys, ["factorize", "--family", "bessel", "--s", "-2"])
        assert code == 2


class TestPipelineCommand:
    def test_three_point_space(self, capsys, tmp_path):
        path = write_space(tmp_path, points=[-1.0, 0.0, 1.0], weights=[1.0, 1.0, 1.0], n=2)
        code, out, _ = run(capsys, ["pipeline", "--space", path])
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["pass"] is True
        assert doc["result"]["dimD"] == 1
        assert len(doc["result"]["S"]) == 1

    def test_random_space(self, capsys, tmp_path):
        rng = np.random.default_rng(0)
        pts = np.sort(np.linspace(-2, 2, 12) + rng.uniform(-0.05, 0.05, 12))
        path = write_space(tmp_path, points=pts.tolist(), weights=np.ones(12).tolist(), n=6)
        code, out, _ = run(capsys, ["pipeline", "--space", path])
        assert code == 0

    def test_non_division_basis_exit_1(self, capsys, tmp_path):
        pts = [-1.0, 0.0, 1.0, 2.0]
        basis = [[1.0, 1.0, 1.0, 1.0], [p * p for p in pts]]
        path = write_space(tmp_path, points=pts, weights=[1.0] * 4, basis=basis)
        code, out, _ = run(capsys, ["pipeline", "--space", path])
        assert code == 1
        doc = json.loads(out)
        assert doc["result"]["pass"] is False
        assert doc["result"]["failed_stage"] == "division_check"


class TestGaugeCommand:
    def test_two_thetas(self, capsys, tmp_path):
        path = write_space(tmp_path, points=[-1.5, -0.5, 0.5, 1.5, 2.5], weights=[1.0] * 5, n=3)
        code, out, _ = run(capsys, ["gauge", "--space", path, "--theta1", "0", "--theta2", "1"])
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["pass"] is True


class TestDppCommand:
    def test_small_run_passes(self, capsys):
        code, out, _ = run(
            capsys,
            ["dpp", "--family", "discrete-sine", "--b", "1.0471975512", "--N", "8", "--trials", "5000", "--seed", "7"],
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["pass"] is True
        assert abs(doc["result"]["estimate"] - doc["result"]["determinant"]) <= 3 * doc["result"]["stderr"]

    def test_trials_minimum_exit_2(self, capsys):
        code, _, err = run(
            capsys, ["dpp", "--family", "discrete-sine", "--b", "1.0471975512", "--N", "5", "--trials", "10"]
        )
        assert code == 2

    def test_single_site_intensity(self, capsys):
        code, out, _ = run(
            capsys,
            ["dpp", "--family", "discrete-sine", "--b", "1.0471975512", "--N", "0", "--trials", "10000", "--seed", "3"],
        )
        assert code == 0
        doc = json.loads(out)
        freq = doc["result"]["intensity"]["frequency"][0]
        assert freq == pytest.approx(1.0 / 3.0, abs=0.02)

    def test_samples_out_jsonl(self, capsys, tmp_path):
        target = tmp_path / "samples.jsonl"
        code, _, _ = run(
            capsys,
            [
                "dpp", "--family", "discrete-sine", "--b", "1.0471975512", "--N", "3",
                "--trials", "1000", "--seed", "2", "--samples-out", str(target), "--emit-samples", "5",
            ],
        )
        assert code == 0
        lines = target.read_text().strip().splitlines()
        assert len(lines) == 5
        first = json.loads(lines[0])
        assert set(first) == {"seed", "points"}


class TestNormalityCommand:
    def test_n5(self, capsys):
        code, out, _ = run(capsys, ["normality", "--n", "5"])
        assert code == 0
        doc = json.loads(out)
        assert doc["result"]["norm_ratio"] == pytest.approx(4.0, abs=1e-6)
        assert doc["result"]["pointwise_ratio_bound"] <= 1.0 + 1e-12

    def test_bad_n(self, capsys):
        code, _, _ = run(capsys, ["normality", "--n", "1"])
        assert code == 2


class TestConfigAndDeterminism:
    def test_config_file(self, capsys, tmp_path):
        conf = tmp_path / "run.json"
        conf.write_text(json.dumps({"command": "normality", "n": 3}))
        code, out, _ = run(capsys, ["--config", str(conf)])
        assert code == 0
        assert json.loads(out)["result"]["norm_ratio"] == pytest.approx(2.0, abs=1e-6)

    def test_byte_identical_reports(self, capsys):
        argv = ["dpp", "--family", "discrete-sine", "--b", "1.0471975512", "--N", "4", "--trials", "2000", "--seed", "5"]
        _, out1, _ = run(capsys, argv)
        _, out2, _ = run(capsys, argv)
        assert out1 == out2

    def test_version_embedded(self, capsys):
        _, out, _ = run(capsys, ["normality", "--n", "2"])
        doc = json.loads(out)
        assert doc["tool"] == "debranges"
        assert "version" in doc

    def test_no_command_prints_help(self, capsys):
        code, out, _ = run(capsys, [])
        assert code == 2
