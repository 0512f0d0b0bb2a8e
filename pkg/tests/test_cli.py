import csv
import io
import json

import pytest
from click.testing import CliRunner

from gcnnvc.cli import main
from gcnnvc.config import RunConfig, SpecError


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def minimal(tmp_path):
    path = tmp_path / "minimal.json"
    path.write_text(json.dumps({"gcnn": {"k": 1, "widths": [1, 1], "r": 2}}))
    return path


def invoke(runner, *args):
    return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)


def test_bounds_minimal(runner, minimal):
    res = invoke(runner, "bounds", "--spec", minimal, "--no-timestamp")
    assert res.exit_code == 0
    report = json.loads(res.output)
    assert report["rng"] == "numpy.random.PCG64"
    assert report["result"]["ub_gcnn_theorem"] == pytest.approx(45.5416, abs=1e-4)
    assert report["result"]["vc_upper_by_search"] == 36
    assert "timestamp" not in report


def test_bounds_csv_columns(runner, minimal):
    res = invoke(runner, "bounds", "--spec", minimal, "--format", "csv", "--constant", "c=0.5")
    rows = list(csv.reader(io.StringIO(res.output)))
    assert rows[0][:3] == ["k", "widths", "r"]
    assert rows[1][:3] == ["1", "1;1", "2"]


def test_shatter_cyclic8(runner):
    res = invoke(runner, "shatter", "--group", "cyclic:8", "--no-timestamp")
    assert res.exit_code == 0
    result = json.loads(res.output)["result"]
    assert result["m"] == 3 and result["success"]


def test_shatter_fault_exits_1(runner, tmp_path):
    saved = tmp_path / "inst.json"
    invoke(runner, "shatter", "--group", "cyclic:4", "--save-instance", saved)
    doc = json.loads(saved.read_text())
    doc["classifiers"][3]["threshold"] = 100.0
    saved.write_text(json.dumps(doc))
    res = invoke(runner, "shatter", "--load-instance", saved)
    assert res.exit_code == 1
    assert json.loads(res.output)["result"]["failed_labelings"] == [3]


def test_missing_file_exit_2(runner, tmp_path):
    res = invoke(runner, "bounds", "--spec", tmp_path / "absent.json")
    assert res.exit_code == 2
    assert not res.stdout


@pytest.mark.parametrize(
    "body, fragment",
    [('{"gcnn": {"k": 1,\n "widths": [1, 1],', "line 2"),
     ('{"gcnn": {"k": 1, "widths": [1, 0], "r": 2}}', "gcnn.widths[1]"),
     ('{"gcnn": {"k": 1, "widths": [1, 1]}}', "needs either group or r"),
     ('{"gcnn": {"k": 1, "widths": [1, 1], "r": 2, "depth": 3}}', "unknown fields")],
)
def test_malformed_spec_exit_2(runner, tmp_path, body, fragment):
    path = tmp_path / "bad.json"
    path.write_text(body)
    res = invoke(runner, "bounds", "--spec", path)
    assert res.exit_code == 2
    assert fragment in res.stderr
    assert not res.stdout


def test_invariance_and_lift_commands(runner, tmp_path):
    path = tmp_path / "d4.json"
    path.write_text(json.dumps({"gcnn": {"k": 2, "widths": [2, 3, 1], "group": "dihedral:4"},
                                "params": {"seed": 3, "scale": 0.5}}))
    for cmd in ("invariance", "lift-check"):
        res = invoke(runner, cmd, "--spec", path, "--trials", 20, "--no-timestamp")
        assert res.exit_code == 0, res.output
        assert json.loads(res.output)["result"]["passed"]


def test_invariance_on_grid_is_usage_error(runner, tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps({"gcnn": {"k": 1, "widths": [1, 1], "group": "grid:3x3"}}))
    assert invoke(runner, "invariance", "--spec", path).exit_code == 2


def test_same_seed_same_bytes_and_replay(runner, tmp_path):
    path = tmp_path / "z6.json"
    path.write_text(json.dumps({"gcnn": {"k": 2, "widths": [1, 2, 1], "group": "cyclic:6"}}))
    out = tmp_path / "report.json"
    first = invoke(runner, "invariance", "--spec", path, "--seed", 11, "--no-timestamp", "--out", out)
    assert first.exit_code == 0
    a = out.read_bytes()
    invoke(runner, "invariance", "--spec", path, "--seed", 11, "--no-timestamp", "--out", out)
    assert out.read_bytes() == a
    replayed = invoke(runner, "replay", out)
    assert replayed.exit_code == 0 and json.loads(replayed.output)["identical"]


def test_replay_detects_tampering(runner, tmp_path, minimal):
    out = tmp_path / "report.json"
    invoke(runner, "bounds", "--spec", minimal, "--out", out)
    doc = json.loads(out.read_text())
    assert invoke(runner, "replay", out).exit_code == 0  # timestamps are ignored
    doc["result"]["vc_upper_by_search"] = 35
    out.write_text(json.dumps(doc))
    assert invoke(runner, "replay", out).exit_code == 1


def test_run_config_file(runner, tmp_path, minimal):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "bounds", "spec_path": str(minimal), "output_format": "csv"}))
    res = invoke(runner, "run", cfg, "--no-timestamp")
    assert res.exit_code == 0 and res.output.startswith("k,widths")
    cfg.write_text(json.dumps({"command": "bounds", "spec_path": str(minimal), "colour": "red"}))
    res = invoke(runner, "run", cfg)
    assert res.exit_code == 2 and "colour" in res.stderr


def test_run_config_validation():
    with pytest.raises(SpecError):
        RunConfig("train")
    with pytest.raises(SpecError):
        RunConfig("bounds", seed=-1)
    with pytest.raises(SpecError):
        RunConfig("bounds", seed=2 ** 64)
    assert RunConfig("bounds", seed=2 ** 64 - 1).seed == 2 ** 64 - 1
