import json
import os

import pytest
from click.testing import CliRunner

from corrsel.cli import cli

SELECT = {
    "kind": "select",
    "trials": 20,
    "model": {"m": 4},
    "budgets": {"s": [2]},
    "methods": ["greedy"],
}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.mark.parametrize(
    "document",
    [
        {"kind": "select", "model": {"m": 4, "colour": "blue"}},
        {"kind": "select", "budgets": {"s": [30]}},
        {"kind": "select", "model": {"m": 40}, "methods": ["exhaustive"]},
        {"kind": "schedule"},
        {"kind": "sweep"},
    ],
)
def test_invalid_configuration_exits_with_2(runner, config_file, document):
    result = runner.invoke(cli, ["select", "--config", config_file(document)])
    assert result.exit_code == 2
    assert "Invalid configuration" in result.output


def test_unreadable_configuration_exits_with_2(runner, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    result = runner.invoke(cli, ["select", "--config", str(broken)])
    assert result.exit_code == 2
    missing = runner.invoke(cli, ["track", "--config", str(tmp_path / "missing.json")])
    assert missing.exit_code == 2


def test_config_is_required(runner):
    assert runner.invoke(cli, ["verify"]).exit_code == 2


def test_select(runner, config_file, tmp_path):
    out = os.path.join(tmp_path, "select.csv")
    result = runner.invoke(
        cli, ["select", "--config", config_file(SELECT), "--seed", "7", "--out", out]
    )
    assert result.exit_code == 0, result.output
    assert out in result.output
    with open(out) as f:
        lines = f.read().splitlines()
    assert lines[1] == "# seed: 7"
    assert lines[3] == "method,s,objective,empirical_mse,wall_time"


def test_output_path_from_config(runner, config_file, tmp_path):
    out = os.path.join(tmp_path, "from_config.csv")
    document = {**SELECT, "output": {"path": out}}
    result = runner.invoke(cli, ["select", "--config", config_file(document)])
    assert result.exit_code == 0, result.output
    assert os.path.isfile(out)


def test_track_writes_snapshots(runner, config_file, tmp_path):
    document = {
        "kind": "track",
        "trials": 1,
        "tracking": {"m": 4, "steps": 2, "snapshot_steps": [1]},
        "budgets": {"tau": 2, "s_i": [1]},
        "methods": ["all-on"],
    }
    out = os.path.join(tmp_path, "track.csv")
    result = runner.invoke(cli, ["track", "--config", config_file(document), "--out", out])
    assert result.exit_code == 0, result.output
    assert os.path.isfile(out)
    assert os.path.isfile(os.path.join(tmp_path, "track.snapshots.csv"))


def test_verify(runner, config_file, tmp_path):
    document = {"kind": "verify", "verify": {"checks": [1], "formula_instances": 5}}
    out = os.path.join(tmp_path, "verify.json")
    result = runner.invoke(cli, ["verify", "--config", config_file(document), "--out", out])
    assert result.exit_code == 0, result.output
    assert "formula_equivalence" in result.output
    assert "pass" in result.output
    with open(out) as f:
        assert json.load(f)["passed"] is True


def test_same_seed_gives_identical_files(runner, config_file, tmp_path):
    document = {
        **SELECT,
        "methods": ["greedy", "random-baseline"],
        "output": {"record_wall_time": False},
    }
    path = config_file(document)
    contents = []
    for name in ("first.csv", "second.csv"):
        out = os.path.join(tmp_path, name)
        result = runner.invoke(cli, ["select", "--config", path, "--seed", "3", "--out", out])
        assert result.exit_code == 0, result.output
        with open(out, "rb") as f:
            contents.append(f.read())
    assert contents[0] == contents[1]
