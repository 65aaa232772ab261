"""Tests for the console script."""

import json

import pandas as pd
import pytest
from typer.testing import CliRunner

from sgflow import __version__
from sgflow.cli import app
from sgflow.constants import NoiseCol, PicardCol, TrajCol, VerifyCol
from sgflow.presets import list_presets, load_config

runner = CliRunner()


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert f"SGFLOW version: {__version__}" in result.output


def test_presets_listing():
    result = runner.invoke(app, ["presets"])
    assert result.exit_code == 0
    for name in list_presets():
        assert name in result.output


def test_presets_write(tmp_path):
    out = tmp_path / "msf.toml"
    result = runner.invoke(app, ["presets", "msf_1d", "--out", str(out)])
    assert result.exit_code == 0
    assert load_config(str(out)).name == "msf_1d"
    assert runner.invoke(app, ["presets", "nope"]).exit_code == 2


def test_simulate(tmp_path):
    result = runner.invoke(
        app,
        ["simulate", "-p", "curveshort_1d", "--horizon", "0.01", "-o", str(tmp_path), "--states"],
    )
    assert result.exit_code == 0, result.output
    table = pd.read_csv(tmp_path / "trajectory.csv")
    assert list(table.columns) == TrajCol.cols
    assert len(table) == 11
    assert (tmp_path / "states.bin").read_bytes()[:4] == b"SGFL"
    with open(tmp_path / "manifest.json") as f:
        manifest = json.load(f)
    assert manifest["command"] == "simulate"
    assert manifest["preset"]["name"] == "curveshort_1d"


@pytest.mark.parametrize(
    "args",
    [
        ["simulate", "-p", "nope"],
        ["simulate", "-p", "curveshort_1d", "--dt", "0.003"],
        ["simulate", "-p", "plasma_2d", "--variant", "multiplicative"],
    ],
)
def test_config_errors_exit_2(tmp_path, args):
    result = runner.invoke(app, args + ["-o", str(tmp_path)])
    assert result.exit_code == 2
    assert not (tmp_path / "manifest.json").exists()


def test_picard(tmp_path):
    result = runner.invoke(
        app, ["picard", "-p", "curveshort_1d", "--horizon", "0.005", "-o", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    log = pd.read_csv(tmp_path / "picard_log.csv")
    assert list(log.columns) == PicardCol.cols


def test_dump_noise(tmp_path):
    result = runner.invoke(
        app, ["dump-noise", "-p", "tvflow_1d", "--horizon", "0.01", "-s", "4", "-o", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    noise = pd.read_csv(tmp_path / "noise.csv")
    assert list(noise.columns) == NoiseCol.cols
    with open(tmp_path / "manifest.json") as f:
        assert json.load(f)["master_seed"] == 4


def test_verify(tmp_path):
    result = runner.invoke(app, ["verify", "--suite", "resolvent", "-o", str(tmp_path)])
    assert result.exit_code == 0, result.output
    table = pd.read_csv(tmp_path / "verify.csv")
    assert list(table.columns) == VerifyCol.cols
    assert runner.invoke(app, ["verify", "--suite", "nope"]).exit_code == 2
