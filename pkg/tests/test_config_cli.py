import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracthresh.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main
from fracthresh.config import (ConfigError, ConstantsConfig, ConvergeConfig, SimulateConfig,
                               apply_overrides, load_config)
from fracthresh.grid import load_field

pytestmark = pytest.mark.usefixtures("quiet")


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.05, 1.95).filter(lambda a: a != 1.0),
       points=st.sampled_from([32, 64, 128]), steps=st.integers(0, 50),
       radius=st.floats(0.1, 1.9), convention=st.sampled_from(["standard", "unnormalized"]))
def test_simulate_config_round_trip(alpha, points, steps, radius, convention):
    cfg = SimulateConfig.from_dict({"alpha": alpha, "points": points, "steps": steps,
                                    "convention": convention, "shape": {"radius": radius}})
    again = SimulateConfig.from_dict(json.loads(cfg.to_json()))
    assert again == cfg


def test_unknown_and_invalid_keys():
    with pytest.raises(ConfigError, match="unknown key"):
        load_config("simulate", overrides=["colour=1"])
    with pytest.raises(ConfigError, match="alpha"):
        load_config("simulate", overrides=["alpha=2.5"])
    with pytest.raises(ConfigError, match="points"):
        load_config("simulate", overrides=["points=100"])
    with pytest.raises(ConfigError, match="key=value"):
        apply_overrides({}, ["oops"])
    with pytest.raises(ConfigError, match="critical"):
        ConstantsConfig.from_dict({"alphas": [1.0], "regime": "mcf"})
    with pytest.raises(ConfigError, match="three rungs"):
        ConvergeConfig.from_dict({"h_ladder": [0.1, 0.05]})


def test_file_then_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"alpha": 0.5, "shape": {"radius": 1.5}}))
    cfg = load_config("simulate", str(path), ["shape.radius=0.75", "steps=3"])
    assert (cfg.alpha, cfg.steps, cfg.shape.radius, cfg.shape.kind) == (0.5, 3, 0.75, "disk")
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config("simulate", str(path))


def test_exit_codes(tmp_path, capsys):
    assert main(["simulate", "--set", "alpha=2.5"]) == EXIT_CONFIG
    assert main(["constants", "--set", "alphas=[1.0]", "--set", "regime=\"mcf\""]) == EXIT_CONFIG
    assert main(["simulate", "--threads", "0"]) == EXIT_CONFIG
    # the kernel is narrower than two cells: a numerical refusal, not a config error
    assert main(["simulate", "--out", str(tmp_path / "r"), "--set", "points=128",
                 "--set", "h=0.0001"]) == EXIT_FAIL
    assert "at least" in capsys.readouterr().err


def test_emit_config(capsys):
    assert main(["converge", "--emit-config", "--set", "alpha=0.5"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["alpha"] == 0.5 and data["h_ladder"] == [0.04, 0.01, 0.0025]


def test_simulate_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--out", str(out), "--set", "points=128", "--set", "h=0.04",
                 "--set", "steps=4", "--set", "alpha=1.5"]) == EXIT_OK
    man = json.loads((out / "manifest.json").read_text())
    assert man["steps_taken"] == 4 and len(man["fields"]) == 5
    assert man["times"] == pytest.approx([0.0, 0.04, 0.08, 0.12, 0.16])
    first = load_field(str(out / man["fields"][0]))
    assert first.grid.points == 128 and set(np.unique(first.values)) == {-1, 1}
    assert np.count_nonzero(first.values > 0) * first.grid.cell_volume == pytest.approx(man["volumes"][0])
    assert len(man["fronts"]) == 5 and all((out / f).exists() for f in man["fronts"])


def test_constants_command(tmp_path):
    assert main(["constants", "--out", str(tmp_path), "--set", "alphas=[1.0, 1.5]"]) == EXIT_OK
    rows = list(csv.DictReader((tmp_path / "constants.csv").open()))
    assert [r["regime"] for r in rows] == ["critical", "mcf"]
    assert float(rows[0]["C_alpha"]) == pytest.approx(0.5, abs=1e-3)


def test_converge_command(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "conv"
    code = main(["converge", "--out", str(out), "--plot", "--threads", "2",
                 "--set", "h_ladder=[0.16, 0.08, 0.04]", "--set", "write_fronts=true"])
    assert code == EXIT_OK
    for name in ("convergence.csv", "convergence.txt", "convergence.json", "radius.png", "error.png"):
        assert (out / name).exists()
    assert len(json.loads((out / "convergence.json").read_text())["rows"]) == 3
    assert any((out / "fronts").iterdir())


def test_converge_reports_failed_rung(tmp_path):
    code = main(["converge", "--out", str(tmp_path), "--set", "h_ladder=[0.16, 0.08, 0.0025]",
                 "--set", "max_points=128"])
    assert code == EXIT_FAIL
    assert "failed" in (tmp_path / "convergence.csv").read_text()


def test_validate_command(tmp_path):
    small = ["--set", "points=256", "--set", "lemma=false",
             "--set", "small_time_points=256"]
    assert main(["validate", "--out", str(tmp_path)] + small) == EXIT_OK
    rep = json.loads((tmp_path / "validation.json").read_text())
    assert rep["pass"] and len(rep["checks"]) == 3 * 2 + 1 + 1
    assert main(["validate"] + small + ["--set", "constant_tolerance=0"]) == EXIT_FAIL


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fracthresh", "simulate", "--set", "alpha=7"],
                         capture_output=True, text=True)
    assert out.returncode == EXIT_CONFIG and "alpha" in out.stderr
