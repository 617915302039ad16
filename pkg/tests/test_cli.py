import json
import os
import subprocess
import sys

import pytest

from calab.cli import CATALOG, main, validate_config
from calab.errors import ConfigError
from conftest import CONFIG_DIR


def run_cli(args):
    return subprocess.run(
        [sys.executable, "-m", "calab.cli", *args], capture_output=True, text=True
    )


def manifest_without_walltime(path):
    with open(path) as fh:
        manifest = json.load(fh)
    manifest.pop("wall_time_s")
    return manifest


def test_list_is_stable_and_sorted():
    first = run_cli(["list"])
    second = run_cli(["list"])
    assert first.returncode == 0
    assert first.stdout == second.stdout
    kinds = [line.split(" - ")[0] for line in first.stdout.strip().splitlines()]
    assert kinds == sorted(kinds)
    assert "packing" in kinds and "spin-check" in kinds
    for line in first.stdout.strip().splitlines():
        assert " - " in line and line.split(" - ")[1].strip()


def test_validate_accepts_bundled_configs():
    for name in sorted(os.listdir(CONFIG_DIR)):
        result = run_cli(["validate", os.path.join(CONFIG_DIR, name)])
        assert result.returncode == 0, f"{name}: {result.stderr}"


def test_unknown_fields_rejected():
    with pytest.raises(ConfigError):
        validate_config({"experiment": "packing", "m": 2, "delta": 0.1, "n": 6, "bogus": 1})
    with pytest.raises(ConfigError):
        validate_config({"experiment": "nope"})
    with pytest.raises(ConfigError):
        validate_config({"experiment": "packing", "m": "two", "delta": 0.1, "n": 6})


def test_malformed_config_exits_2_writes_nothing(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"experiment": "packing", "m": 2}')
    out = tmp_path / "out"
    result = run_cli(["--out", str(out), "run", str(bad)])
    assert result.returncode == 2
    assert not out.exists()

    not_json = tmp_path / "nj.json"
    not_json.write_text("{{{{")
    assert run_cli(["--out", str(out), "run", str(not_json)]).returncode == 2
    assert not out.exists()


def test_guard_violation_exits_3(tmp_path):
    cfg = tmp_path / "guard.json"
    cfg.write_text(json.dumps({"experiment": "packing", "m": 2, "delta": 0.4, "n": 6}))
    result = run_cli(["--out", str(tmp_path / "o"), "run", str(cfg)])
    assert result.returncode == 3


def test_run_writes_manifest_and_tables(tmp_path):
    out = tmp_path / "run1"
    result = run_cli(
        ["--quiet", "--out", str(out), "run", os.path.join(CONFIG_DIR, "packing_grid.json")]
    )
    assert result.returncode == 0, result.stderr
    manifest = manifest_without_walltime(out / "manifest.json")
    assert manifest["tool_version"]
    assert manifest["config"]["experiment"] == "packing"
    assert manifest["provenance"]["seed_echoed_unused"] == 0
    table = (out / manifest["tables"]["packing"]).read_text()
    header = table.splitlines()[0]
    assert header == "m,n,delta,size,hamming_floor,ball_volume,bound_rhs,stirling_rhs,verified"


@pytest.mark.parametrize(
    "config_name",
    [
        "subshift_golden.json",
        "rc_upper_linf2.json",
        "rc_lower_l1basis.json",
        "perm_classify_blocks.json",
        "l1_witness_basis_orbit.json",
    ],
)
def test_reruns_are_identical(config_name, tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = os.path.join(CONFIG_DIR, config_name)
    assert run_cli(["--quiet", "--out", str(out1), "run", cfg]).returncode == 0
    assert run_cli(["--quiet", "--out", str(out2), "run", cfg]).returncode == 0
    assert manifest_without_walltime(out1 / "manifest.json") == manifest_without_walltime(
        out2 / "manifest.json"
    )
    for name in os.listdir(out1):
        if name.endswith(".csv"):
            assert (out1 / name).read_text() == (out2 / name).read_text()


def test_classifier_config_verdicts(tmp_path):
    out = tmp_path / "cls"
    cfg = os.path.join(CONFIG_DIR, "perm_classify_shift.json")
    assert run_cli(["--quiet", "--out", str(out), "run", cfg]).returncode == 0
    manifest = manifest_without_walltime(out / "manifest.json")
    assert manifest["outputs"]["linfty"]["verdict"] == "infinite"
    assert manifest["outputs"]["ell1"]["verdict"] == "infinite"


def test_growth_csv_columns(tmp_path):
    out = tmp_path / "g"
    cfg = os.path.join(CONFIG_DIR, "hc_growth_shift.json")
    assert run_cli(["--quiet", "--out", str(out), "run", cfg]).returncode == 0
    table = (out / "growth.csv").read_text().splitlines()
    assert table[0] == "n,bound,normalized,mode,delta,a"


def test_main_entrypoint_in_process(tmp_path, capsys):
    assert main(["list"]) == 0
    captured = capsys.readouterr()
    assert "subshift-entropy" in captured.out
    assert main(["validate", os.path.join(CONFIG_DIR, "spin_check.json")]) == 0
    assert main(["--threads", "0", "list"]) == 2
