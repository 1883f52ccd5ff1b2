import configparser
import json
from importlib import resources

import pytest

from heisfrac.cli import SUBCOMMANDS, load_config, main

FAST = ["group-check", "kernel-check", "apply", "maximal", "cover"]


def default_config():
    return load_config(None)


def write_config(tmp_path, edits, name="run.ini"):
    cfg = default_config()
    for section, values in edits.items():
        for key, value in values.items():
            cfg[section][key] = str(value)
    path = tmp_path / name
    with open(path, "w") as fh:
        cfg.write(fh)
    return str(path)


def run(tmp_path, command, *extra, out="out"):
    target = tmp_path / out
    code = main([command, "--out", str(target), *extra])
    return code, target


def test_every_subcommand_has_a_config_section():
    cfg = default_config()
    for name in SUBCOMMANDS:
        assert cfg.has_section(name)


@pytest.mark.parametrize("command", FAST)
def test_default_runs_pass(tmp_path, command):
    code, out = run(tmp_path, command)
    assert code == 0
    csvs = sorted(out.glob("*.csv"))
    assert csvs
    for path in csvs:
        assert path.read_text().startswith("# verifies = ")
    assert not (out / "failure.json").exists()


@pytest.mark.parametrize("command", FAST)
def test_byte_identical_reruns(tmp_path, command):
    _, a = run(tmp_path, command, out="a")
    _, b = run(tmp_path, command, out="b")
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_group_check_residuals(tmp_path):
    _, out = run(tmp_path, "group-check")
    lines = (out / "group_check.csv").read_text().splitlines()
    assert lines[1] == "n,mu,associativity,identity,inverse"
    assert len(lines) == 2 + 9
    assert all(float(x) <= 1e-12 for line in lines[2:] for x in line.split(",")[2:])


def test_cover_three_cubes_selects_first(tmp_path):
    _, out = run(tmp_path, "cover")
    rows = (out / "cover.csv").read_text().splitlines()[2:]
    assert [r.split(",")[-1] for r in rows] == ["1", "0", "0"]


def test_cover_from_family_file(tmp_path):
    fam = tmp_path / "family.csv"
    fam.write_text("c0,c1,c2,h0,h1,h2\n0,0,0,1,1,1\n50,0,0,1,1,2\n")
    code, out = run(tmp_path, "cover", "--config", write_config(tmp_path, {"cover": {"family": str(fam)}}))
    assert code == 0
    rows = (out / "cover.csv").read_text().splitlines()[2:]
    assert [r.split(",")[2] for r in rows] == ["1", "0"]


def test_seed_changes_random_output(tmp_path):
    cfg = write_config(tmp_path, {"cover": {"family": "random", "families": 2}})
    _, a = run(tmp_path, "cover", "--config", cfg, "--seed", "1", out="a")
    _, b = run(tmp_path, "cover", "--config", cfg, "--seed", "2", out="b")
    assert (a / "cover.csv").read_text() != (b / "cover.csv").read_text()


def test_apply_on_field_file(tmp_path):
    _, first = run(tmp_path, "apply", out="first")
    cfg = write_config(tmp_path, {"apply": {"field": str(first / "apply_field.csv"), "operator": "majorant"}})
    code, out = run(tmp_path, "apply", "--config", cfg, out="second")
    assert code == 0
    assert (out / "apply_field.csv").exists()


@pytest.mark.parametrize("mode", ["strong", "zygmund", "domination", "contains"])
def test_maximal_modes(tmp_path, mode):
    cfg = write_config(tmp_path, {"maximal": {"mode": mode, "ladder": "spanning"}})
    code, _ = run(tmp_path, "maximal", "--config", cfg)
    assert code == 0


def test_sweep_homogeneity_slope(tmp_path):
    code, out = run(tmp_path, "sweep")
    assert code == 0
    slope = float((out / "sweep_fit.csv").read_text().splitlines()[2].split(",")[0])
    assert abs(slope) <= 0.03


def test_assertion_failure_exit_one(tmp_path):
    cfg = write_config(tmp_path, {"weak-type": {"bound": 1e-6, "resolution": 16, "box_half_width": 2}})
    code, out = run(tmp_path, "weak-type", "--config", cfg)
    assert code == 1
    record = json.loads((out / "failure.json").read_text())
    assert record["status"] == "fail" and record["subcommand"] == "weak-type"
    assert record["failures"]


def test_failure_record_cleared_on_success(tmp_path):
    cfg = write_config(tmp_path, {"weak-type": {"bound": 1e-6, "resolution": 16, "box_half_width": 2}})
    run(tmp_path, "weak-type", "--config", cfg)
    cfg = write_config(tmp_path, {"weak-type": {"resolution": 16, "box_half_width": 2}}, "ok.ini")
    code, out = run(tmp_path, "weak-type", "--config", cfg)
    assert code == 0 and not (out / "failure.json").exists()


def test_missing_key_is_config_error(tmp_path, capsys):
    cfg = default_config()
    cfg.remove_option("group-check", "tol")
    path = tmp_path / "bad.ini"
    with open(path, "w") as fh:
        cfg.write(fh)
    code, _ = run(tmp_path, "group-check", "--config", str(path))
    assert code == 2
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "ConfigError" and "tol" in record["message"]


@pytest.mark.parametrize("text", ["[group-check]\ntrials = many\n", "not an ini file", "[global]\nseed = 1\n"])
def test_malformed_configs(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    code, _ = run(tmp_path, "group-check", "--config", str(path))
    assert code == 2


def test_missing_config_file(tmp_path):
    code, _ = run(tmp_path, "group-check", "--config", str(tmp_path / "absent.ini"))
    assert code == 2


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "UsageError"


def test_threads_flag(tmp_path):
    code, _ = run(tmp_path, "group-check", "--threads", "1")
    assert code == 0


def test_packaged_configs_parse():
    for name in ("default", "sharpness"):
        text = resources.files("heisfrac").joinpath(f"configs/{name}.ini").read_text()
        configparser.ConfigParser(interpolation=None).read_string(text)
