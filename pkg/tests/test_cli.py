import json

import pytest

from lindyn import cli


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main(["run", *args, "--out", str(out)])
    manifest = json.loads((out / "manifest.json").read_text()) if (out / "manifest.json").exists() else None
    return code, manifest, out


def test_densities_run(tmp_path):
    code, man, out = run(["densities", "--horizon", "1000", "--set", "evens"], tmp_path)
    assert code == 0 and man["passed"]
    assert (out / "timings.json").exists()
    assert set(man) >= {"config", "versions", "assertions", "summary", "passed", "first_failure"}


def test_manifest_is_deterministic(tmp_path):
    args = ["bad-set", "--J1", "4", "--seed", "3"]
    _, _, a = run(args, tmp_path, "a")
    _, _, b = run(args, tmp_path, "b")
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_failing_assertion_exits_one(tmp_path):
    code, man, _ = run(["ctype-check"], tmp_path)
    assert code == 1 and not man["passed"]
    assert man["first_failure"] == "condition (b), n=1"
    names = {a["name"]: a["passed"] for a in man["assertions"]}
    assert names["periodicity of every block"] and names["condition (a), n=1"]


def test_float_refused_for_exact_pipeline(tmp_path):
    code, man, _ = run(["ctype-check", "--float"], tmp_path)
    assert code == 2 and "exact" in man["error"]


def test_invalid_config_lists_every_violation(tmp_path, capsys):
    code = cli.main(["run", "densities", "--out", str(tmp_path), "--bogus", "1"])
    err = capsys.readouterr().err
    assert code == 2
    assert "params.horizon is required" in err and "params.bogus" in err


def test_unknown_experiment():
    with pytest.raises(cli.ConfigError, match="valid options"):
        cli.validate_config({"experiment": "plot"})


def test_malformed_json_location():
    with pytest.raises(cli.ConfigError, match="line 2"):
        cli.validate_config('{"experiment": "densities",\n "params": }')


def test_validate_subcommand(tmp_path, capsys):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"experiment": "densities", "params": {"horizon": 10}}))
    assert cli.main(["validate", str(f)]) == 0
    assert "ok: densities" in capsys.readouterr().out


def test_config_file_with_flag_override(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"horizon": 200, "set": "odds"}))
    code, man, _ = run(["densities", "--config", str(f), "--horizon", "300"], tmp_path)
    assert code == 0 and man["config"]["params"] == {"horizon": 300, "set": "odds"}


def test_threads_resolution(monkeypatch):
    assert cli.resolve_threads(None, {}) == 1
    assert cli.resolve_threads(None, {"LINDYN_THREADS": "3"}) == 3
    assert cli.resolve_threads(2, {"LINDYN_THREADS": "3"}) == 2


def test_interpolate_run(tmp_path):
    code, man, _ = run(["interpolate"], tmp_path)
    assert code == 0 and man["passed"]
