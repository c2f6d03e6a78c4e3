import json
import subprocess
import sys
from pathlib import Path

import pytest

from opxlab.cli import DECISIONS, RunConfig, config_from_dict, load_config, main, parse_family
from opxlab.errors import ConfigError
from opxlab.weights import Family


def run(argv, capsys=None):
    code = main(argv)
    out = capsys.readouterr() if capsys else None
    return code, out


def manifest(path):
    return json.loads((Path(path) / "manifest.json").read_text())


def same_tree(a: Path, b: Path):
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        if name == "manifest.json":
            ma, mb = manifest(a), manifest(b)
            ma.pop("timing"), mb.pop("timing")
            ma["config"].pop("out", None), mb["config"].pop("out", None)
            assert ma == mb
        else:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


# -- configuration ----------------------------------------------------------

@pytest.mark.parametrize("data, path", [
    ({"grid": {"spacin": "1e-20"}}, "grid.spacin"),
    ({"flow": {"method": "euler"}}, "flow.method"),
    ({"precision": 10}, "precision"),
    ({"N": 2}, "N"),
    ({"grid": {"points": 4}}, "grid.points"),
    ({"checks": ["dp", "nope"]}, "checks[1]"),
    ({"families": ["Laguerre"]}, "families[0]"),
    ({"weight": [{"t": "0.3"}]}, "weight[0].family"),
    ({"weight": [{"family": "FreudQuartic", "t": 0.3}]}, "weight[0].t"),
    ({"weight": [{"family": "Charlier", "a": "-1", "beta": "1"}]}, "weight[0]"),
    ({"jobs": 0}, "jobs"),
    ({"colour": "blue"}, "colour"),
])
def test_config_errors_name_the_field(data, path):
    with pytest.raises(ConfigError) as err:
        config_from_dict(data)
    assert err.value.path == path
    assert str(err.value).startswith(path + ":")


def test_config_file(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('precision = 60\nN = 8\nchecks = ["dp"]\n\n[[weight]]\nfamily = "freudquartic"\nt = "0.3"\n')
    config = load_config(cfg)
    assert config.digits == 60 and config.N == 8 and config.checks == ("dp",)
    assert config.weights[0].family is Family.FREUD
    bad = tmp_path / "bad.toml"
    bad.write_text("precision = [\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_family_names():
    assert parse_family("CircleExpCos") is Family.CIRCLE
    assert parse_family("circle") is Family.CIRCLE
    with pytest.raises(ConfigError):
        parse_family("hermite")


def test_environment_precision(monkeypatch):
    monkeypatch.setenv("OPXLAB_PRECISION", "55")
    assert RunConfig().digits == 55


# -- commands ---------------------------------------------------------------

def test_low_precision_is_a_config_error(tmp_path, capsys):
    code, out = run(["check-dp", "--precision", "10", "--out", str(tmp_path)], capsys)
    assert code == 2 and "precision" in out.err


def test_zero_checks(tmp_path, capsys):
    cfg = tmp_path / "none.toml"
    cfg.write_text(f'checks = []\nout = "{tmp_path / "run"}"\n')
    code, out = run(["suite", "--config", str(cfg)], capsys)
    assert code == 0
    m = manifest(tmp_path / "run")
    assert m["verdicts"] == [] and m["all_passed"]


def test_check_dp_writes_artifacts(tmp_path, capsys):
    code, out = run(["check-dp", "--family", "freud", "--precision", "60", "--out", str(tmp_path)], capsys)
    assert code == 0 and "PASS" in out.out
    m = manifest(tmp_path)
    assert m["verdicts"] == [{"check": "dp", "criterion": 2, "title": m["verdicts"][0]["title"], "verdict": "pass"}]
    assert set(m["artifacts"]) == {"residuals_dp.csv", "manifest.json"}
    assert set(m["decisions"]) == set(DECISIONS)
    header = (tmp_path / "residuals_dp.csv").read_text().splitlines()[0]
    assert header == "check,identity,family,index,residual,tolerance,verdict"


def test_check_selection_is_limited_to_the_command(tmp_path, capsys):
    code, _ = run(["check-dp", "--check", "lax", "--family", "freud", "--precision", "50", "--out", str(tmp_path)],
                  capsys)
    assert code == 0 and manifest(tmp_path)["verdicts"] == []


def test_coefficient_commands(tmp_path, capsys):
    for command in ("moments", "recurrence", "verblunsky"):
        out = tmp_path / command
        code, _ = run([command, "--precision", "50", "--out", str(out)], capsys)
        assert code == 0
        assert (out / "manifest.json").exists()
    assert (tmp_path / "moments" / "moments.csv").read_text().count("\n") > 8
    verb = (tmp_path / "verblunsky" / "coefficients.csv").read_text()
    assert "CircleExpCos" in verb and "FreudQuartic" not in verb
    rec = (tmp_path / "recurrence" / "coefficients.csv").read_text()
    assert "FreudQuartic" in rec and "CircleExpCos" not in rec


def test_report_subcommand(tmp_path, capsys):
    run(["check-dp", "--family", "charlier", "--precision", "60", "--out", str(tmp_path)], capsys)
    code, out = run(["report", "--out", str(tmp_path)], capsys)
    assert code == 0 and "all checks passed" in out.out
    code, out = run(["report", "--out", str(tmp_path / "missing")], capsys)
    assert code == 2


def test_flow_exports_trajectory(tmp_path, capsys):
    cfg = tmp_path / "flow.toml"
    cfg.write_text('precision = 60\nfamilies = ["FreudQuartic"]\n[flow]\ntarget = 3\nend = "0.4"\n')
    code, _ = run(["flow", "--config", str(cfg), "--out", str(tmp_path / "run")], capsys)
    assert code == 0
    lines = (tmp_path / "run" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,site,variable,value" and len(lines) > 10


def test_runs_are_deterministic(tmp_path, capsys):
    args = ["check-lax", "--precision", "60", "--family", "freud", "--family", "circle"]
    run(args + ["--out", str(tmp_path / "a")], capsys)
    run(args + ["--out", str(tmp_path / "b")], capsys)
    run(args + ["--out", str(tmp_path / "c"), "--jobs", "2"], capsys)
    same_tree(tmp_path / "a", tmp_path / "b")
    same_tree(tmp_path / "a", tmp_path / "c")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "opxlab.cli", "check-dp", "--family", "circle",
                           "--precision", "50", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
