import json
import subprocess
import sys

import numpy as np
import pytest

from ucplab import cli, __version__
from ucplab.errors import ConfigError
from ucplab.field import GridField
from ucplab.scenarios import SCENARIOS


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def strip_timing(rep):
    rep = dict(rep)
    rep.pop("timing")
    return rep


def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in ("cex-2d", "cex-1d", "diag-4d", "diag-3d", "diag-2d", "div-2d",
                 "conjugate-suite", "beltrami-suite", "harmpoly-suite", "onedim-suite",
                 "geom-suite", "ym-suite", "nullspace-origins"):
        assert name in out


def test_run_nullspace_origins(tmp_path):
    assert cli.main(["run", "nullspace-origins", "--out", str(tmp_path)]) == 0
    rep = cli.load_report(tmp_path / "report.json")
    assert rep["passed"] and rep["version"] == __version__
    assert rep["scenario"]["name"] == "nullspace-origins"
    np.testing.assert_allclose(rep["metrics"]["dim4-pure-diagonal"], [1, 1, 1, 1], atol=1e-12)
    np.testing.assert_allclose(rep["metrics"]["dim3-cross-term"], [1, 1, 1, 0.5], atol=1e-12)
    np.testing.assert_allclose(rep["metrics"]["dim2-first-order"], [1, 1, -2, 0], atol=1e-12)


def test_run_cex_alias_from_config(tmp_path):
    out = tmp_path / "out"
    cfg = write(tmp_path / "c.ini", f"[scenario]\nname = cex-2d-bump\n[params]\ngrid = 65\n"
                                    f"[output]\ndir = {out}\nfields = true\n")
    assert cli.main(["run", cfg]) == 0
    rep = cli.load_report(out / "report.json")
    assert rep["scenario"]["params"]["grid"] == 65
    assert rep["metrics"]["inner_det_sup"] <= 1e-12
    assert rep["metrics"]["verdict"] == "WUCP-violation"
    lines = (out / "fields" / "det.csv").read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 65 * 65 + 1


def test_cli_overrides(tmp_path):
    assert cli.main(["run", "vanishing-suite", "--out", str(tmp_path), "--seed", "7"]) == 0
    assert cli.load_report(tmp_path / "report.json")["scenario"]["params"]["seed"] == 7


def test_check_failure_exit_code(tmp_path):
    cfg = write(tmp_path / "v.ini", "[scenario]\nname = vanishing-suite\n[params]\nn_max = 3\n")
    assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 1
    rep = cli.load_report(tmp_path / "o" / "report.json")
    assert not rep["passed"]
    assert any(not c["passed"] for c in rep["checks"])


@pytest.mark.parametrize("text", [
    "[scenario]\nname = cex-2d\n[params]\nbogus = 1\n",
    "[scenario]\nname = cex-2d\n[params]\ngrid = many\n",
    "[scenario]\nname = no-such-thing\n",
    "[params]\ngrid = 3\n",
    "[scenario]\nname = cex-2d\n[extra]\nk = v\n",
    "[scenario]\nname = cex-2d\n[output]\nformat = xml\n",
    "this is not ini\n",
    "[scenario]\nname = cex-2d\n[params]\nfields = maybe\n",
])
def test_malformed_config_exit_two_and_no_files(tmp_path, text):
    cfg = write(tmp_path / "bad.ini", text + f"[output]\ndir = {tmp_path / 'o'}\n"
                if "[output]" not in text else text)
    before = set(tmp_path.iterdir())
    assert cli.main(["run", cfg, "--out", str(tmp_path / "o2")]) == 2
    assert set(tmp_path.iterdir()) == before


def test_missing_config_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "absent.ini")]) == 2


def test_unknown_builtin_is_config_error():
    assert cli.main(["run", "nope"]) == 2


def test_param_coercion():
    p = cli.resolve_params("beltrami-suite", {"chart_grids": "33, 65", "seed": "4"})
    assert p["chart_grids"] == (33, 65) and p["seed"] == 4
    p = cli.resolve_params("cex-2d", {"fields": "yes", "tol": "1e-10"})
    assert p["fields"] is True and p["tol"] == 1e-10
    with pytest.raises(ConfigError):
        cli.resolve_params("cex-2d", {"seed": "1.5"})


def test_empty_report_is_valid_json(tmp_path):
    rep = {"checks": [], "metrics": {}}
    path = cli.emit_report(rep, tmp_path)
    assert json.loads(path.read_text()) == {"checks": [], "metrics": {}}


def test_csv_three_by_three(tmp_path):
    f = GridField(((0, 1), (0, 1)), np.arange(9.0).reshape(3, 3))
    assert cli.write_field_csv(tmp_path / "f.csv", f) == 9
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 10
    assert lines[2] == "0.0,0.5,1.0"


def test_csv_complex_columns(tmp_path):
    f = GridField(((0, 1),), np.array([1 + 2j, 3 - 1j]))
    cli.write_field_csv(tmp_path / "c.csv", f)
    assert (tmp_path / "c.csv").read_text().splitlines() == [
        "x,value_re,value_im", "0.0,1.0,2.0", "1.0,3.0,-1.0"]


def test_round_trip_byte_identical(tmp_path):
    report, _ = cli.run_scenario("ym-suite", cli.resolve_params("ym-suite"))
    p1 = cli.emit_report(report, tmp_path / "a")
    p2 = cli.emit_report(cli.load_report(p1), tmp_path / "b")
    assert p1.read_bytes() == p2.read_bytes()


def test_deterministic_modulo_timing():
    a, _ = cli.run_scenario("onedim-suite", cli.resolve_params("onedim-suite"))
    b, _ = cli.run_scenario("onedim-suite", cli.resolve_params("onedim-suite"))
    assert cli.dumps_report(strip_timing(a)) == cli.dumps_report(strip_timing(b))


def test_thread_cap(monkeypatch):
    monkeypatch.delenv("UCPLAB_THREADS", raising=False)
    assert cli.thread_cap() == 1
    monkeypatch.setenv("UCPLAB_THREADS", "3")
    assert cli.thread_cap() == 3
    monkeypatch.setenv("UCPLAB_THREADS", "1000")
    assert cli.thread_cap() == len(SCENARIOS)
    for bad in ("zero", "0"):
        monkeypatch.setenv("UCPLAB_THREADS", bad)
        with pytest.raises(ConfigError):
            cli.thread_cap()


@pytest.mark.parametrize("threads", ["1", "2"])
def test_verify_all_subset(tmp_path, monkeypatch, capsys, threads):
    subset = {k: SCENARIOS[k] for k in ("nullspace-origins", "ym-suite")}
    monkeypatch.setattr(cli, "SCENARIOS", subset)
    monkeypatch.setenv("UCPLAB_THREADS", threads)
    assert cli.main(["verify-all", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2
    assert (tmp_path / "ym-suite" / "report.json").exists()


def test_verify_all_bad_threads(monkeypatch):
    monkeypatch.setenv("UCPLAB_THREADS", "-2")
    assert cli.main(["verify-all"]) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ucplab.cli", "list"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0 and "ym-suite" in proc.stdout


def test_readme_style_inline_comments(tmp_path):
    cfg = write(tmp_path / "c.ini", "[scenario]\nname = beltrami-suite   ; comment\n"
                                    "[params]\nchart_grids = 65, 129    # two grids\n")
    name, params, _ = cli.parse_config(cfg)
    assert name == "beltrami-suite" and params["chart_grids"] == (65, 129)


def test_readme_config_example_parses(tmp_path):
    from pathlib import Path
    text = (Path(__file__).parents[1] / "README.md").read_text(encoding="utf-8")
    block = text.split("```ini\n", 1)[1].split("```", 1)[0]
    name, params, output = cli.parse_config(write(tmp_path / "readme.ini", block))
    assert name == "beltrami-suite" and params["chart_grids"] == (65, 129)
    assert output == {"dir": "out/beltrami", "fields": True}
