from __future__ import annotations

import json
import subprocess
import sys

import pytest

from blackwell_kit import cli


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path / "out")])


def test_json_writer_uses_17_significant_digits():
    text = cli.dumps({"x": 0.1, "f": cli.Fraction(1, 3), "inf": float("inf"), "n": [1, 2.5]})
    assert '"x": 0.10000000000000001' in text
    assert '"f": "1/3"' in text and '"inf": "inf"' in text
    assert json.loads(text)["n"] == [1, 2.5]
    # deterministic: same input, same bytes
    assert cli.dumps({"b": 1.0, "a": 2}) == cli.dumps({"b": 1.0, "a": 2})


def test_analyze(tmp_path, capsys):
    assert run(tmp_path, "analyze", "example1") == 0
    out = capsys.readouterr().out
    assert "3/4" in out
    rep = json.loads((tmp_path / "out" / "analyze.json").read_text())
    assert rep["minmax"]["mi"]["values"][0] == "3/4"


def test_limit_sets_writes_csv_and_svg(tmp_path):
    assert run(tmp_path, "limit-sets", "prisoners_dilemma", "--skip-mixed", "--directions", "90") == 0
    out = tmp_path / "out"
    assert (out / "pure.csv").read_text().startswith("v1,v2")
    svg = (out / "limit_sets.svg").read_text()
    assert svg.startswith("<svg") and "#1f4fd1" in svg


def test_build_eq_and_verify(tmp_path):
    assert run(tmp_path, "build-eq", "prisoners_dilemma", "--target", "3/2,3/2", "--reboot", "0.1") == 0
    out = tmp_path / "out"
    rep = json.loads((out / "report.json").read_text())
    assert rep["reboot"]["verdict"] == "pass"
    assert cli.main(["verify", str(out / "strategy.json"), "--out", str(tmp_path / "v")]) == 0


def test_verify_private_strategy(tmp_path):
    assert run(tmp_path, "verify", "example2_private") == 0
    assert run(tmp_path, "verify", "example2_private", "--delta-grid", "0.5:0.7:3") == 2


@pytest.mark.parametrize("args", [
    ("analyze", "no_such_game"),
    ("build-eq", "prisoners_dilemma", "--target", "9,9"),
    ("build-eq", "prisoners_dilemma", "--target", "1,x"),
    ("verify", "pd_grim", "--delta-grid", "0.9:0.5:3"),
    ("limit-sets", "pd_private_ci"),
    ("reproduce", "--only", "nope"),
])
def test_input_errors_exit_3(tmp_path, args, capsys):
    assert run(tmp_path, *args) == 3
    assert capsys.readouterr().err.startswith("error:")


def test_bad_json_file_exits_3(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(tmp_path, "analyze", str(bad)) == 3


def test_internal_errors_exit_4(tmp_path, monkeypatch):
    def boom(cfg):
        raise RuntimeError("broken invariant")

    monkeypatch.setattr(cli, "cmd_analyze", boom)
    assert run(tmp_path, "analyze", "example1") == 4


def test_reproduce_scoreboard(tmp_path, capsys):
    assert run(tmp_path, "reproduce", "--only", "example1-minmax", "anti-folk") == 0
    out = capsys.readouterr().out
    assert "PASS example1-minmax" in out and "2/2 checks passed" in out


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "blackwell_kit", "analyze", "prisoners_dilemma",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and "player 1" in res.stdout


def test_tol_flag_does_not_leak():
    before = cli.settings.tol
    cli.main(["reproduce", "--only", "anti-folk", "--tol", "1e-3", "--out", "/tmp/blackwell_tol_check"])
    assert cli.settings.tol == before
