import csv
import json
from pathlib import Path

import pytest

from belcal.cli import main

EXAMPLES = Path(__file__).resolve().parents[1] / "examples"
ROBOT = str(EXAMPLES / "robot1d.bat")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_inline_query(capsys):
    code, out, _ = run(capsys, "run", ROBOT, "-q", "bel (h <= 9) after [sonar(5)]", "--grid", "801")
    assert code == 0
    value = float(out.split("=>")[1].split()[0])
    assert value == pytest.approx(0.97, abs=0.01)


def test_run_mc_reports_stderr(capsys):
    code, out, _ = run(capsys, "run", ROBOT, "-q", "bel (h <= 9) after []", "--backend", "mc",
                       "--seed", "7", "--samples", "500000")
    assert code == 0
    value, _, se = out.split("=>")[1].split()[:3]
    assert abs(float(value) - 0.7) <= 4 * float(se)


def test_missing_theory(capsys):
    code, _, err = run(capsys, "run", "nonexistent.bat", "-q", "bel (h <= 9) after []")
    assert code == 2 and "nonexistent.bat" in err


def test_parse_error_has_location(tmp_path, capsys):
    bad = tmp_path / "bad.bat"
    bad.write_text("theory b\nfluent h : real\ninit p = 1 +\n")
    code, _, err = run(capsys, "run", str(bad), "-q", "bel (h <= 9) after []")
    assert code == 2
    assert f"{bad}:4:1" in err or f"{bad}:3:" in err


def test_validation_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "mut.bat"
    bad.write_text("theory b\nfluent h : real\ninit p = cases { 1 if 0 <= h and h <= 1 ; 0 }\n"
                   "action s(z: real) sensing { h' = z }\n")
    code, _, err = run(capsys, "run", str(bad), "-q", "bel (h <= 9) after []")
    assert code == 2 and "SensingMutation" in err and f"{bad}:4:" in err


def test_query_file_errors_point_at_lines(tmp_path, capsys):
    qf = tmp_path / "q.q"
    qf.write_text("bel (h <= 9) after []\n  bel (zz <= 1) after []\n")
    code, _, err = run(capsys, "run", ROBOT, str(qf))
    assert code == 2
    assert f"{qf}:2:8" in err


def test_query_error_exits_1_and_continues(capsys):
    code, out, _ = run(capsys, "run", ROBOT, "-q", "bel (h <= 9) after [sonar(-5)]",
                       "-q", "bel (h <= 9) after []", "--grid", "201")
    assert code == 1
    assert "DegenerateBelief" in out and "0.700000" in out


def test_json_report_replays_bitwise(tmp_path, capsys):
    args = ["run", ROBOT, "-q", "bel (h <= 9) after [sonar(5)]", "-q", "knows (h <= 12) after []",
            "--backend", "mc", "--seed", "11", "--samples", "20000", "--format", "json"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    report = json.loads(out)
    assert len(report["theory_sha256"]) == 64
    assert report["config"]["seed"] == 11 and report["config"]["backend"] == "mc"
    assert report["queries"][0]["config"]["mc_samples"] == 20000
    saved = tmp_path / "report.json"
    saved.write_text(out)
    code, again, _ = run(capsys, "run", ROBOT, "-q", "bel (h <= 9) after [sonar(5)]", "--config", str(saved),
                         "--format", "json")
    first = report["queries"][0]["result"]
    second = json.loads(again)["queries"][0]["result"]
    assert (first["value"], first["numerator"], first["gamma"]) == (second["value"], second["numerator"], second["gamma"])


def test_flags_override_query_options(capsys):
    code, out, _ = run(capsys, "run", ROBOT, "-q", "bel (h <= 9) after [] grid=101 seed=3",
                       "--grid", "201", "--format", "json")
    cfg = json.loads(out)["queries"][0]["config"]
    assert (cfg["quad_points_per_dim"], cfg["seed"]) == (201, 3)


def test_oracle_flag(capsys):
    code, out, _ = run(capsys, "run", "builtin:sensewall", "-q", "bel (h <= 4) after [sensewall(close)]", "--oracle")
    assert code == 0 and "oracle (grid posterior)" in out
    code, out, _ = run(capsys, "run", "builtin:window_win", "-q", "bel (win = 0) after [setwin(0)]", "--oracle")
    assert "oracle (enumeration): 0.750000, delta +0.00e+00" in out


def test_marginal_csv_to_out_dir(tmp_path, capsys):
    code, out, _ = run(capsys, "run", ROBOT, "-q", "marginal h after [move(4)] bins=8 range=0,8",
                       "--out", str(tmp_path), "--grid", "401")
    assert code == 0
    [path] = list(tmp_path.glob("*.csv"))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["bin_lo", "bin_hi", "mass"]
    assert rows[-1][0] == "atom" and float(rows[-1][1]) == 0.0
    assert float(rows[-1][2]) == pytest.approx(0.2, abs=1e-3)
    assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-6)


def test_plotdata(tmp_path, capsys):
    out_file = tmp_path / "m.csv"
    code, _, _ = run(capsys, "plotdata", ROBOT, "marginal h after [] bins=10 range=2,12", "-o", str(out_file),
                     "--grid", "401")
    assert code == 0
    rows = list(csv.reader(out_file.open()))[1:]
    assert len(rows) == 10
    for r in rows:
        assert float(r[2]) == pytest.approx(0.1, abs=1e-9)
    code, out, _ = run(capsys, "plotdata", ROBOT, "marginal h after [move(4)]", "--grid", "401")
    assert code == 0 and "\natom,0.0,0.2" in out


def test_plotdata_errors(capsys):
    code, _, err = run(capsys, "plotdata", "builtin:window", "marginal win after []")
    assert code == 1 and "FiniteFluentMarginal" in err
    code, _, err = run(capsys, "plotdata", ROBOT, "bel (h <= 9) after []")
    assert code == 2


def test_bad_flag_value(capsys):
    code, _, err = run(capsys, "run", ROBOT, "-q", "bel (h <= 9) after []", "--grid", "0")
    assert code == 2 and "quad_points_per_dim" in err


def test_no_queries(capsys):
    code, _, _ = run(capsys, "run", ROBOT)
    assert code == 2
