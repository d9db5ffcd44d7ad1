import csv
import json
import subprocess
import sys

import pytest

from qxbtpir.cli import main


def test_run_json_and_figure(tmp_path, capsys):
    out = tmp_path / "r" / "run.json"
    code = main(["run", "--N", "7", "--X", "2", "--T", "2", "--B", "1", "--K", "2", "--adversary",
                 "additive-dit", "--sweep", "all-placements", "--trials", "2", "--out", str(out)])
    assert code == 0
    d = json.loads(out.read_text())
    assert d["summary"]["accepted"] and d["summary"]["realized_rate"] == "2/7"
    assert (tmp_path / "r" / "run.png").stat().st_size > 0
    assert "accepted=True" in capsys.readouterr().err


def test_run_csv_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 10, "K": 2, "X": 1, "T": 1, "B": 3, "adversary": "arbitrary-answer",
                               "byz_set": [1, 5, 9], "trials": 3}))
    out = tmp_path / "run.csv"
    assert main(["run", "--config", str(cfg), "--format", "csv", "--out", str(out), "--no-plot"]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 3 and all(r["success"] == "True" for r in rows)
    assert not (tmp_path / "run.png").exists()


def test_rate_table(tmp_path):
    out = tmp_path / "rates.csv"
    assert main(["rate-table", "--N", "5..9", "--X", "1", "--T", "1..2", "--B", "0..1",
                 "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 20
    assert (tmp_path / "rates.png").exists()


def test_verify_oracle(tmp_path):
    out = tmp_path / "oracle.json"
    assert main(["verify-oracle", "--N", "2", "--q", "5", "--out", str(out)]) == 0
    d = json.loads(out.read_text())["oracle"]
    assert d["cases"] == 625 and d["mismatches"] == 0
    out2 = tmp_path / "disc.json"
    assert main(["verify-oracle", "--N", "2", "--q", "2", "--shots", "20000", "--out", str(out2)]) == 0
    assert json.loads(out2.read_text())["discretization"]["tv"] <= 0.02
    assert (tmp_path / "disc.png").exists()


def test_leakage_commands(tmp_path):
    base = ["--N", "4", "--X", "1", "--T", "1", "--B", "0", "--p", "5", "--L", "1", "--scheme", "classical"]
    assert main(["privacy-test", *base, "--method", "exact", "--no-plot"]) == 0
    assert main(["security-test", *base, "--method", "exact", "--no-plot"]) == 0
    assert main(["privacy-test", *base, "--noise-terms", "0", "--method", "exact", "--no-plot"]) == 1
    assert main(["privacy-test", *base, "--noise-terms", "0", "--method", "exact", "--expect-leak",
                 "--no-plot"]) == 0
    out = tmp_path / "priv.json"
    assert main(["privacy-test", "--N", "7", "--X", "2", "--T", "2", "--B", "1", "--samples", "2000",
                 "--repeats", "3", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["repeats"] == 3 and (tmp_path / "priv.png").exists()


@pytest.mark.parametrize("argv", [
    ["run", "--N", "6", "--X", "2", "--T", "2", "--B", "1"],
    ["run", "--N", "7", "--X", "2", "--T", "2", "--B", "1", "--adversary", "shouting"],
    ["run", "--config", "/nonexistent/c.json"],
    ["privacy-test", "--N", "8", "--X", "2", "--T", "2", "--B", "1", "--samples", "100", "--subset", "1,2"],
    ["verify-oracle", "--q", "6"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_argparse_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--N", "x"])
    assert exc.value.code == 2


def test_console_entry():
    proc = subprocess.run([sys.executable, "-m", "qxbtpir.cli", "rate-table", "--N", "8", "--X", "2",
                           "--T", "2", "--B", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"][0]["rate"] == "1/2"
