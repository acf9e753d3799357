import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from lrcq.channel import ChannelConfig, quantize_llr, simulate_frame
from lrcq.cli import main
from lrcq.code import builtin_code
from lrcq.decoder import DecoderConfig, decode
from lrcq.rcq import RcqTables
from lrcq.schedule import Schedule
from lrcq.sim import parse_results_csv


def test_help_everywhere(capsys):
    for argv in ([], ["simulate"], ["decode"], ["design-rcq"], ["schedule"], ["resources"]):
        with pytest.raises(SystemExit) as exc:
            main(argv + ["--help"])
        assert exc.value.code == 0
        assert "usage" in capsys.readouterr().out


def test_unknown_subcommand_and_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["resources", "--code", "fixture", "--bogus"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_simulate(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("[sweep]\ncode = fixture.qc\nebno_db = 2 3\nmin_frame_errors = 5\n"
                   "max_frames = 300\n\n[decoder oms]\nalgorithm = OMS\n")
    out = tmp_path / "results.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    rows = parse_results_csv(out.read_bytes())
    assert [r["ebno_db"] for r in rows] == [2.0, 3.0]
    out_json = tmp_path / "results.json"
    assert main(["simulate", "--config", str(cfg), "--out", str(out_json), "--format", "json"]) == 0
    assert json.loads(out_json.read_text()) == rows


def test_decode_matches_library(tmp_path, capsys):
    code = builtin_code("wimax576")
    llrs = quantize_llr(simulate_frame(code.n, ChannelConfig(2.0, 0.5, seed=5)), 0.5, 8)
    path = tmp_path / "llr.txt"
    path.write_text("\n".join(str(x) for x in llrs) + "\n")
    assert main(["decode", "--code", "wimax576", "--llrs", str(path)]) == 0
    out = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
    ref = decode(code, DecoderConfig(), llrs)
    assert out["converged"] == str(int(ref.converged))
    assert out["iterations"] == str(ref.iterations_used)
    assert out["bits"] == "".join(str(b) for b in ref.hard_bits)


def test_decode_errors(tmp_path, capsys):
    path = tmp_path / "llr.txt"
    path.write_text("1\n2\nthree\n")
    assert main(["decode", "--code", "fixture", "--llrs", str(path)]) != 0
    assert "line 3" in capsys.readouterr().err
    path.write_text("1\n" * 15)
    assert main(["decode", "--code", "fixture", "--llrs", str(path)]) != 0
    assert main(["decode", "--code", "nosuch.qc", "--llrs", str(path)]) != 0


def test_design_then_decode(tmp_path, capsys):
    tables = tmp_path / "t.json"
    assert main(["design-rcq", "--code", "fixture", "--bc", "3", "--ebno", "2", "--frames", "40",
                 "--imax", "16", "--out", str(tables)]) == 0
    t = RcqTables.load(tables)
    assert (t.bc, t.bv, t.imax, t.num_layers) == (3, 8, 16, 2)
    pilot = tmp_path / "p.json"
    assert main(["design-rcq", "--code", "fixture", "--bc", "3", "--ebno", "2", "--frames", "40",
                 "--method", "pilot", "--out", str(pilot)]) == 0
    llr = tmp_path / "llr.txt"
    llr.write_text("\n".join(["20"] * 16))
    capsys.readouterr()
    assert main(["decode", "--code", "fixture", "--llrs", str(llr), "--algorithm", "ms_rcq",
                 "--bc", "3", "--tables", str(tables)]) == 0
    assert "converged 1" in capsys.readouterr().out


def test_schedule_commands(tmp_path, capsys):
    assert main(["schedule", "--code", "fixture.qc", "--depth", "2", "--verify"]) == 1
    assert "violation" in capsys.readouterr().out
    out = tmp_path / "s.txt"
    assert main(["schedule", "--code", "wimax576", "--depth", "4", "--out", str(out)]) == 0
    Schedule.load(out)
    capsys.readouterr()
    assert main(["schedule", "--code", "wimax576", "--depth", "4", "--verify", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "clean"
    assert main(["schedule", "--code", "wimax576", "--depth", "9", "--verify", str(out)]) == 1


def test_resources(capsys):
    assert main(["resources", "--code", "wimax576", "--bc", "3", "--w", "8", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    row = rows[2]
    assert rows[0]["decoder"] == "OMS(6,8)" and row["decoder"] == "RCQ(3,8)"
    assert row["method"] == "BROADCAST" and row["broadcast_wires"] == str(7 * 8 * 24)
    assert main(["resources", "--code", "wimax576"]) == 0
    assert "DRIBBLE" in capsys.readouterr().out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lrcq.cli", "schedule", "--code", "fixture",
                           "--depth", "0", "--verify"], capture_output=True, text=True)
    assert proc.returncode in (0, 1)
    proc = subprocess.run([sys.executable, "-m", "lrcq.cli", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
