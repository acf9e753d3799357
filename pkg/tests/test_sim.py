import json
import math

import numpy as np
import pytest

from lrcq.code import builtin_code
from lrcq.decoder import Algorithm, DecoderConfig
from lrcq.rcq import identity_tables
from lrcq.sim import (
    CSV_COLUMNS, DecoderSpec, FerPoint, SweepConfig, ebno_at_fer, emit_results, load_sweep_config,
    parse_results_csv, run_fer_sweep, wilson_interval,
)


def test_wilson_example():
    lo, hi = wilson_interval(50, 10_000)
    assert lo == pytest.approx(3.8e-3, abs=5e-5)
    assert hi == pytest.approx(6.6e-3, abs=5e-5)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(10, 10)[1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        wilson_interval(0, 0)


def test_wilson_against_closed_form():
    z = 1.959963984540054
    for k, n in ((1, 7), (13, 200), (199, 200)):
        p = k / n
        c = (p + z * z / (2 * n)) / (1 + z * z / n)
        h = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
        assert wilson_interval(k, n) == pytest.approx((c - h, c + h), rel=1e-12)
        lo, hi = wilson_interval(k, n)
        assert lo <= p <= hi


def _sweep(**kw):
    code = builtin_code("wimax576")
    decoders = [DecoderSpec("oms", DecoderConfig()),
                DecoderSpec("rcq", DecoderConfig("MS_RCQ", bc=3),
                            identity_tables(3, 8, 16, code.num_layers))]
    base = dict(code=code, decoders=decoders, ebno_db=[1.0, 1.5], min_frame_errors=15,
                max_frames=400, chunk_frames=37, seed=4)
    base.update(kw)
    return SweepConfig(**base)


def test_sweep_accounting():
    pts = run_fer_sweep(_sweep())
    assert [(p.decoder, p.ebno_db) for p in pts] == [
        ("oms", 1.0), ("oms", 1.5), ("rcq", 1.0), ("rcq", 1.5)]
    for p in pts:
        assert p.frame_errors <= p.frames <= 400
        assert p.frame_errors == 15 or p.frames == 400
        assert p.undetected_errors <= p.frame_errors
        lo, hi = p.interval
        assert lo <= p.fer <= hi
        assert p.ber <= p.fer
        assert 1 <= p.avg_iterations <= 16


def test_stopping_is_exact_and_chunk_independent():
    a = run_fer_sweep(_sweep(chunk_frames=37))
    b = run_fer_sweep(_sweep(chunk_frames=400))
    assert [p.row() for p in a] == [p.row() for p in b]


def test_workers_do_not_change_results(monkeypatch):
    one = run_fer_sweep(_sweep(workers=1))
    many = run_fer_sweep(_sweep(workers=8))
    assert [p.row() for p in one] == [p.row() for p in many]
    monkeypatch.setenv("LRCQ_WORKERS", "3")
    env = run_fer_sweep(_sweep(workers=1))
    assert [p.row() for p in one] == [p.row() for p in env]


def test_more_frames_never_fewer_errors():
    small = run_fer_sweep(_sweep(min_frame_errors=5, max_frames=100))
    big = run_fer_sweep(_sweep(min_frame_errors=30, max_frames=400))
    for s, b in zip(small, big):
        assert b.frame_errors >= s.frame_errors


def test_noiseless_sweep():
    pts = run_fer_sweep(_sweep(noiseless=True, max_frames=50, min_frame_errors=1))
    for p in pts:
        assert (p.frames, p.frame_errors, p.avg_iterations, p.ber) == (50, 0, 1.0, 0.0)


def test_float_decoder_in_sweep():
    code = builtin_code("fixture")
    cfg = SweepConfig(code, [DecoderSpec("f", DecoderConfig(Algorithm.FLOAT_OMS))], [3.0],
                      min_frame_errors=3, max_frames=200)
    (p,) = run_fer_sweep(cfg)
    assert p.frames > 0


@pytest.mark.parametrize("kw", [dict(ebno_db=[]), dict(decoders=[]), dict(min_frame_errors=0),
                                dict(max_frames=3), dict(workers=0)])
def test_sweep_validation(kw):
    with pytest.raises(ValueError):
        _sweep(**kw)


def _points():
    return [FerPoint("oms", 2.0, 1000, 12, 345, 1, 3.25, 576),
            FerPoint("rcq", 2.5, 20000, 100, 1234, 0, 2.123456789, 576)]


def test_emit_csv():
    data = emit_results(_points()[:1], "csv")
    lines = data.decode().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    row = dict(zip(CSV_COLUMNS, lines[1].split(",")))
    assert row["fer"] == "1.20000e-02"
    assert row["avg_iters"] == "3.25000e+00"
    assert row["frames"] == "1000"


def test_emit_round_trip():
    pts = _points()
    csv_rows = parse_results_csv(emit_results(pts, "csv"))
    json_rows = json.loads(emit_results(pts, "json"))
    assert csv_rows == json_rows
    assert csv_rows[1]["avg_iters"] == 2.12346
    with pytest.raises(ValueError):
        emit_results([], "csv")
    with pytest.raises(ValueError):
        emit_results(pts, "xml")


def test_load_sweep_config(tmp_path):
    identity_tables(4, 8, 16, 12).save(tmp_path / "t.json")
    (tmp_path / "s.txt").write_text("".join(
        f"layer {l} stalls 0 order " + " ".join(
            str(j) for j in range(24) if builtin_code("wimax576").base_matrix[l, j] >= 0) + "\n"
        for l in range(12)))
    cfg_path = tmp_path / "sweep.cfg"
    cfg_path.write_text(
        "[sweep]\ncode = wimax576\nebno_db = 1.0, 1.5 2.0\nseed = 3\nmin_frame_errors = 10\n"
        "max_frames = 500\nworkers = 2\n\n"
        "[decoder base]\nalgorithm = oms\nbc = 6\n\n"
        "[decoder rcq]\nalgorithm = MS_RCQ\nbc = 4\ntables = t.json\nschedule = s.txt\n"
    )
    cfg = load_sweep_config(cfg_path)
    assert cfg.ebno_db == [1.0, 1.5, 2.0]
    assert (cfg.seed, cfg.min_frame_errors, cfg.max_frames, cfg.workers) == (3, 10, 500, 2)
    assert [d.name for d in cfg.decoders] == ["base", "rcq"]
    assert cfg.decoders[0].config.bv == 8
    assert cfg.decoders[1].tables is not None and cfg.decoders[1].config.schedule is not None
    cfg_path.write_text("[decoder x]\nbc = 6\n")
    with pytest.raises(ValueError):
        load_sweep_config(cfg_path)
    with pytest.raises(FileNotFoundError):
        load_sweep_config(tmp_path / "none.cfg")


def test_sweep_config_inline_comments(tmp_path):
    cfg_path = tmp_path / "sweep.cfg"
    cfg_path.write_text(
        "[sweep]\ncode = fixture   ; builtin\nebno_db = 3.0\nworkers = 1 ; env wins\n\n"
        "[decoder OMS(6,8)]\nalgorithm = OMS ; fixed point\nbc = 6\n"
    )
    cfg = load_sweep_config(cfg_path)
    assert cfg.code.name == "fixture" and cfg.workers == 1
    assert cfg.decoders[0].name == "OMS(6,8)"
    assert cfg.decoders[0].config.algorithm is Algorithm.OMS


def test_ebno_at_fer():
    pts = [FerPoint("a", 1.0, 100, 10, 0, 0, 1), FerPoint("a", 2.0, 1000, 1, 0, 0, 1)]
    assert ebno_at_fer(pts, 1e-2) == pytest.approx(1.5)
    assert ebno_at_fer(pts, 1e-1) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ebno_at_fer(pts, 1e-4)
