"""Monte Carlo FER/BER sweeps with deterministic, worker-independent results."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelConfig, quantize_llr, simulate_frames
from .code import QcCode, load_code
from .decoder import Algorithm, DecoderConfig, decode_batch
from .rcq import RcqTables
from .schedule import Schedule

WORKERS_ENV = "LRCQ_WORKERS"
CSV_COLUMNS = [
    "decoder", "ebno_db", "frames", "frame_errors", "fer", "fer_lo", "fer_hi",
    "ber", "avg_iters", "undetected_errors",
]
FLOAT_COLUMNS = {"ebno_db", "fer", "fer_lo", "fer_hi", "ber", "avg_iters"}


@dataclass(frozen=True)
class DecoderSpec:
    name: str
    config: DecoderConfig
    tables: Optional[RcqTables] = None


@dataclass
class SweepConfig:
    code: QcCode
    decoders: list[DecoderSpec]
    ebno_db: list[float]
    llr_step: float = 0.5
    seed: int = 0
    min_frame_errors: int = 100
    max_frames: int = 100_000
    workers: int = 1
    chunk_frames: int = 500
    noiseless: bool = False

    def __post_init__(self):
        if not self.ebno_db:
            raise ValueError("sweep needs at least one Eb/N0 point")
        if not self.decoders:
            raise ValueError("sweep needs at least one decoder")
        if self.min_frame_errors < 1:
            raise ValueError("min_frame_errors must be >= 1")
        if self.max_frames < self.min_frame_errors:
            raise ValueError("max_frames must be >= min_frame_errors")
        if self.workers < 1 or self.chunk_frames < 1:
            raise ValueError("workers and chunk_frames must be positive")


@dataclass
class FerPoint:
    decoder: str
    ebno_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    undetected_errors: int
    avg_iterations: float
    n: int = field(default=0, repr=False)

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.n else float("nan")

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.frame_errors, self.frames)

    def row(self) -> dict:
        lo, hi = self.interval
        return {
            "decoder": self.decoder,
            "ebno_db": self.ebno_db,
            "frames": self.frames,
            "frame_errors": self.frame_errors,
            "fer": self.fer,
            "fer_lo": lo,
            "fer_hi": hi,
            "ber": self.ber,
            "avg_iters": self.avg_iterations,
            "undetected_errors": self.undetected_errors,
        }


def wilson_interval(errors: int, frames: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if frames <= 0:
        raise ValueError("frames must be positive")
    p = errors / frames
    denom = 1 + z * z / frames
    centre = (p + z * z / (2 * frames)) / denom
    half = z * math.sqrt(p * (1 - p) / frames + z * z / (4 * frames * frames)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _channel_for(spec: DecoderSpec, cfg: SweepConfig, snr_index: int) -> ChannelConfig:
    bv = 16 if spec.config.algorithm.is_float else spec.config.bv
    return ChannelConfig(
        cfg.ebno_db[snr_index], cfg.code.design_rate, cfg.llr_step, bv,
        cfg.seed, snr_index, cfg.noiseless,
    )


def run_chunk(code: QcCode, spec: DecoderSpec, channel: ChannelConfig, start: int, stop: int):
    """Decode frames [start, stop); returns per-frame (error, bit errors, iterations, undetected)."""
    llrs = simulate_frames(code.n, channel, range(start, stop))
    if not spec.config.algorithm.is_float:
        llrs = quantize_llr(llrs, channel.llr_step, spec.config.bv)
    res = decode_batch(code, spec.config, llrs, spec.tables)
    bit_err = res.hard_bits.sum(axis=1, dtype=np.int64)
    wrong = bit_err > 0
    err = ~res.converged | wrong
    undetected = res.converged & wrong
    return err, bit_err, res.iterations, undetected


def _run_point(cfg: SweepConfig, spec: DecoderSpec, snr_index: int, pool) -> FerPoint:
    channel = _channel_for(spec, cfg, snr_index)
    frames = errors = bit_errors = undetected = iters = 0
    next_start = 0
    while frames < cfg.max_frames and errors < cfg.min_frame_errors:
        ranges = []
        for _ in range(cfg.workers):
            if next_start >= cfg.max_frames:
                break
            stop = min(next_start + cfg.chunk_frames, cfg.max_frames)
            ranges.append((next_start, stop))
            next_start = stop
        if pool is None:
            outs = [run_chunk(cfg.code, spec, channel, a, b) for a, b in ranges]
        else:
            futs = [pool.submit(run_chunk, cfg.code, spec, channel, a, b) for a, b in ranges]
            outs = [f.result() for f in futs]
        # aggregate in frame order and stop exactly at the frame reaching the target
        for err, be, it, und in outs:
            need = cfg.min_frame_errors - errors
            cum = np.cumsum(err)
            if cum.size and cum[-1] >= need:
                cut = int(np.searchsorted(cum, need)) + 1
            else:
                cut = err.size
            frames += cut
            errors += int(err[:cut].sum())
            bit_errors += int(be[:cut].sum())
            undetected += int(und[:cut].sum())
            iters += int(it[:cut].sum())
            if errors >= cfg.min_frame_errors:
                break
    return FerPoint(spec.name, cfg.ebno_db[snr_index], frames, errors, bit_errors,
                    undetected, iters / frames, cfg.code.n)


def resolve_workers(requested: int) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return requested


def run_fer_sweep(cfg: SweepConfig) -> list[FerPoint]:
    """One FerPoint per (decoder, Eb/N0), decoders outermost."""
    workers = resolve_workers(cfg.workers)
    if workers != cfg.workers:
        cfg = SweepConfig(**{**cfg.__dict__, "workers": workers})
    points = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for spec in cfg.decoders:
            for k in range(len(cfg.ebno_db)):
                points.append(_run_point(cfg, spec, k, pool))
    finally:
        if pool is not None:
            pool.shutdown()
    return points


# -- output -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.5e}"


def emit_results(points: Sequence[FerPoint], fmt: str = "csv") -> bytes:
    if not points:
        raise ValueError("no results to emit")
    rows = [p.row() for p in points]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) if c in FLOAT_COLUMNS else r[c] for c in CSV_COLUMNS])
        return buf.getvalue().encode()
    if fmt == "json":
        doc = [
            {c: float(_fmt(r[c])) if c in FLOAT_COLUMNS else r[c] for c in CSV_COLUMNS}
            for r in rows
        ]
        return (json.dumps(doc, indent=1) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_results_csv(data: bytes | str) -> list[dict]:
    text = data.decode() if isinstance(data, bytes) else data
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {}
        for c in CSV_COLUMNS:
            if c == "decoder":
                row[c] = r[c]
            elif c in FLOAT_COLUMNS:
                row[c] = float(r[c])
            else:
                row[c] = int(r[c])
        out.append(row)
    return out


# -- sweep config files ---------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def load_sweep_config(path: str | Path) -> SweepConfig:
    """Read an INI-style sweep file; see README for the keys.

    Relative paths for the code, table and schedule files resolve against the
    config file's directory.
    """
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";",))
    if not parser.read(path):
        raise FileNotFoundError(path)
    base = path.parent
    if "sweep" not in parser:
        raise ValueError("sweep config needs a [sweep] section")
    sw = parser["sweep"]

    def resolve(p: str) -> str:
        cand = base / p
        return str(cand) if cand.exists() else p

    code = load_code(resolve(sw["code"]))
    llr_step = sw.getfloat("llr_step", 0.5)
    decoders = []
    for section in parser.sections():
        if not section.startswith("decoder"):
            continue
        d = parser[section]
        name = section.split(None, 1)[1] if " " in section else section
        sched = None
        if "schedule" in d:
            sched = Schedule.load(resolve(d["schedule"])).orders
        bv = d.get("bv")
        config = DecoderConfig(
            Algorithm(d.get("algorithm", "OMS").upper()),
            bc=d.getint("bc", 6),
            bv=int(bv) if bv is not None else None,
            offset_int=d.getint("offset_int", 1),
            imax=d.getint("imax", 16),
            schedule=sched,
            llr_step=llr_step,
        )
        tables = RcqTables.load(resolve(d["tables"])) if "tables" in d else None
        decoders.append(DecoderSpec(name, config, tables))
    return SweepConfig(
        code=code,
        decoders=decoders,
        ebno_db=_floats(sw["ebno_db"]),
        llr_step=llr_step,
        seed=sw.getint("seed", 0),
        min_frame_errors=sw.getint("min_frame_errors", 100),
        max_frames=sw.getint("max_frames", 100_000),
        workers=sw.getint("workers", 1),
        chunk_frames=sw.getint("chunk_frames", 500),
        noiseless=sw.getboolean("noiseless", False),
    )


def ebno_at_fer(points: Sequence[FerPoint], target: float) -> float:
    """Eb/N0 where log10(FER) crosses `target`, by linear interpolation between points."""
    pts = sorted((p.ebno_db, p.fer) for p in points)
    for (x0, f0), (x1, f1) in zip(pts, pts[1:]):
        if f0 >= target >= f1 and f0 > 0 and f1 > 0:
            if f0 == f1:
                return x0
            t = (math.log10(f0) - math.log10(target)) / (math.log10(f0) - math.log10(f1))
            return x0 + t * (x1 - x0)
    raise ValueError(f"FER curve does not bracket {target:g}")
