"""Command-line front end: simulate, decode, design-rcq, schedule, resources."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .code import load_code
from .decoder import Algorithm, DecoderConfig, decode
from .design import design_from_pilot, design_sequential
from .rcq import RcqTables, identity_tables
from .resources import compare_methods, render_csv, render_text
from .schedule import (
    PipelineParams, Schedule, cycles_per_iteration, find_hazard_free_schedule, verify_schedule,
)
from .sim import emit_results, load_sweep_config, run_fer_sweep


class CliError(Exception):
    pass


def _decoder_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", default="OMS", type=str.upper,
                   choices=[a.value for a in Algorithm])
    p.add_argument("--bc", type=int, default=6, help="CN message width")
    p.add_argument("--bv", type=int, default=None, help="VN / AP-LLR width (default bc+2, 8 for RCQ)")
    p.add_argument("--offset", type=int, default=1, help="OMS offset in LLR steps")
    p.add_argument("--imax", type=int, default=16)
    p.add_argument("--llr-step", type=float, default=0.5)


def _config_from(args) -> DecoderConfig:
    return DecoderConfig(Algorithm(args.algorithm), bc=args.bc, bv=args.bv,
                         offset_int=args.offset, imax=args.imax, llr_step=args.llr_step)


def _write(data: bytes | str, out: str | None) -> None:
    if isinstance(data, str):
        data = data.encode()
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = load_sweep_config(args.config)
    if args.workers is not None:
        cfg.workers = args.workers
    points = run_fer_sweep(cfg)
    _write(emit_results(points, args.format), args.out)
    return 0


def _read_llrs(path: str) -> np.ndarray:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    vals = []
    for k, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.append(int(line))
        except ValueError:
            raise CliError(f"line {k}: expected an integer LLR, got {line!r}") from None
    return np.array(vals, dtype=np.int64)


def cmd_decode(args) -> int:
    code = load_code(args.code)
    config = _config_from(args)
    if args.schedule:
        config = config.with_schedule(Schedule.load(args.schedule).orders)
    tables = None
    if config.algorithm is Algorithm.MS_RCQ:
        if args.tables:
            tables = RcqTables.load(args.tables)
        else:
            tables = identity_tables(config.bc, config.bv, config.imax, code.num_layers)
    llrs = _read_llrs(args.llrs)
    if config.algorithm.is_float:
        llrs = llrs * config.llr_step
    if llrs.size != code.n:
        raise CliError(f"expected {code.n} LLRs for code {code.name}, read {llrs.size}")
    res = decode(code, config, llrs, tables)
    lines = [
        f"converged {int(res.converged)}",
        f"iterations {res.iterations_used}",
        f"syndrome_weight {int(res.syndrome_weight_trace[res.iterations_used - 1])}",
        "bits " + "".join(str(int(b)) for b in res.hard_bits),
    ]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_design(args) -> int:
    code = load_code(args.code)
    bv = args.bv if args.bv is not None else 8
    if args.method == "sequential":
        tables = design_sequential(code, args.bc, bv, args.ebno, args.frames, imax=args.imax,
                                   llr_step=args.llr_step, seed=args.seed, recon_cap=args.recon_cap)
    else:
        tables = design_from_pilot(code, args.bc, bv, args.ebno, args.frames, imax=args.imax,
                                   llr_step=args.llr_step, seed=args.seed, recon=args.recon)
    tables.save(args.out)
    print(f"wrote {args.out}: bc={tables.bc} bv={tables.bv} imax={tables.imax} "
          f"layers={tables.num_layers}", file=sys.stderr)
    return 0


def cmd_schedule(args) -> int:
    code = load_code(args.code)
    params = PipelineParams(args.depth, args.gap)
    if args.verify is not None:
        sched = Schedule.default(code) if args.verify == "default" else Schedule.load(args.verify)
        bad = verify_schedule(code, sched, params)
        if not bad:
            print("clean")
            return 0
        for v in bad:
            print(f"violation layer {v.layer} column {v.block_col} slack {v.slack}")
        return 1
    sched = find_hazard_free_schedule(code, params)
    _write(sched.to_text(), args.out)
    print(f"stalls {sum(sched.stalls)} cycles_per_iteration "
          f"{cycles_per_iteration(code, sched, params)}", file=sys.stderr)
    return 0


def cmd_resources(args) -> int:
    code = load_code(args.code)
    config = DecoderConfig(Algorithm.MS_RCQ, bc=args.bc, bv=args.bv, imax=args.imax)
    w = args.w if args.w is not None else config.bv - 1
    rows = compare_methods(code, config, w, args.batch, rom_share=args.rom_share)
    _write(render_csv(rows) if args.format == "csv" else render_text(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lrcq", description="Layered OMS / RCQ LDPC decoder lab")
    sub = ap.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("simulate", help="FER/BER sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decode", help="decode one frame of integer LLRs")
    p.add_argument("--code", required=True, help="code file or builtin name")
    p.add_argument("--llrs", required=True, help="one integer LLR per line, '-' for stdin")
    _decoder_args(p)
    p.add_argument("--tables", default=None, help="RCQ table file (identity tables if omitted)")
    p.add_argument("--schedule", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("design-rcq", help="design RCQ thresholds and reconstructions")
    p.add_argument("--code", required=True)
    p.add_argument("--bc", type=int, default=4)
    p.add_argument("--bv", type=int, default=8)
    p.add_argument("--ebno", type=float, required=True, help="design Eb/N0 in dB")
    p.add_argument("--frames", type=int, default=2000)
    p.add_argument("--imax", type=int, default=16)
    p.add_argument("--llr-step", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=["sequential", "pilot"], default="sequential")
    p.add_argument("--recon", choices=["cluster", "cn_output"], default="cluster",
                   help="reconstruction rule for --method pilot")
    p.add_argument("--recon-cap", type=int, default=None,
                   help="largest reconstruction for --method sequential")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("schedule", help="emit or verify a hazard-free circulant schedule")
    p.add_argument("--code", required=True)
    p.add_argument("--depth", type=int, default=0, help="pipeline depth D")
    p.add_argument("--gap", type=int, default=0, help="inter-layer gap G")
    p.add_argument("--verify", nargs="?", const="default", default=None,
                   help="verify a schedule file (the default order if no file is given)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("resources", help="parameter-delivery cost comparison")
    p.add_argument("--code", required=True)
    p.add_argument("--bc", type=int, default=4)
    p.add_argument("--bv", type=int, default=8)
    p.add_argument("--imax", type=int, default=16)
    p.add_argument("--w", type=int, default=None, help="bits per parameter (default bv-1)")
    p.add_argument("--batch", type=int, default=1, help="dribble transfer width")
    p.add_argument("--rom-share", type=int, default=1)
    p.add_argument("--format", choices=["csv", "text"], default="text")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_resources)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError, IndexError, OSError) as exc:
        print(f"lrcq {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
