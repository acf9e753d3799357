"""Closed-form resource model for RCQ parameter delivery.

Lookup keeps a Q-ROM and an R-ROM in every VN bank. Broadcast wires all
thresholds and reconstructions of the active (iteration, layer) from two
central ROMs to every bank. Dribble copies them serially into per-bank
registers. The counts below are closed-form wire and register formulas plus memory
accounting; nothing here models synthesis, placement or power.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Optional

from .code import QcCode
from .decoder import Algorithm, DecoderConfig


class Method(str, Enum):
    OMS_BASELINE = "OMS_BASELINE"
    LOOKUP = "LOOKUP"
    BROADCAST = "BROADCAST"
    DRIBBLE = "DRIBBLE"


@dataclass(frozen=True)
class ResourceEstimate:
    method: Method
    extra_param_roms: int = 0
    rom_bits_q: int = 0
    rom_bits_r: int = 0
    broadcast_wires: int = 0
    dribble_register_bits: int = 0
    dribble_transfer_wires: int = 0
    edge_memory_bits: int = 0
    apllr_memory_bits: int = 0


COUNT_FIELDS = [f.name for f in fields(ResourceEstimate) if f.name != "method"]


def parameter_count(bc: int) -> int:
    """Thresholds plus reconstructions per (iteration, layer): 2^bc - 1."""
    return (2 ** (bc - 1) - 1) + 2 ** (bc - 1)


def estimate(
    code: QcCode,
    config: DecoderConfig,
    method: Method | str,
    *,
    w: Optional[int] = None,
    batch: Optional[int] = None,
    tables_shape: Optional[tuple[int, int, int]] = None,
    rom_share: int = 1,
) -> ResourceEstimate:
    """Resource counts for one decoder configuration and delivery method.

    ``tables_shape`` is (bc, imax, num_layers) and defaults to the config and
    code. ``rom_share`` is the number of VN banks served by one Lookup ROM pair.
    """
    method = Method(method)
    L = code.lifting_size
    bc, bv = config.bc, config.bv
    if method is Method.OMS_BASELINE:
        if config.algorithm is not Algorithm.OMS:
            raise ValueError("OMS_BASELINE needs an OMS decoder config")
        u_bits = bc
    else:
        if config.algorithm is not Algorithm.MS_RCQ:
            raise ValueError(f"{method.value} needs an MS_RCQ decoder config")
        u_bits = bv  # reconstructed messages are stored at full width
    memory = dict(edge_memory_bits=code.num_edges * u_bits, apllr_memory_bits=code.n * bv)
    if method is Method.OMS_BASELINE:
        return ResourceEstimate(method, **memory)

    t_bc, imax, layers = tables_shape or (bc, config.imax, code.num_layers)
    if method is Method.LOOKUP:
        if rom_share < 1:
            raise ValueError("rom_share must be >= 1")
        banks = math.ceil(L / rom_share)
        return ResourceEstimate(
            method,
            extra_param_roms=2 * banks,
            rom_bits_q=banks * 2 ** (bv - 1) * imax * layers * (t_bc - 1),
            rom_bits_r=banks * 2 ** (t_bc - 1) * imax * layers * (bv - 1),
            **memory,
        )
    if w is None or w < 1:
        raise ValueError(f"{method.value} needs a positive parameter width w")
    per_bank = parameter_count(t_bc) * w
    if method is Method.BROADCAST:
        return ResourceEstimate(method, extra_param_roms=2, broadcast_wires=per_bank * L, **memory)
    if batch is None or batch < 1:
        raise ValueError("DRIBBLE needs a positive transfer batch width")
    return ResourceEstimate(
        method,
        extra_param_roms=2,
        dribble_register_bits=per_bank * L,
        dribble_transfer_wires=batch * L,
        **memory,
    )


BASELINE = DecoderConfig(Algorithm.OMS, bc=6, bv=8)


def compare_methods(
    code: QcCode,
    config: DecoderConfig,
    w: int,
    batch: int,
    *,
    baseline: DecoderConfig = BASELINE,
    rom_share: int = 1,
) -> list[dict]:
    """One row per method with absolute counts and deltas against the OMS baseline."""
    base = estimate(code, baseline, Method.OMS_BASELINE)
    rows = [base]
    for m in (Method.LOOKUP, Method.BROADCAST, Method.DRIBBLE):
        rows.append(estimate(code, config, m, w=w, batch=batch, rom_share=rom_share))
    out = []
    for est in rows:
        decoder = baseline.label if est.method is Method.OMS_BASELINE else config.label
        row = {"method": est.method.value, "decoder": decoder}
        for name in COUNT_FIELDS:
            row[name] = getattr(est, name)
        for name in COUNT_FIELDS:
            row["delta_" + name] = getattr(est, name) - getattr(base, name)
        out.append(row)
    return out


def render_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render_text(rows: list[dict]) -> str:
    cols = ["method", "decoder"] + COUNT_FIELDS
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.rjust(widths[c]) for c in cols)]
    for r in rows:
        lines.append("  ".join(str(r[c]).rjust(widths[c]) for c in cols))
    return "\n".join(lines) + "\n"
