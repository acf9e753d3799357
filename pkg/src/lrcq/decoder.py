"""Bit-accurate layered OMS / MinSum-RCQ decoder and a floating-point reference.

Two engines compute the same thing:

* ``wave`` walks each layer one circulant at a time, feeding every wave of L
  messages through per-check MIN1/MIN2/SIGN accumulators and then returning
  the CN-to-VN messages in the same order, as the VN banks and CN pipeline do.
* ``layer`` evaluates a whole layer at once with array reductions. It is the
  fast path used for simulation; argmin's first-occurrence rule reproduces the
  accumulator's MIN1 tie rule, so both engines agree bit for bit.

Integer messages live in units of the channel LLR step. All saturation is
symmetric, to +/-(2^(b-1)-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .code import QcCode, layer_circulants
from .rcq import RcqTables, TableError


class Algorithm(str, Enum):
    OMS = "OMS"
    MS_RCQ = "MS_RCQ"
    FLOAT_OMS = "FLOAT_OMS"
    FLOAT_MINSUM = "FLOAT_MINSUM"

    @property
    def is_float(self) -> bool:
        return self in (Algorithm.FLOAT_OMS, Algorithm.FLOAT_MINSUM)


# finite stand-in for infinite channel LLRs in the float reference
FLOAT_LLR_CAP = 1e30


def limit(bits: int) -> int:
    return 2 ** (bits - 1) - 1


@dataclass(frozen=True)
class DecoderConfig:
    algorithm: Algorithm = Algorithm.OMS
    bc: int = 6
    bv: Optional[int] = None
    offset_int: int = 1
    imax: int = 16
    # per layer, the block-column order in which circulants are processed
    schedule: Optional[tuple[tuple[int, ...], ...]] = None
    llr_step: float = 0.5
    early_stop: bool = True

    def __post_init__(self):
        alg = Algorithm(self.algorithm)
        object.__setattr__(self, "algorithm", alg)
        if self.bv is None:
            object.__setattr__(self, "bv", self.bc + 2 if alg is not Algorithm.MS_RCQ else 8)
        if self.schedule is not None:
            object.__setattr__(self, "schedule", tuple(tuple(int(c) for c in s) for s in self.schedule))
        if self.imax < 1:
            raise ValueError("imax must be >= 1")
        if self.offset_int < 0:
            raise ValueError("offset_int must be nonnegative")
        if not self.llr_step > 0:
            raise ValueError("llr_step must be positive")
        if alg is Algorithm.MS_RCQ:
            if self.bc not in (3, 4) or self.bv not in (8, 9):
                raise ValueError(f"MS_RCQ supports bc in {{3,4}} and bv in {{8,9}}, got ({self.bc},{self.bv})")
        elif not alg.is_float:
            if not 2 <= self.bc < self.bv <= 16:
                raise ValueError(f"need 2 <= bc < bv <= 16, got ({self.bc},{self.bv})")

    @property
    def alpha(self) -> float:
        """Offset in LLR units, used by the float reference."""
        if self.algorithm is Algorithm.FLOAT_MINSUM:
            return 0.0
        return self.offset_int * self.llr_step

    @property
    def label(self) -> str:
        alg = self.algorithm
        if alg is Algorithm.OMS:
            return f"OMS({self.bc},{self.bv})"
        if alg is Algorithm.MS_RCQ:
            return f"RCQ({self.bc},{self.bv})"
        return alg.value

    def with_schedule(self, schedule) -> "DecoderConfig":
        return replace(self, schedule=None if schedule is None else tuple(map(tuple, schedule)))


@dataclass
class CnAccumulator:
    """MIN1/MIN2/SIGN state for one check node."""

    min1: int
    min2: int
    min1_edge: Optional[int] = None
    sign: int = 0


def empty_accumulator(max_magnitude: int) -> CnAccumulator:
    return CnAccumulator(max_magnitude, max_magnitude, None, 0)


def cn_accumulate(acc: CnAccumulator, edge, sign: int, magnitude: int) -> CnAccumulator:
    """Fold one message into the accumulator.

    A magnitude only replaces MIN1 if strictly smaller, so the first edge
    reaching the minimum keeps MIN1 and later equal magnitudes go to MIN2.
    """
    if acc.min1_edge is None or magnitude < acc.min1:
        min2 = acc.min1 if acc.min1_edge is not None else acc.min2
        return CnAccumulator(magnitude, min2, edge, acc.sign ^ sign)
    return CnAccumulator(acc.min1, min(acc.min2, magnitude), acc.min1_edge, acc.sign ^ sign)


def cn_select(acc: CnAccumulator, edge) -> int:
    """Magnitude of the minimum over all other edges."""
    return acc.min2 if edge == acc.min1_edge else acc.min1


def clip_symmetric(value, bc: int):
    lim = limit(bc)
    if np.ndim(value) == 0:
        return int(min(max(int(value), -lim), lim))
    return np.clip(value, -lim, lim)


def hard_decision(v) -> np.ndarray:
    """Bit 1 iff the AP-LLR is negative; zero decides 0."""
    return (np.asarray(v) < 0).astype(np.uint8)


def syndrome_weights(code: QcCode, hard_bits) -> np.ndarray:
    """Number of unsatisfied checks for each row of a (B, n) bit array."""
    bits = np.atleast_2d(np.asarray(hard_bits, dtype=np.uint8))
    vidx = code.variable_index
    weight = np.zeros(bits.shape[0], dtype=np.int64)
    for layer in range(code.num_layers):
        parity = np.zeros((bits.shape[0], code.lifting_size), dtype=np.uint8)
        for j, _ in layer_circulants(code, layer):
            parity ^= bits[:, vidx[code.circulant_id[(layer, j)]]]
        weight += parity.sum(axis=1, dtype=np.int64)
    return weight


def syndrome_check(code: QcCode, hard_bits) -> tuple[bool, int]:
    bits = np.asarray(hard_bits)
    if bits.shape != (code.n,):
        raise ValueError(f"hard_bits must have length {code.n}")
    w = int(syndrome_weights(code, bits)[0])
    return w == 0, w


@dataclass
class DecodeState:
    """VN-bank memories: AP-LLRs, CN-to-VN edge messages, VN-to-CN scratch.

    ``u`` and ``vmn`` are indexed (circulant id, check offset within circulant).
    """

    v: np.ndarray
    u: np.ndarray
    vmn: np.ndarray


@dataclass
class DecodeResult:
    hard_bits: np.ndarray
    converged: bool
    iterations_used: int
    syndrome_weight_trace: list[int]
    state: Optional[DecodeState] = field(default=None, repr=False)


@dataclass
class BatchResult:
    hard_bits: np.ndarray  # (B, n) uint8
    converged: np.ndarray  # (B,) bool
    iterations: np.ndarray  # (B,) int
    syndrome_trace: np.ndarray  # (B, imax), -1 after termination
    v: np.ndarray  # (B, n) final AP-LLRs
    u: np.ndarray  # (B, num_circulants, L)
    vmn: np.ndarray  # (B, num_circulants, L)

    def __len__(self):
        return len(self.converged)

    def result(self, k: int) -> DecodeResult:
        trace = [int(x) for x in self.syndrome_trace[k] if x >= 0]
        return DecodeResult(
            self.hard_bits[k].copy(),
            bool(self.converged[k]),
            int(self.iterations[k]),
            trace,
            DecodeState(self.v[k].copy(), self.u[k].copy(), self.vmn[k].copy()),
        )


@dataclass
class LayerTrace:
    """What one layer of one iteration exchanged, for observers.

    Arrays are (frames, degree, L), aligned so that [:, k, r] is the edge of
    check r of the k-th processed circulant. ``cn_in`` is the signed message
    entering the CN pipeline: the clipped value for OMS, the signed quantizer
    index for RCQ and the raw value for the float reference. ``cn_out`` is the
    signed CN-to-VN message before reconstruction (OMS: after the offset).
    """

    iteration: int
    layer: int
    circulants: tuple[int, ...]
    frames: np.ndarray
    vmn: np.ndarray
    cn_in: np.ndarray
    cn_out: np.ndarray
    u: np.ndarray


Observer = Callable[[LayerTrace], None]


class DecodeError(ValueError):
    pass


def layer_plan(code: QcCode, schedule=None) -> list[tuple[int, ...]]:
    """Global circulant ids of each layer in processing order."""
    plan = []
    for layer in range(code.num_layers):
        cols = [j for j, _ in layer_circulants(code, layer)]
        if schedule is not None:
            if len(schedule) != code.num_layers:
                raise DecodeError(f"schedule covers {len(schedule)} layers, code has {code.num_layers}")
            order = list(schedule[layer])
            if sorted(order) != cols:
                raise DecodeError(f"schedule for layer {layer} is not a permutation of {cols}")
            cols = order
        plan.append(tuple(code.circulant_id[(layer, j)] for j in cols))
    return plan


class _Kernel:
    """Per-algorithm message arithmetic shared by both engines."""

    def __init__(self, config: DecoderConfig, tables: Optional[RcqTables]):
        self.alg = config.algorithm
        self.float = self.alg.is_float
        self.tables = tables
        if self.float:
            self.vlim = np.inf
            self.big = np.inf
            self.offset = config.alpha
            self.dtype = np.float64
        else:
            self.vlim = limit(config.bv)
            self.big = limit(config.bc)
            self.offset = config.offset_int if self.alg is Algorithm.OMS else 0
            self.dtype = np.int32
            if self.alg is Algorithm.MS_RCQ:
                self._qlut = {}
                self._recons = {}

    def saturate(self, x):
        if self.float:
            return x
        return np.clip(x, -self.vlim, self.vlim)

    def set_context(self, iteration: int, layer: int):
        if self.alg is Algorithm.MS_RCQ:
            key = (iteration, layer)
            if key not in self._qlut:
                th, re = self.tables.entry(iteration, layer)
                self._qlut[key] = np.searchsorted(th, np.arange(self.vlim + 1), side="right").astype(np.int32)
                self._recons[key] = re.astype(np.int32)
            self.qlut = self._qlut[key]
            self.re = self._recons[key]

    def to_cn(self, vmn):
        """Magnitude domain value sent to the CN (before sign split)."""
        mag = np.abs(vmn)
        if self.alg is Algorithm.OMS:
            return np.minimum(mag, self.big)
        if self.alg is Algorithm.MS_RCQ:
            return self.qlut[mag]
        return mag

    def from_cn(self, mag):
        """Post-selection processing: offset (OMS / float OMS) or reconstruction (RCQ)."""
        if self.alg is Algorithm.MS_RCQ:
            return mag, self.re[mag]
        if self.offset:
            zero = 0 if not self.float else 0.0
            mag = np.maximum(mag - self.offset, zero)
        return mag, mag


def _check_inputs(code, config, llrs, tables):
    llrs = np.asarray(llrs)
    if llrs.ndim != 2 or llrs.shape[1] != code.n:
        raise DecodeError(f"channel LLRs must have shape (frames, {code.n}), got {llrs.shape}")
    alg = config.algorithm
    if alg is Algorithm.MS_RCQ:
        if tables is None:
            raise TableError("MS_RCQ decoding needs RCQ tables")
        if tables.bc != config.bc or tables.bv != config.bv:
            raise TableError(
                f"tables are for ({tables.bc},{tables.bv}), decoder is ({config.bc},{config.bv})"
            )
        if tables.imax < config.imax or tables.num_layers != code.num_layers:
            raise TableError(
                f"tables cover {tables.imax} iterations x {tables.num_layers} layers; "
                f"need {config.imax} x {code.num_layers}"
            )
    elif tables is not None:
        raise TableError(f"{alg.value} does not use RCQ tables")
    if alg.is_float:
        x = np.nan_to_num(llrs.astype(np.float64), nan=0.0, posinf=FLOAT_LLR_CAP, neginf=-FLOAT_LLR_CAP)
        return x
    if not np.issubdtype(llrs.dtype, np.integer):
        if not np.all(np.equal(np.mod(llrs, 1), 0)):
            raise DecodeError("fixed-point decoders take integer channel LLRs")
    lim = limit(config.bv)
    if np.abs(llrs).max(initial=0) > lim:
        raise DecodeError(f"channel LLR outside the {config.bv}-bit range +/-{lim}")
    return llrs.astype(np.int32)


def decode_batch(
    code: QcCode,
    config: DecoderConfig,
    channel_llrs,
    tables: Optional[RcqTables] = None,
    *,
    engine: str = "layer",
    observer: Optional[Observer] = None,
    debug: bool = False,
) -> BatchResult:
    """Decode a (frames, n) batch of channel LLRs; frames stop independently."""
    llrs = _check_inputs(code, config, channel_llrs, tables)
    if engine not in ("layer", "wave"):
        raise ValueError(f"unknown engine {engine!r}")
    kern = _Kernel(config, tables)
    plan = layer_plan(code, config.schedule)
    vidx = code.variable_index
    B, n = llrs.shape
    C, L = code.num_circulants, code.lifting_size

    v_all = llrs.astype(kern.dtype, copy=True)
    u_all = np.zeros((B, C, L), dtype=kern.dtype)
    vmn_all = np.zeros((B, C, L), dtype=kern.dtype)
    converged = np.zeros(B, dtype=bool)
    iterations = np.full(B, config.imax, dtype=np.int64)
    trace = np.full((B, config.imax), -1, dtype=np.int64)

    active = np.arange(B)
    v, u, vmn = v_all, u_all, vmn_all
    step = _layer_step if engine == "layer" else _wave_step
    for it in range(1, config.imax + 1):
        for layer, cids in enumerate(plan):
            kern.set_context(it, layer)
            step(kern, v, u, vmn, cids, vidx, it, layer, active, observer, debug)
        w = syndrome_weights(code, hard_decision(v))
        trace[active, it - 1] = w
        done = w == 0
        if done.any():
            converged[active[done]] = True
            iterations[active[done]] = it
        if config.early_stop and done.any():
            keep = ~done
            v_all[active] = v
            u_all[active] = u
            vmn_all[active] = vmn
            active = active[keep]
            v, u, vmn = v[keep], u[keep], vmn[keep]
            if active.size == 0:
                break
    if active.size:
        v_all[active] = v
        u_all[active] = u
        vmn_all[active] = vmn
    if not config.early_stop:
        # without early exit a frame counts as converged only if the final word checks
        final = trace[:, -1] == 0
        converged = final
        iterations = np.full(B, config.imax, dtype=np.int64)
    return BatchResult(hard_decision(v_all), converged, iterations, trace, v_all, u_all, vmn_all)


def _layer_step(kern, v, u, vmn, cids, vidx, it, layer, active, observer, debug):
    cids = np.asarray(cids)
    idx = vidx[cids]  # (deg, L)
    x = kern.saturate(v[:, idx] - u[:, cids, :])
    vmn[:, cids, :] = x
    mag = kern.to_cn(x)
    neg = x < 0
    deg = len(cids)
    first = np.argmin(mag, axis=1)  # first occurrence in processing order
    min1 = np.take_along_axis(mag, first[:, None, :], axis=1)
    is_first = np.arange(deg)[None, :, None] == first[:, None, :]
    min2 = np.where(is_first, kern.big, mag).min(axis=1, keepdims=True)
    parity = np.logical_xor.reduce(neg, axis=1, keepdims=True)
    sel = np.where(is_first, min2, min1)
    out_mag, recon = kern.from_cn(sel)
    sgn = parity ^ neg
    new_u = np.where(sgn, -recon, recon).astype(kern.dtype, copy=False)
    u[:, cids, :] = new_u
    newv = kern.saturate(x + new_u)
    v[:, idx] = newv
    if debug:
        _check_ranges(kern, newv, new_u)
    if observer is not None:
        observer(LayerTrace(it, layer, tuple(int(c) for c in cids), active, x,
                            np.where(neg, -mag, mag), np.where(sgn, -out_mag, out_mag), new_u))


def _wave_step(kern, v, u, vmn, cids, vidx, it, layer, active, observer, debug):
    B, L = v.shape[0], vidx.shape[1]
    min1 = np.full((B, L), kern.big, dtype=kern.dtype)
    min2 = np.full((B, L), kern.big, dtype=kern.dtype)
    min1_edge = np.full((B, L), -1, dtype=np.int64)
    sign = np.zeros((B, L), dtype=bool)
    msgs = []
    # read phase: one circulant per cycle into the MIN1/MIN2/SIGN accumulators
    for k, c in enumerate(cids):
        x = kern.saturate(v[:, vidx[c]] - u[:, c, :])
        vmn[:, c, :] = x
        mag = kern.to_cn(x)
        neg = x < 0
        smaller = (mag < min1) | (min1_edge < 0)
        min2 = np.where(smaller, min1, np.minimum(min2, mag))
        min1 = np.where(smaller, mag, min1)
        min1_edge = np.where(smaller, k, min1_edge)
        sign ^= neg
        msgs.append((x, mag, neg))
    # writeback phase: same order
    outs = []
    for k, c in enumerate(cids):
        x, mag, neg = msgs[k]
        sel = np.where(min1_edge == k, min2, min1)
        out_mag, recon = kern.from_cn(sel)
        sgn = sign ^ neg
        new_u = np.where(sgn, -recon, recon).astype(kern.dtype, copy=False)
        u[:, c, :] = new_u
        newv = kern.saturate(x + new_u)
        v[:, vidx[c]] = newv
        if debug:
            _check_ranges(kern, newv, new_u)
        outs.append((np.where(sgn, -out_mag, out_mag), new_u))
    if observer is not None:
        stack = lambda seq: np.stack(seq, axis=1)
        observer(LayerTrace(
            it, layer, tuple(int(c) for c in cids), active,
            stack([m[0] for m in msgs]),
            stack([np.where(m[2], -m[1], m[1]) for m in msgs]),
            stack([o[0] for o in outs]),
            stack([o[1] for o in outs]),
        ))


def _check_ranges(kern, v, u):
    if kern.float:
        return
    lim = kern.vlim
    assert np.abs(v).max(initial=0) <= lim, "AP-LLR left the bv-bit range"
    assert np.abs(u).max(initial=0) <= lim, "edge message left the bv-bit range"


def decode(
    code: QcCode,
    config: DecoderConfig,
    channel_llrs,
    tables: Optional[RcqTables] = None,
    **kwargs,
) -> DecodeResult:
    """Decode one frame of channel LLRs (integers for fixed-point algorithms)."""
    llrs = np.asarray(channel_llrs)
    if llrs.shape != (code.n,):
        raise DecodeError(f"expected {code.n} channel LLRs, got shape {llrs.shape}")
    return decode_batch(code, config, llrs[None, :], tables, **kwargs).result(0)


def reference_decode(code: QcCode, config: DecoderConfig, channel_llrs, **kwargs) -> DecodeResult:
    """Real-valued layered MinSum / OMS with the same schedule and update order."""
    if not config.algorithm.is_float:
        raise DecodeError("reference_decode needs FLOAT_OMS or FLOAT_MINSUM")
    return decode(code, config, np.asarray(channel_llrs, dtype=np.float64), **kwargs)


def reference_decode_batch(code: QcCode, config: DecoderConfig, channel_llrs, **kwargs) -> BatchResult:
    if not config.algorithm.is_float:
        raise DecodeError("reference decoding needs FLOAT_OMS or FLOAT_MINSUM")
    return decode_batch(code, config, np.asarray(channel_llrs, dtype=np.float64), **kwargs)
