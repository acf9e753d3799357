"""Offline RCQ table design from empirical message histograms.

A pilot floating-point MinSum decoder runs on all-zero frames at the design
SNR. For every (iteration, layer) the VN-to-CN values are binned on the
integer LLR grid. Thresholds are then chosen to maximize the mutual
information between the code bit and the quantized (sign, cluster) message,
by exact dynamic programming over contiguous magnitude partitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelConfig, quantize_llr, simulate_frames
from .code import QcCode
from .decoder import (
    Algorithm, DecoderConfig, LayerTrace, _Kernel, _layer_step, decode_batch, layer_plan, limit,
)
from .rcq import RcqTables


class DesignError(ValueError):
    pass


@dataclass
class MessageHistogram:
    """Counts of VN-to-CN values given transmitted bit 0.

    ``counts[i - 1, l, k]`` counts value ``k - vmax`` (signed, LLR-step units) at
    iteration i and layer l; there are 2^bv - 1 bins.
    """

    bv: int
    counts: np.ndarray
    layer_degrees: tuple[int, ...]

    @property
    def vmax(self) -> int:
        return limit(self.bv)

    @property
    def imax(self) -> int:
        return self.counts.shape[0]

    @property
    def num_layers(self) -> int:
        return self.counts.shape[1]

    @property
    def bit0(self) -> np.ndarray:
        return self.counts

    @property
    def bit1(self) -> np.ndarray:
        """Counts given bit 1, by sign symmetry of the channel and decoder."""
        return self.counts[..., ::-1]

    def __add__(self, other: "MessageHistogram") -> "MessageHistogram":
        if (self.bv, self.counts.shape, self.layer_degrees) != (
            other.bv, other.counts.shape, other.layer_degrees
        ):
            raise ValueError("cannot merge histograms of different shape")
        return MessageHistogram(self.bv, self.counts + other.counts, self.layer_degrees)


def collect_histograms(
    code: QcCode,
    pilot_config: DecoderConfig,
    design_ebno_db: float,
    frames: int,
    *,
    llr_step: Optional[float] = None,
    bv: int = 8,
    seed: int = 0,
    stream_id: int = 0,
    batch: int = 500,
    noiseless: bool = False,
) -> MessageHistogram:
    """Histogram pre-quantization VN-to-CN values of a float pilot decoder."""
    if frames < 1:
        raise DesignError("need at least one pilot frame")
    if not pilot_config.algorithm.is_float:
        raise DesignError("pilot decoder must be a floating-point reference")
    step = pilot_config.llr_step if llr_step is None else llr_step
    vmax = limit(bv)
    counts = np.zeros((pilot_config.imax, code.num_layers, 2 * vmax + 1), dtype=np.int64)
    channel = ChannelConfig(design_ebno_db, code.design_rate, step, bv, seed, stream_id, noiseless)

    def observe(tr: LayerTrace):
        q = quantize_llr(tr.vmn, step, bv)
        counts[tr.iteration - 1, tr.layer] += np.bincount(
            (np.asarray(q) + vmax).ravel(), minlength=2 * vmax + 1
        )

    for start in range(0, frames, batch):
        idx = range(start, min(frames, start + batch))
        llrs = simulate_frames(code.n, channel, idx)
        decode_batch(code, pilot_config, llrs, observer=observe)
    degrees = tuple(code.layer_degree(l) for l in range(code.num_layers))
    return MessageHistogram(bv, counts, degrees)


# -- mutual information over magnitude partitions ---------------------------


def _xlogy_ratio(a, b):
    """a * log(2a / (a + b)), zero where a == 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a > 0, a * np.log(2 * a / (a + b)), 0.0)
    return out


def magnitude_masses(bit0_counts) -> tuple[np.ndarray, np.ndarray]:
    """Per-magnitude probability of a positive (p) and negative (q) value given bit 0.

    Zero is sign-ambiguous and split evenly, keeping the mirrored distributions
    exactly symmetric.
    """
    c = np.asarray(bit0_counts, dtype=np.float64)
    total = c.sum()
    if total <= 0:
        raise DesignError("empty histogram")
    c = c / total
    vmax = (len(c) - 1) // 2
    p = c[vmax:].copy()
    q = np.concatenate(([c[vmax]], c[:vmax][::-1]))
    p[0] = q[0] = c[vmax] / 2
    return p, q


def partition_information(p, q, thresholds) -> float:
    """I(bit; sign, cluster) in nats for clusters [0,t1), [t1,t2), ..., [tk, end]."""
    edges = np.concatenate(([0], np.asarray(thresholds, dtype=np.int64), [len(p)]))
    P = np.add.reduceat(p, edges[:-1])
    Q = np.add.reduceat(q, edges[:-1])
    return float(np.sum(_xlogy_ratio(P, Q) + _xlogy_ratio(Q, P)))


def optimal_partition(p, q, clusters: int) -> tuple[np.ndarray, float]:
    """Exact DP for the mutual-information-maximizing contiguous partition.

    Returns the ``clusters - 1`` thresholds (bin indices where a new cluster
    starts) and the achieved information. Ties go to the smallest thresholds.
    """
    M = len(p)
    if clusters > M:
        raise DesignError(f"cannot split {M} magnitude bins into {clusters} nonempty clusters")
    cp = np.concatenate(([0.0], np.cumsum(p)))
    cq = np.concatenate(([0.0], np.cumsum(q)))
    # gain[a, b] = information of the cluster covering bins a..b-1
    P = cp[None, :] - cp[:, None]
    Q = cq[None, :] - cq[:, None]
    P = np.clip(P, 0, None)
    Q = np.clip(Q, 0, None)
    gain = _xlogy_ratio(P, Q) + _xlogy_ratio(Q, P)

    neg = -np.inf
    # best[k, b]: best information covering bins 0..b-1 with k clusters
    best = np.full((clusters + 1, M + 1), neg)
    arg = np.zeros((clusters + 1, M + 1), dtype=np.int64)
    best[1, 1:] = gain[0, 1:]
    for k in range(2, clusters + 1):
        for b in range(k, M + 1):
            cand = best[k - 1, k - 1 : b] + gain[k - 1 : b, b]
            j = int(np.argmax(cand))
            best[k, b] = cand[j]
            arg[k, b] = j + k - 1
    th = []
    b = M
    for k in range(clusters, 1, -1):
        a = arg[k, b]
        th.append(a)
        b = a
    return np.array(th[::-1], dtype=np.int64), float(best[clusters, M])


def brute_force_partition(p, q, clusters: int) -> tuple[np.ndarray, float]:
    """Exhaustive search over all threshold placements (small instances only)."""
    from itertools import combinations

    best, best_th = -np.inf, None
    for th in combinations(range(1, len(p)), clusters - 1):
        val = partition_information(p, q, th)
        if val > best:
            best, best_th = val, th
    return np.array(best_th, dtype=np.int64), best


def cluster_llrs(p, q, thresholds) -> np.ndarray:
    """Natural-log LLR of each positive cluster, log P(cluster|0)/P(cluster|1)."""
    edges = np.concatenate(([0], np.asarray(thresholds, dtype=np.int64), [len(p)]))
    P = np.add.reduceat(p, edges[:-1])
    Q = np.add.reduceat(q, edges[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.log(P) - np.log(Q)
    llr[(P == 0) & (Q == 0)] = 0.0
    return llr


def cn_output_llrs(p, q, thresholds, degree: int) -> np.ndarray:
    """LLR of each MinSum output index for a check of the given degree.

    Inputs are taken as independent with the quantized (sign, cluster) law;
    the output index is the minimum over ``degree - 1`` of them and its sign
    is their product.
    """
    edges = np.concatenate(([0], np.asarray(thresholds, dtype=np.int64), [len(p)]))
    P = np.add.reduceat(p, edges[:-1])
    Q = np.add.reduceat(q, edges[:-1])
    # tail sums over clusters >= k
    a = np.concatenate((np.cumsum((P + Q)[::-1])[::-1], [0.0]))
    b = np.concatenate((np.cumsum((P - Q)[::-1])[::-1], [0.0]))
    d = degree - 1
    plus = (a**d + b**d) / 2
    minus = (a**d - b**d) / 2
    out_p = plus[:-1] - plus[1:]
    out_m = minus[:-1] - minus[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        llr = np.log(out_p) - np.log(out_m)
    llr[(out_p <= 0) & (out_m <= 0)] = 0.0
    return llr


def _recon_values(llr, llr_step: float, vmax: int) -> np.ndarray:
    mag = np.abs(llr) / llr_step
    mag = np.where(np.isfinite(mag), mag, vmax)
    r = np.floor(np.minimum(mag, vmax) + 0.5).astype(np.int64)
    return np.maximum.accumulate(r)


def design_tables(
    hist: MessageHistogram,
    bc: int,
    bv: Optional[int] = None,
    llr_step: float = 0.5,
    *,
    recon: str = "cluster",
) -> RcqTables:
    """MI-optimal thresholds and reconstruction values for every (iteration, layer).

    ``recon="cluster"`` reconstructs index j as the LLR of input cluster j;
    ``recon="cn_output"`` uses the LLR of a MinSum check output of index j,
    accounting for the layer's check degree.
    """
    bv = hist.bv if bv is None else bv
    if bv != hist.bv:
        raise DesignError(f"histogram collected for bv={hist.bv}, asked for bv={bv}")
    if recon not in ("cluster", "cn_output"):
        raise ValueError(f"unknown reconstruction rule {recon!r}")
    k = 2 ** (bc - 1)
    vmax = limit(bv)
    th_all = np.zeros((hist.imax, hist.num_layers, k - 1), dtype=np.int64)
    re_all = np.zeros((hist.imax, hist.num_layers, k), dtype=np.int64)
    for i in range(hist.imax):
        for l in range(hist.num_layers):
            cell = hist.counts[i, l]
            if cell.sum() == 0:
                raise DesignError(f"empty histogram at iteration {i + 1}, layer {l}")
            if cell.sum() == cell[vmax]:
                raise DesignError(f"histogram at iteration {i + 1}, layer {l} has only zero magnitudes")
            p, q = magnitude_masses(cell)
            th, _ = optimal_partition(p, q, k)
            if recon == "cluster":
                llr = cluster_llrs(p, q, th)
            else:
                llr = cn_output_llrs(p, q, th, hist.layer_degrees[l])
            th_all[i, l] = th
            re_all[i, l] = _recon_values(llr, llr_step, vmax)
    return RcqTables(bc, bv, th_all, re_all)


def design_from_pilot(
    code: QcCode,
    bc: int,
    bv: int,
    design_ebno_db: float,
    frames: int,
    *,
    imax: int = 16,
    llr_step: float = 0.5,
    seed: int = 0,
    recon: str = "cluster",
) -> RcqTables:
    pilot = DecoderConfig(Algorithm.FLOAT_MINSUM, imax=imax, llr_step=llr_step, early_stop=False)
    hist = collect_histograms(code, pilot, design_ebno_db, frames, bv=bv, seed=seed, stream_id=2**32 - 1)
    return design_tables(hist, bc, bv, llr_step, recon=recon)


# -- self-consistent design -----------------------------------------------------


class _GrowingTables:
    """Table stand-in the decoder kernel reads while entries are still being filled."""

    def __init__(self, thresholds, recons):
        self.thresholds = thresholds
        self.recons = recons

    def entry(self, iteration: int, layer: int):
        return self.thresholds[iteration - 1, layer], self.recons[iteration - 1, layer]


def default_recon_cap(bv: int) -> int:
    return limit(bv) // 4


def design_sequential(
    code: QcCode,
    bc: int,
    bv: int,
    design_ebno_db: float,
    frames: int,
    *,
    imax: int = 16,
    llr_step: float = 0.5,
    seed: int = 0,
    recon_cap: Optional[int] = None,
) -> RcqTables:
    """Design tables by running the RCQ decoder itself, one layer at a time.

    Before layer l of iteration i is processed, the VN-to-CN values that the
    RCQ decoder (with all earlier entries already fixed) is about to send are
    histogrammed. Thresholds come from the MI-optimal partition of that
    histogram and reconstructions from the check-output LLR under the same
    quantized input law (``cn_output_llrs``). Index 0 reconstructs to 0 so an
    ambiguous sign never carries weight, and every reconstruction is capped at
    ``recon_cap`` (default 2^(bv-1)-1 // 4) to keep single updates from
    saturating the AP-LLR. All frames keep iterating; there is no early stop.
    """
    if frames < 1:
        raise DesignError("need at least one design frame")
    k = 2 ** (bc - 1)
    vmax = limit(bv)
    cap = default_recon_cap(bv) if recon_cap is None else int(recon_cap)
    if not 0 <= cap <= vmax:
        raise DesignError(f"recon_cap must lie in [0, {vmax}]")
    config = DecoderConfig(Algorithm.MS_RCQ, bc=bc, bv=bv, imax=imax, llr_step=llr_step,
                           early_stop=False)
    th_all = np.zeros((imax, code.num_layers, k - 1), dtype=np.int64)
    re_all = np.zeros((imax, code.num_layers, k), dtype=np.int64)
    kern = _Kernel(config, _GrowingTables(th_all, re_all))

    channel = ChannelConfig(design_ebno_db, code.design_rate, llr_step, bv, seed, 2**32 - 2)
    v = quantize_llr(simulate_frames(code.n, channel, range(frames)), llr_step, bv).astype(np.int32)
    v = np.atleast_2d(v)
    u = np.zeros((frames, code.num_circulants, code.lifting_size), dtype=np.int32)
    vmn = np.zeros_like(u)
    vidx = code.variable_index
    active = np.arange(frames)
    for it in range(1, imax + 1):
        for layer, cids in enumerate(layer_plan(code)):
            ids = np.asarray(cids)
            x = np.clip(v[:, vidx[ids]] - u[:, ids, :], -vmax, vmax)
            cell = np.bincount((x + vmax).ravel(), minlength=2 * vmax + 1)
            if cell.sum() == cell[vmax]:
                raise DesignError(f"iteration {it}, layer {layer}: all messages are zero")
            p, q = magnitude_masses(cell)
            th, _ = optimal_partition(p, q, k)
            llr = cn_output_llrs(p, q, th, len(cids))
            llr[0] = 0.0
            re = np.minimum(_recon_values(llr, llr_step, vmax), cap)
            th_all[it - 1, layer] = th
            re_all[it - 1, layer] = re
            kern.set_context(it, layer)
            _layer_step(kern, v, u, vmn, cids, vidx, it, layer, active, None, False)
    return RcqTables(bc, bv, th_all, re_all)
