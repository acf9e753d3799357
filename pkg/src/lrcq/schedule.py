"""Circulant ordering for a layer-overlapped pipeline without RAW hazards.

Timing model: the reads of a layer occupy consecutive cycles, one circulant
per cycle, after ``G`` idle cycles and the layer's stall cycles. Writebacks
follow in read order, each completing ``D + n_l`` cycles after its read, where
``n_l`` is the number of circulants in the layer. A block-column present in
two consecutive layers (including last layer -> first layer of the next
iteration) is a hazard when the later layer reads it no later than the
earlier layer's writeback completes:

    j_r + G + stalls <= j_w + D

with ``j_w`` the column's position in the earlier layer and ``j_r`` its
position in the later one.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .code import QcCode, layer_circulants


@dataclass(frozen=True)
class PipelineParams:
    depth_d: int = 0
    inter_layer_gap: int = 0

    def __post_init__(self):
        if self.depth_d < 0 or self.inter_layer_gap < 0:
            raise ValueError("pipeline depth and inter-layer gap must be nonnegative")


@dataclass(frozen=True)
class Schedule:
    orders: tuple[tuple[int, ...], ...]
    stalls: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(tuple(int(c) for c in o) for o in self.orders))
        object.__setattr__(self, "stalls", tuple(int(s) for s in self.stalls))
        if len(self.orders) != len(self.stalls):
            raise ValueError("one stall count per layer required")
        if any(s < 0 for s in self.stalls):
            raise ValueError("stall counts must be nonnegative")

    @classmethod
    def default(cls, code: QcCode) -> "Schedule":
        orders = [tuple(j for j, _ in layer_circulants(code, l)) for l in range(code.num_layers)]
        return cls(tuple(orders), (0,) * code.num_layers)

    def with_stalls(self, stalls) -> "Schedule":
        return Schedule(self.orders, tuple(stalls))

    def to_text(self) -> str:
        lines = [f"# {len(self.orders)} layers: layer <index> stalls <count> order <block columns>"]
        for l, (order, s) in enumerate(zip(self.orders, self.stalls)):
            lines.append(f"layer {l} stalls {s} order " + " ".join(map(str, order)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Schedule":
        entries = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tok = line.split()
            if len(tok) < 5 or tok[0] != "layer" or tok[2] != "stalls" or tok[4] != "order":
                raise ValueError(f"malformed schedule line {line!r}")
            layer = int(tok[1])
            if layer in entries:
                raise ValueError(f"layer {layer} listed twice")
            entries[layer] = (tuple(int(x) for x in tok[5:]), int(tok[3]))
        if sorted(entries) != list(range(len(entries))):
            raise ValueError("schedule layers must be numbered 0..N-1 without gaps")
        orders = [entries[l][0] for l in range(len(entries))]
        stalls = [entries[l][1] for l in range(len(entries))]
        return cls(tuple(orders), tuple(stalls))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Schedule":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class Violation:
    layer: int  # the reading (later) layer
    block_col: int
    slack: int


def _check_matches(code: QcCode, schedule: Schedule) -> None:
    if len(schedule.orders) != code.num_layers:
        raise ValueError(f"schedule has {len(schedule.orders)} layers, code has {code.num_layers}")
    for l, order in enumerate(schedule.orders):
        cols = sorted(j for j, _ in layer_circulants(code, l))
        if sorted(order) != cols:
            raise ValueError(f"schedule order for layer {l} is not a permutation of {cols}")


def transition_slacks(schedule: Schedule, params: PipelineParams, layer: int) -> dict[int, int]:
    """Slack of every column shared between the previous layer (cyclically) and `layer`."""
    nl = len(schedule.orders)
    prev = schedule.orders[(layer - 1) % nl]
    cur = schedule.orders[layer]
    pos_w = {c: j for j, c in enumerate(prev)}
    out = {}
    for j_r, c in enumerate(cur):
        if c in pos_w:
            out[c] = (j_r + params.inter_layer_gap + schedule.stalls[layer]
                      - pos_w[c] - params.depth_d - 1)
    return out


def verify_schedule(code: QcCode, schedule: Schedule, params: PipelineParams) -> list[Violation]:
    _check_matches(code, schedule)
    bad = []
    for l in range(code.num_layers):
        for c, slack in transition_slacks(schedule, params, l).items():
            if slack < 0:
                bad.append(Violation(l, c, slack))
    return bad


def minimal_stalls(schedule: Schedule, params: PipelineParams) -> tuple[int, ...]:
    """Smallest per-layer stall counts that clear every negative slack."""
    zero = schedule.with_stalls((0,) * len(schedule.orders))
    return tuple(
        max([0] + [-s for s in transition_slacks(zero, params, l).values()])
        for l in range(len(schedule.orders))
    )


def _greedy_order(code: QcCode, layer: int, prev_order, next_cols) -> tuple[int, ...]:
    cols = [j for j, _ in layer_circulants(code, layer)]
    if prev_order is not None:
        pos = {c: k for k, c in enumerate(prev_order)}
        late = sorted((c for c in cols if c in pos), key=lambda c: (pos[c], c))
    else:
        late = []
    early = sorted(c for c in cols if c in next_cols and c not in late)
    middle = sorted(c for c in cols if c not in late and c not in early)
    return tuple(early + middle + late)


def find_hazard_free_schedule(code: QcCode, params: PipelineParams) -> Schedule:
    """Greedy circulant ordering followed by minimal stall insertion.

    Columns shared with the previous layer go last, in the previous layer's
    writeback order; columns shared with the next layer go first; the rest
    fill the middle. The first layer has no ordered predecessor when it is
    built, so only its next-layer rule applies. A default column order that
    is already hazard-free is returned unchanged.
    """
    nl = code.num_layers
    default = Schedule.default(code)
    if not verify_schedule(code, default, params):
        return default
    cols = [set(j for j, _ in layer_circulants(code, l)) for l in range(nl)]
    orders: list[tuple[int, ...]] = []
    for l in range(nl):
        prev = orders[l - 1] if l > 0 else None
        orders.append(_greedy_order(code, l, prev, cols[(l + 1) % nl]))
    sched = Schedule(tuple(orders), (0,) * nl)
    sched = sched.with_stalls(minimal_stalls(sched, params))
    assert not verify_schedule(code, sched, params)
    return sched


def cycles_per_iteration(code: QcCode, schedule: Schedule, params: PipelineParams) -> int:
    _check_matches(code, schedule)
    total = sum(len(o) + s + params.inter_layer_gap for o, s in zip(schedule.orders, schedule.stalls))
    return total + params.depth_d + len(schedule.orders[-1])
