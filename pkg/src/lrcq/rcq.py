"""RCQ parameter tables: per-(iteration, layer) thresholds and reconstruction values."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class TableError(ValueError):
    """Invalid or incompatible RCQ table."""


def quantize_msg(magnitude, thresholds):
    """Quantizer index = number of thresholds not exceeding the magnitude."""
    th = np.asarray(thresholds)
    idx = np.searchsorted(th, magnitude, side="right")
    if np.ndim(idx) == 0:
        return int(idx)
    return idx


def reconstruct_msg(index, recons):
    re = np.asarray(recons)
    if np.any(np.asarray(index) < 0) or np.any(np.asarray(index) >= len(re)):
        raise IndexError(f"reconstruction index {index} outside 0..{len(re) - 1}")
    out = re[index]
    if np.ndim(out) == 0:
        return int(out)
    return out


@dataclass(frozen=True, eq=False)
class RcqTables:
    """Thresholds and reconstructions for iterations 1..imax and layers 0..num_layers-1.

    ``thresholds[i - 1, l]`` holds the 2^(bc-1)-1 strictly increasing magnitudes of
    Q^(i,l); ``recons[i - 1, l]`` the 2^(bc-1) nondecreasing magnitudes of R^(i,l).
    All values are integers in units of the channel LLR step.
    """

    bc: int
    bv: int
    thresholds: np.ndarray
    recons: np.ndarray

    def __post_init__(self):
        th = np.array(self.thresholds, dtype=np.int64)
        re = np.array(self.recons, dtype=np.int64)
        th.setflags(write=False)
        re.setflags(write=False)
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "recons", re)
        self.validate()

    @property
    def imax(self) -> int:
        return self.thresholds.shape[0]

    @property
    def num_layers(self) -> int:
        return self.thresholds.shape[1]

    @property
    def levels(self) -> int:
        return 2 ** (self.bc - 1)

    def validate(self) -> None:
        bc, bv = self.bc, self.bv
        if bc < 2 or bv <= bc:
            raise TableError(f"invalid widths bc={bc}, bv={bv}")
        k = 2 ** (bc - 1)
        vmax = 2 ** (bv - 1) - 1
        th, re = self.thresholds, self.recons
        if th.ndim != 3 or re.ndim != 3 or th.shape[:2] != re.shape[:2]:
            raise TableError(f"table arrays have inconsistent shapes {th.shape} / {re.shape}")
        if th.shape[0] < 1 or th.shape[1] < 1:
            raise TableError("tables must cover at least one iteration and one layer")
        if th.shape[2] != k - 1:
            raise TableError(f"expected {k - 1} thresholds per entry, found {th.shape[2]}")
        if re.shape[2] != k:
            raise TableError(f"expected {k} reconstructions per entry, found {re.shape[2]}")
        for i in range(th.shape[0]):
            for l in range(th.shape[1]):
                t, r = th[i, l], re[i, l]
                where = f"iteration {i + 1}, layer {l}"
                for pos, x in enumerate(t):
                    if not 1 <= x <= vmax:
                        raise TableError(f"{where}: threshold {pos} = {x} outside [1, {vmax}]")
                    if pos and x <= t[pos - 1]:
                        raise TableError(f"{where}: threshold {pos} = {x} not above {t[pos - 1]}")
                for pos, x in enumerate(r):
                    if not 0 <= x <= vmax:
                        raise TableError(f"{where}: reconstruction {pos} = {x} outside [0, {vmax}]")
                    if pos and x < r[pos - 1]:
                        raise TableError(f"{where}: reconstruction {pos} = {x} below {r[pos - 1]}")

    def entry(self, iteration: int, layer: int) -> tuple[np.ndarray, np.ndarray]:
        """(thresholds, recons) for 1-based iteration and 0-based layer."""
        return self.thresholds[iteration - 1, layer], self.recons[iteration - 1, layer]

    def composed(self, iteration: int, layer: int) -> np.ndarray:
        """R(Q(m)) for every magnitude m in 0..2^(bv-1)-1."""
        th, re = self.entry(iteration, layer)
        return re[quantize_msg(np.arange(2 ** (self.bv - 1)), th)]

    def __eq__(self, other):
        if not isinstance(other, RcqTables):
            return NotImplemented
        return (
            self.bc == other.bc
            and self.bv == other.bv
            and np.array_equal(self.thresholds, other.thresholds)
            and np.array_equal(self.recons, other.recons)
        )

    # -- persistence --

    def to_json(self) -> str:
        doc = {
            "bc": self.bc,
            "bv": self.bv,
            "imax": self.imax,
            "num_layers": self.num_layers,
            "tables": [
                [
                    {"th": [int(x) for x in self.thresholds[i, l]],
                     "re": [int(x) for x in self.recons[i, l]]}
                    for l in range(self.num_layers)
                ]
                for i in range(self.imax)
            ],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RcqTables":
        doc = json.loads(text)
        try:
            bc, bv, imax, layers = (doc[k] for k in ("bc", "bv", "imax", "num_layers"))
            rows = doc["tables"]
        except KeyError as exc:
            raise TableError(f"table file missing field {exc}") from None
        for key, val in (("bc", bc), ("bv", bv), ("imax", imax), ("num_layers", layers)):
            if not isinstance(val, int) or isinstance(val, bool):
                raise TableError(f"field {key} must be an integer")
        if len(rows) != imax or any(len(r) != layers for r in rows):
            raise TableError(f"tables array must be {imax} x {layers}")
        th, re = [], []
        for i, row in enumerate(rows):
            th.append([])
            re.append([])
            for l, cell in enumerate(row):
                for key in ("th", "re"):
                    vals = cell.get(key)
                    if not isinstance(vals, list) or not all(
                        isinstance(v, int) and not isinstance(v, bool) for v in vals
                    ):
                        raise TableError(
                            f"iteration {i + 1}, layer {l}: {key!r} must be a list of integers"
                        )
                k = 2 ** (bc - 1)
                if len(cell["th"]) != k - 1 or len(cell["re"]) != k:
                    raise TableError(
                        f"iteration {i + 1}, layer {l}: expected {k - 1} thresholds and {k} "
                        f"reconstructions, found {len(cell['th'])} and {len(cell['re'])}"
                    )
                th[-1].append(cell["th"])
                re[-1].append(cell["re"])
        return cls(bc, bv, np.array(th).reshape(imax, layers, -1), np.array(re).reshape(imax, layers, -1))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RcqTables":
        return cls.from_json(Path(path).read_text())


def identity_tables(bc: int, bv: int, imax: int, num_layers: int) -> RcqTables:
    """Degenerate tables under which RCQ reduces to MinSum clipped at 2^(bc-1)-1."""
    if bc < 2:
        raise ValueError("identity tables need bc >= 2")
    k = 2 ** (bc - 1)
    th = np.broadcast_to(np.arange(1, k), (imax, num_layers, k - 1))
    re = np.broadcast_to(np.arange(k), (imax, num_layers, k))
    return RcqTables(bc, bv, th, re)
