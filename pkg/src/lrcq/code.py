"""Quasi-cyclic LDPC code model: base matrices, layers, expansion, file formats."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

ZERO_CIRCULANT = -1


class CodeFormatError(ValueError):
    """Raised when a code description is malformed or violates a code invariant."""


@dataclass(frozen=True)
class EdgeIndex:
    block_row: int
    block_col: int
    offset_in_circulant: int


def circulant_column(row_offset: int, shift: int, L: int) -> int:
    """Column of the single 1 in row `row_offset` of a circulant shifted by `shift`.

    A circulant with shift p has a 1 at (r, c) iff c = (r + p) mod L.
    """
    return (row_offset + shift) % L


@dataclass(frozen=True, eq=False)
class QcCode:
    """QC-LDPC code given by its lifting size and base matrix of circulant shifts.

    Each block-row is one decoding layer. Entries equal to -1 are zero circulants.
    """

    lifting_size: int
    base_matrix: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        base = np.array(self.base_matrix, dtype=np.int64)
        if base.ndim != 2 or base.size == 0:
            raise CodeFormatError("base matrix must be a nonempty 2-D grid")
        L = int(self.lifting_size)
        if L < 1:
            raise CodeFormatError(f"lifting size must be positive, got {L}")
        bad = (base != ZERO_CIRCULANT) & ((base < 0) | (base >= L))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise CodeFormatError(
                f"shift {base[i, j]} at block ({i}, {j}) out of range for L={L}"
            )
        degrees = (base != ZERO_CIRCULANT).sum(axis=1)
        for i, d in enumerate(degrees):
            if d < 2:
                raise CodeFormatError(
                    f"block-row {i} has {d} nonzero circulant(s); check degree must be >= 2"
                )
        base.setflags(write=False)
        object.__setattr__(self, "base_matrix", base)
        object.__setattr__(self, "lifting_size", L)

    def __eq__(self, other):
        if not isinstance(other, QcCode):
            return NotImplemented
        return self.lifting_size == other.lifting_size and np.array_equal(
            self.base_matrix, other.base_matrix
        )

    def __hash__(self):
        return hash((self.lifting_size, self.base_matrix.tobytes(), self.base_matrix.shape))

    @property
    def block_rows(self) -> int:
        return self.base_matrix.shape[0]

    @property
    def block_cols(self) -> int:
        return self.base_matrix.shape[1]

    @property
    def num_layers(self) -> int:
        return self.block_rows

    @property
    def n(self) -> int:
        return self.block_cols * self.lifting_size

    @property
    def m(self) -> int:
        return self.block_rows * self.lifting_size

    @property
    def design_rate(self) -> float:
        return 1.0 - self.m / self.n

    @cached_property
    def circulants(self) -> tuple[tuple[int, int, int], ...]:
        """All nonzero circulants as (block_row, block_col, shift), row-major.

        The position of a circulant in this tuple is its global circulant id;
        edge (id, r) is the r-th check of that circulant.
        """
        return tuple(
            (int(i), int(j), int(self.base_matrix[i, j]))
            for i, j in zip(*np.nonzero(self.base_matrix != ZERO_CIRCULANT))
        )

    @property
    def num_circulants(self) -> int:
        return len(self.circulants)

    @property
    def num_edges(self) -> int:
        return self.num_circulants * self.lifting_size

    def layer_degree(self, layer: int) -> int:
        return len(layer_circulants(self, layer))

    @cached_property
    def circulant_id(self) -> dict[tuple[int, int], int]:
        """Map (block_row, block_col) -> global circulant id."""
        return {(i, j): k for k, (i, j, _) in enumerate(self.circulants)}

    @cached_property
    def variable_index(self) -> np.ndarray:
        """(num_circulants, L) array: variable attached to check offset r of each circulant."""
        L = self.lifting_size
        r = np.arange(L)
        out = np.empty((self.num_circulants, L), dtype=np.int64)
        for k, (_, j, p) in enumerate(self.circulants):
            out[k] = j * L + circulant_column(r, p, L)
        out.setflags(write=False)
        return out

    def edge(self, circulant: int, offset: int) -> EdgeIndex:
        i, j, _ = self.circulants[circulant]
        if not 0 <= offset < self.lifting_size:
            raise IndexError(f"offset {offset} outside circulant of size {self.lifting_size}")
        return EdgeIndex(i, j, offset)


def layer_circulants(code: QcCode, layer: int) -> list[tuple[int, int]]:
    """Nonzero circulants of a block-row as (block_col, shift), in column order."""
    if not 0 <= layer < code.block_rows:
        raise IndexError(f"layer {layer} out of range (code has {code.block_rows} layers)")
    row = code.base_matrix[layer]
    return [(int(j), int(row[j])) for j in np.flatnonzero(row != ZERO_CIRCULANT)]


def expand_parity_check(code: QcCode) -> list[tuple[int, int]]:
    """All (check, variable) pairs of the lifted parity-check matrix."""
    L = code.lifting_size
    pairs = []
    for i, j, p in code.circulants:
        for r in range(L):
            pairs.append((i * L + r, j * L + circulant_column(r, p, L)))
    return pairs


def parity_check_matrix(code: QcCode) -> np.ndarray:
    """Dense 0/1 parity-check matrix (only sensible for small codes)."""
    H = np.zeros((code.m, code.n), dtype=np.uint8)
    for c, v in expand_parity_check(code):
        H[c, v] = 1
    return H


# -- QC text format -------------------------------------------------------


def parse_qc_base_matrix(text: str) -> QcCode:
    """Parse the QC text format: header "rows cols L" then one line per block-row."""
    lines = []
    for raw in io.StringIO(text):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lines.append(line)
    if not lines:
        raise CodeFormatError("empty code description")
    try:
        header = [int(tok) for tok in lines[0].split()]
    except ValueError as exc:
        raise CodeFormatError(f"malformed header {lines[0]!r}") from exc
    if len(header) != 3 or min(header) < 1:
        raise CodeFormatError(f"header must be 'block_rows block_cols L', got {lines[0]!r}")
    rows, cols, L = header
    body = lines[1:]
    if len(body) != rows:
        raise CodeFormatError(f"expected {rows} block-rows, found {len(body)}")
    grid = []
    for k, line in enumerate(body):
        try:
            entries = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise CodeFormatError(f"non-integer entry in block-row {k}: {line!r}") from exc
        if len(entries) != cols:
            raise CodeFormatError(f"block-row {k} has {len(entries)} entries, expected {cols}")
        for j, p in enumerate(entries):
            if p != ZERO_CIRCULANT and not 0 <= p < L:
                raise CodeFormatError(f"shift {p} at block ({k}, {j}) out of range for L={L}")
        grid.append(entries)
    return QcCode(L, np.array(grid, dtype=np.int64))


def serialize_qc(code: QcCode) -> str:
    width = max(2, len(str(code.lifting_size - 1)))
    out = [f"{code.block_rows} {code.block_cols} {code.lifting_size}"]
    for row in code.base_matrix:
        out.append(" ".join(f"{int(p):>{width}d}" for p in row))
    return "\n".join(out) + "\n"


# -- alist ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseCode:
    """Generic (non-QC) parity-check matrix as adjacency lists, used for syndrome checks."""

    n: int
    m: int
    check_vars: tuple[tuple[int, ...], ...]

    def pairs(self) -> list[tuple[int, int]]:
        return [(c, v) for c, vs in enumerate(self.check_vars) for v in vs]

    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for c, v in self.pairs():
            H[c, v] = 1
        return H


def parse_alist(text: str) -> SparseCode:
    """Parse MacKay's alist layout (1-indexed, zero padding allowed)."""
    tokens = [int(t) for t in text.split()]
    pos = 0

    def take(k):
        nonlocal pos
        if pos + k > len(tokens):
            raise CodeFormatError("alist truncated")
        chunk = tokens[pos : pos + k]
        pos += k
        return chunk

    n, m = take(2)
    vmax, cmax = take(2)
    vdeg = take(n)
    cdeg = take(m)
    var_checks = []
    for v in range(n):
        row = [x - 1 for x in take(vmax) if x > 0]
        if len(row) != vdeg[v]:
            raise CodeFormatError(f"variable {v} degree mismatch")
        var_checks.append(row)
    check_vars = []
    for c in range(m):
        row = [x - 1 for x in take(cmax) if x > 0]
        if len(row) != cdeg[c]:
            raise CodeFormatError(f"check {c} degree mismatch")
        check_vars.append(tuple(row))
    a = sorted((c, v) for v, cs in enumerate(var_checks) for c in cs)
    b = sorted((c, v) for c, vs in enumerate(check_vars) for v in vs)
    if a != b:
        raise CodeFormatError("alist variable and check adjacency lists disagree")
    return SparseCode(n, m, tuple(check_vars))


def to_alist(pairs: list[tuple[int, int]], n: int, m: int) -> str:
    checks: list[list[int]] = [[] for _ in range(m)]
    vars_: list[list[int]] = [[] for _ in range(n)]
    for c, v in sorted(pairs):
        checks[c].append(v + 1)
        vars_[v].append(c + 1)
    vmax = max(len(x) for x in vars_)
    cmax = max(len(x) for x in checks)
    out = [f"{n} {m}", f"{vmax} {cmax}"]
    out.append(" ".join(str(len(x)) for x in vars_))
    out.append(" ".join(str(len(x)) for x in checks))
    for x in vars_:
        out.append(" ".join(str(t) for t in x + [0] * (vmax - len(x))))
    for x in checks:
        out.append(" ".join(str(t) for t in x + [0] * (cmax - len(x))))
    return "\n".join(out) + "\n"


# -- loading ----------------------------------------------------------------

BUILTIN_CODES = {
    "fixture": "fixture.qc",
    "wimax576": "wimax_576_r12.qc",
    "array582": "array_3x6_97.qc",
}


def builtin_code(name: str) -> QcCode:
    try:
        fname = BUILTIN_CODES[name]
    except KeyError:
        raise KeyError(f"unknown builtin code {name!r}; known: {sorted(BUILTIN_CODES)}") from None
    text = resources.files("lrcq.codes").joinpath(fname).read_text()
    code = parse_qc_base_matrix(text)
    object.__setattr__(code, "name", name)
    return code


def load_code(spec: str | Path) -> QcCode:
    """Load a QC code from a file path, or a builtin by name (e.g. ``wimax576``)."""
    if str(spec) in BUILTIN_CODES:
        return builtin_code(str(spec))
    path = Path(spec)
    if not path.exists():
        # bare file names of the bundled codes also resolve
        for name, fname in BUILTIN_CODES.items():
            if path.name == fname or path.name == name + ".qc":
                return builtin_code(name)
    code = parse_qc_base_matrix(path.read_text())
    object.__setattr__(code, "name", path.stem)
    return code
