"""BPSK over AWGN and channel LLR quantization."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    ebno_db: float
    code_rate: float
    llr_step: float = 0.5
    bv: int = 8
    seed: int = 0
    stream_id: int = 0
    # noiseless pseudo-SNR: forces sigma = 0 regardless of ebno_db
    noiseless: bool = False

    def __post_init__(self):
        if not self.llr_step > 0:
            raise ValueError(f"llr_step must be positive, got {self.llr_step}")
        if not 4 <= self.bv <= 16:
            raise ValueError(f"bv must lie in [4, 16], got {self.bv}")
        if not 0 < self.code_rate < 1:
            raise ValueError(f"code rate must lie in (0, 1), got {self.code_rate}")

    @property
    def sigma(self) -> float:
        return 0.0 if self.noiseless else ebno_to_sigma(self.ebno_db, self.code_rate)


def ebno_to_sigma(ebno_db: float, code_rate: float) -> float:
    """Noise standard deviation for unit-energy BPSK at the given Eb/N0."""
    if not 0 < code_rate < 1:
        raise ValueError(f"code rate must lie in (0, 1), got {code_rate}")
    return float(np.sqrt(1.0 / (2.0 * code_rate * 10.0 ** (ebno_db / 10.0))))


def frame_rng(seed: int, stream_id: int, frame: int) -> np.random.Generator:
    """Independent generator for one frame; fully determined by the triple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream_id, frame])))


def simulate_frame(n: int, config: ChannelConfig, codeword=None, frame: int = 0) -> np.ndarray:
    """Real-valued channel LLRs 2y/sigma^2 for one frame (+inf entries when noiseless)."""
    if codeword is None:
        x = np.ones(n)
    else:
        codeword = np.asarray(codeword, dtype=np.int64)
        if codeword.shape != (n,):
            raise ValueError(f"codeword must have length {n}")
        x = 1.0 - 2.0 * codeword
    sigma = config.sigma
    if sigma == 0.0:
        return x * np.inf
    y = x + sigma * frame_rng(config.seed, config.stream_id, frame).standard_normal(n)
    return 2.0 * y / sigma**2


def simulate_frames(n: int, config: ChannelConfig, frames, codeword=None) -> np.ndarray:
    """Stack of `simulate_frame` for each frame index in `frames`."""
    frames = list(frames)
    out = np.empty((len(frames), n))
    for k, f in enumerate(frames):
        out[k] = simulate_frame(n, config, codeword, f)
    return out


def llr_limit(bits: int) -> int:
    """Largest magnitude of the symmetric `bits`-wide signed range."""
    return 2 ** (bits - 1) - 1


def quantize_llr(llr, llr_step: float, bv: int):
    """Round-half-away-from-zero to the LLR grid, then saturate symmetrically.

    Works elementwise on arrays; scalars come back as Python ints.
    """
    if not llr_step > 0:
        raise ValueError("llr_step must be positive")
    lim = llr_limit(bv)
    x = np.asarray(llr, dtype=np.float64) / llr_step
    x = np.clip(x, -lim - 1, lim + 1)  # also tames +/-inf before rounding
    q = np.sign(x) * np.floor(np.abs(x) + 0.5)
    q = np.clip(q, -lim, lim).astype(np.int64)
    if q.ndim == 0:
        return int(q)
    return q


def read_codewords(path: str | Path) -> list[np.ndarray]:
    """Codeword file: one ASCII '0'/'1' per bit, one frame per line."""
    words = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if set(line) - {"0", "1"}:
            raise ValueError(f"codeword line contains characters other than 0/1: {line[:32]!r}")
        words.append(np.frombuffer(line.encode(), dtype=np.uint8) - ord("0"))
    return words


def write_codewords(path: str | Path, words) -> None:
    Path(path).write_text("".join("".join(str(int(b)) for b in w) + "\n" for w in words))
