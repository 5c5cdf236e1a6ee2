"""Complex sample containers, seeded randomness, windowing and cf32 file I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

#: Input samples per prediction window.
N_INPUT = 32
#: Predicted samples per window.
N_OUTPUT = 4
WINDOW = N_INPUT + N_OUTPUT


class MalformedFileError(ValueError):
    pass


@dataclass(frozen=True)
class IQBuffer:
    """Complex baseband samples plus their sample rate.

    ``samples`` is stored as a read-only complex array. complex64 input is kept
    as complex64 so cf32 round trips stay bit-exact; anything else becomes
    complex128.
    """

    samples: np.ndarray
    sample_rate_hz: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.dtype != np.complex64:
            s = s.astype(np.complex128)
        if s.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples contain NaN or Inf")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")
        s = s.copy() if s.flags.writeable else s
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.shape[0]

    def __getitem__(self, item: slice) -> "IQBuffer":
        return IQBuffer(self.samples[item], self.sample_rate_hz)

    def with_samples(self, samples: np.ndarray) -> "IQBuffer":
        return IQBuffer(samples, self.sample_rate_hz)


def as_samples(buf: IQBuffer | np.ndarray | Sequence[complex]) -> np.ndarray:
    if isinstance(buf, IQBuffer):
        return buf.samples
    return np.asarray(buf, dtype=np.complex128)


@dataclass(frozen=True)
class WindowPair:
    input: np.ndarray
    target: np.ndarray
    start_index: int = field(default=0)

    def __post_init__(self):
        if len(self.input) != N_INPUT or len(self.target) != N_OUTPUT:
            raise ValueError("window pair must hold 32 input and 4 target samples")
        if self.start_index < 0:
            raise ValueError("start_index must be nonnegative")


# --------------------------------------------------------------------- random

def make_rng(seed: int) -> np.random.Generator:
    """Return the package-wide generator: Philox4x64 keyed by ``seed``.

    Philox is counter based, so a given seed yields the same stream on every
    platform and numpy build.
    """
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFF_FFFF_FFFF_FFFF))


def derive_seed(master: int, *keys: int | str) -> int:
    """Deterministically derive a 64-bit child seed from ``master`` and ``keys``.

    String keys are folded in through their UTF-8 bytes so the mapping does not
    depend on Python's randomized ``hash``.
    """
    words: list[int] = [int(master) & 0xFFFF_FFFF_FFFF_FFFF]
    for k in keys:
        if isinstance(k, str):
            words.extend(k.encode("utf-8"))
            words.append(0x100)
        else:
            words.append(int(k))
    state = np.random.SeedSequence(words).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


# ---------------------------------------------------------------------- power

def mean_power(buf: IQBuffer | np.ndarray) -> float:
    s = as_samples(buf)
    if s.size == 0:
        raise ValueError("empty signal")
    s = s.astype(np.complex128, copy=False)
    return float(np.mean(s.real**2 + s.imag**2))


def to_db(x: float) -> float:
    return 10.0 * np.log10(x)


# ------------------------------------------------------------------ windowing

def window_starts(length: int, stride: int) -> np.ndarray:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if length < WINDOW:
        return np.zeros(0, dtype=np.int64)
    return np.arange(0, length - WINDOW + 1, stride, dtype=np.int64)


def window_arrays(buf: IQBuffer | np.ndarray, stride: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized windowing: ``(inputs (n, 32), targets (n, 4), starts (n,))``."""
    s = as_samples(buf)
    starts = window_starts(len(s), stride)
    idx = starts[:, None] + np.arange(WINDOW)[None, :]
    win = s[idx] if starts.size else np.zeros((0, WINDOW), dtype=s.dtype)
    return win[:, :N_INPUT], win[:, N_INPUT:], starts


def slice_windows(buf: IQBuffer | np.ndarray, stride: int) -> list[WindowPair]:
    inputs, targets, starts = window_arrays(buf, stride)
    return [WindowPair(i, t, int(k)) for i, t, k in zip(inputs, targets, starts)]


def iter_windows(buf: IQBuffer | np.ndarray, stride: int) -> Iterator[WindowPair]:
    s = as_samples(buf)
    for k in window_starts(len(s), stride):
        yield WindowPair(s[k:k + N_INPUT], s[k + N_INPUT:k + WINDOW], int(k))


def complex_to_real(x: np.ndarray) -> np.ndarray:
    """(..., n) complex -> (..., 2n) float64 with re/im interleaved."""
    x = np.asarray(x)
    out = np.empty(x.shape[:-1] + (2 * x.shape[-1],), dtype=np.float64)
    out[..., 0::2] = x.real
    out[..., 1::2] = x.imag
    return out


def real_to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[..., 0::2] + 1j * x[..., 1::2]


# ------------------------------------------------------------------ cf32 I/O

_CF32 = np.dtype("<c8")


def write_cf32(buf: IQBuffer | np.ndarray, path: str | os.PathLike) -> None:
    """Write interleaved little-endian float32 (re, im) pairs."""
    s = as_samples(buf)
    with open(path, "wb") as fh:
        fh.write(s.astype(_CF32).tobytes())


def read_cf32(path: str | os.PathLike, sample_rate_hz: float = 1.0) -> IQBuffer:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) % 8:
        raise MalformedFileError(f"malformed cf32: {len(raw)} bytes is not a multiple of 8")
    # <c8 is exactly interleaved little-endian float32 pairs
    s = np.frombuffer(raw, dtype=_CF32).astype(np.complex64)
    return IQBuffer(s, sample_rate_hz)
