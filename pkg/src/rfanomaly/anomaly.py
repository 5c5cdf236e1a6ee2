"""Synthetic anomaly waveforms, IBR scaling and injection with ground truth.

Event intervals are half-open ``[t_start, t_end)`` sample ranges. Frequencies
are fractions of the sample rate.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import dsp
from .iq import IQBuffer, as_samples, mean_power

QPSK_ALPHA = 0.3
QPSK_SPAN = 11
SYMRATE_RANGE = (1 / 250, 1 / 2)


class AnomalyKind(str, enum.Enum):
    TONE = "tone"
    SINC = "sinc"
    COMPRESSION = "compression"
    QPSK = "qpsk"
    CHIRP = "chirp"


ADDITIVE_KINDS = (AnomalyKind.TONE, AnomalyKind.SINC, AnomalyKind.QPSK, AnomalyKind.CHIRP)


class OverlapError(ValueError):
    pass


@dataclass(frozen=True)
class AnomalyEvent:
    """One anomaly and its realized parameters.

    ``params`` keys by kind: tone ``fc``; sinc ``fc``; chirp ``fc1``, ``fc2``;
    qpsk ``symrate``, ``fc``; compression none.
    """

    kind: AnomalyKind
    t_start: int
    t_end: int
    ibr_db: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", AnomalyKind(self.kind))
        if not 0 <= self.t_start < self.t_end:
            raise ValueError(f"bad event interval [{self.t_start}, {self.t_end})")
        _check_params(self.kind, self.params)

    @property
    def length(self) -> int:
        return self.t_end - self.t_start

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "t_start": int(self.t_start),
            "t_end": int(self.t_end),
            "ibr_db": float(self.ibr_db),
            "params": {k: float(v) for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyEvent":
        return cls(AnomalyKind(d["kind"]), int(d["t_start"]), int(d["t_end"]), float(d["ibr_db"]), dict(d.get("params", {})))


def _check_freq(name: str, f: float, bound: float = 0.5) -> None:
    if not -bound <= f <= bound:
        raise ValueError(f"{name}={f} outside Nyquist bound +/-{bound}")


def _check_params(kind: AnomalyKind, p: dict) -> None:
    try:
        if kind in (AnomalyKind.TONE, AnomalyKind.SINC):
            _check_freq("fc", p["fc"])
        elif kind is AnomalyKind.CHIRP:
            _check_freq("fc1", p["fc1"])
            _check_freq("fc2", p["fc2"])
        elif kind is AnomalyKind.QPSK:
            sr = p["symrate"]
            if not SYMRATE_RANGE[0] - 1e-12 <= sr <= SYMRATE_RANGE[1] + 1e-12:
                raise ValueError(f"symrate={sr} outside [1/250, 1/2]")
            _check_freq("fc", p["fc"], (1 - sr / 2) / 2)
    except KeyError as exc:
        raise ValueError(f"{kind.value} event missing parameter {exc}") from None


def qpsk_sps(symrate: float) -> int:
    return max(2, int(round(1 / symrate)))


def _sinc(u: np.ndarray) -> np.ndarray:
    # unnormalized sin(u)/u
    out = np.ones_like(u)
    nz = u != 0
    out[nz] = np.sin(u[nz]) / u[nz]
    return out


def shape(event: AnomalyEvent, rng: np.random.Generator | None = None,
          segment: IQBuffer | np.ndarray | None = None) -> np.ndarray:
    """Raw (unnormalized) anomaly waveform over the event support."""
    t = np.arange(event.t_start, event.t_end, dtype=np.float64)
    p = event.params
    k = event.kind
    if k is AnomalyKind.TONE:
        return np.exp(2j * np.pi * t * p["fc"])
    if k is AnomalyKind.SINC:
        center = (event.t_start + event.t_end) / 2
        return _sinc(2 * np.pi * (t - center) * p["fc"]).astype(np.complex128)
    if k is AnomalyKind.CHIRP:
        n = event.length
        f = p["fc1"] + (p["fc2"] - p["fc1"]) * np.arange(n) / max(n - 1, 1)
        # exact running sum of the instantaneous frequency
        cyc = p["fc1"] * event.t_start + np.concatenate([[0.0], np.cumsum(f[:-1])])
        return np.exp(2j * np.pi * cyc)
    if k is AnomalyKind.QPSK:
        if rng is None:
            raise ValueError("qpsk synthesis needs an rng")
        sps = qpsk_sps(p["symrate"])
        n_sym = -(-event.length // sps) + QPSK_SPAN
        syms = (rng.choice([-1.0, 1.0], n_sym) + 1j * rng.choice([-1.0, 1.0], n_sym)) / np.sqrt(2)
        base = dsp.shape_symbols(syms, sps, dsp.rrc_taps(sps, QPSK_SPAN, QPSK_ALPHA), event.length)
        return base * np.exp(2j * np.pi * t * p["fc"])
    if k is AnomalyKind.COMPRESSION:
        if segment is None:
            raise ValueError("compression needs the band segment")
        x = as_samples(segment).astype(np.complex128)
        return 13 * x - 3 * x**3
    raise ValueError(f"unknown anomaly kind {k}")


def synth_anomaly(event: AnomalyEvent, rng: np.random.Generator | None = None,
                  segment: IQBuffer | np.ndarray | None = None) -> IQBuffer:
    """Unit-power waveform of ``event`` (before IBR scaling)."""
    w = shape(event, rng, segment)
    p = mean_power(w)
    if p > 0:
        w = w / np.sqrt(p)
    return IQBuffer(w)


def scale_to_ibr(anomaly: IQBuffer | np.ndarray, band_segment: IQBuffer | np.ndarray, ibr_db: float) -> IQBuffer:
    a = as_samples(anomaly).astype(np.complex128)
    b = as_samples(band_segment)
    if len(a) != len(b):
        raise ValueError("anomaly and band segment lengths differ")
    pb = mean_power(b)
    pa = mean_power(a)
    if pb <= 0:
        raise ValueError("band segment has zero power")
    if pa <= 0:
        raise ValueError("anomaly has zero power")
    return IQBuffer(a * np.sqrt(pb / pa * 10 ** (ibr_db / 10)))


def _check_disjoint(events: Iterable[AnomalyEvent], band_len: int) -> list[AnomalyEvent]:
    evs = sorted(events, key=lambda e: e.t_start)
    for e in evs:
        if e.t_end > band_len:
            raise ValueError(f"event [{e.t_start}, {e.t_end}) exceeds band length {band_len}")
    for a, b in zip(evs, evs[1:]):
        if b.t_start < a.t_end:
            raise OverlapError("overlapping anomalies")
    return evs


def inject(band: IQBuffer, events: list[AnomalyEvent],
           rng: np.random.Generator | None = None) -> tuple[IQBuffer, list[AnomalyEvent]]:
    """Insert ``events`` into ``band``; returns the mixed band and ground truth.

    Additive kinds are scaled to their IBR against the band over their own
    support. Compression replaces the segment and its recorded ``ibr_db`` is
    the measured power ratio of the change to the original segment.
    """
    _check_disjoint(events, len(band))
    if not events:
        return band, []
    x = as_samples(band)
    out = x.astype(np.complex128)
    truth = []
    for e in events:
        seg = x[e.t_start:e.t_end].astype(np.complex128)
        if e.kind is AnomalyKind.COMPRESSION:
            new = shape(e, segment=seg)
            diff_p = mean_power(new - seg)
            ratio = diff_p / mean_power(seg) if mean_power(seg) > 0 else 0.0
            ibr = 10 * np.log10(ratio) if ratio > 0 else -np.inf
            out[e.t_start:e.t_end] = new
            truth.append(replace(e, ibr_db=float(ibr)))
        else:
            a = scale_to_ibr(synth_anomaly(e, rng), seg, e.ibr_db).samples
            out[e.t_start:e.t_end] = seg + a
            truth.append(e)
    return band.with_samples(out), truth


def draw_params(kind: AnomalyKind, rng: np.random.Generator) -> dict:
    kind = AnomalyKind(kind)
    if kind in (AnomalyKind.TONE, AnomalyKind.SINC):
        return {"fc": rng.uniform(-0.5, 0.5)}
    if kind is AnomalyKind.CHIRP:
        return {"fc1": rng.uniform(-0.5, 0.5), "fc2": rng.uniform(-0.5, 0.5)}
    if kind is AnomalyKind.QPSK:
        # symbol rate is realized on an integer samples-per-symbol grid
        sr = 1 / qpsk_sps(rng.uniform(*SYMRATE_RANGE))
        lim = (1 - sr / 2) / 2
        return {"symrate": sr, "fc": rng.uniform(-lim, lim)}
    return {}


def random_events(kind: AnomalyKind, count: int, length: int, ibr_db: float, band_len: int,
                  rng: np.random.Generator, max_tries: int = 1000) -> list[AnomalyEvent]:
    """Place ``count`` disjoint events of ``length`` samples uniformly at random."""
    if count < 0 or length < 1:
        raise ValueError("count must be >= 0 and length >= 1")
    if count * length > band_len / 2:
        raise ValueError("events would cover more than half the band")
    starts: list[int] = []
    tries = 0
    while len(starts) < count:
        if tries >= max_tries * max(count, 1):
            raise RuntimeError(f"could not place {count} disjoint events after {tries} tries")
        tries += 1
        s = int(rng.integers(0, band_len - length + 1))
        if all(s + length <= o or o + length <= s for o in starts):
            starts.append(s)
    starts.sort()
    return [AnomalyEvent(kind, s, s + length, ibr_db, draw_params(kind, rng)) for s in starts]


def save_truth(events: list[AnomalyEvent], path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump([e.to_dict() for e in events], fh, indent=1)


def load_truth(path: str | os.PathLike) -> list[AnomalyEvent]:
    with open(path) as fh:
        return [AnomalyEvent.from_dict(d) for d in json.load(fh)]
