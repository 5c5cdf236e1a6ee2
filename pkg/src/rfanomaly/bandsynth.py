"""Synthetic multi-emitter bands standing in for over-the-air recordings.

Four environment classes, in decreasing order of short-term predictability:

* ``fm``   continuous analog FM broadcast carriers
* ``tdma`` GMSK bursts in a fixed periodic slot grid (GSM-like)
* ``ofdma`` an OFDM resource grid with blocks switched on and off (LTE-like)
* ``ism``  random CSMA-style wideband bursts plus frequency-hopped GFSK bursts

All frequencies are fractions of the sample rate (normalized Fs = 1). Every
generated band is scaled to unit mean power.

Two seeds drive a band. ``layout_seed`` fixes the station layout (carrier
levels, TDMA slot occupancy), i.e. which transmitters are on the air.
``seed`` drives the traffic: messages, bits, burst timing, noise. Distinct
``seed`` values with a shared layout play the role of separate captures of
the same band.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal

from . import dsp
from .iq import IQBuffer, derive_seed, make_rng, mean_power


class BandKind(str, enum.Enum):
    FM = "fm"
    TDMA = "tdma"
    OFDMA = "ofdma"
    ISM = "ism"


DEFAULT_CARRIERS = {BandKind.FM: 3, BandKind.TDMA: 3, BandKind.OFDMA: 6, BandKind.ISM: 2}


@dataclass(frozen=True)
class BandConfig:
    kind: BandKind = BandKind.FM
    num_samples: int = 100_000
    num_carriers: int = 3
    noise_floor_db: float = -30.0
    seed: int = 0
    layout_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", BandKind(self.kind))
        if self.num_samples < 1000:
            raise ValueError("num_samples must be >= 1000")
        if self.num_carriers < 1:
            raise ValueError("num_carriers must be >= 1")
        if self.noise_floor_db > 0:
            raise ValueError("noise_floor_db must be <= 0")
        if self.kind is BandKind.OFDMA and self.num_carriers > OFDM_MAX_BLOCKS:
            raise ValueError(f"ofdma supports at most {OFDM_MAX_BLOCKS} resource blocks")

    def with_seed(self, seed: int) -> "BandConfig":
        return BandConfig(self.kind, self.num_samples, self.num_carriers, self.noise_floor_db, seed, self.layout_seed)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "num_samples": self.num_samples,
            "num_carriers": self.num_carriers,
            "noise_floor_db": self.noise_floor_db,
            "seed": self.seed,
            "layout_seed": self.layout_seed,
        }


def layout_rng(cfg: BandConfig, what: str) -> np.random.Generator:
    return make_rng(derive_seed(cfg.layout_seed, cfg.kind.value, what))


def carrier_levels(cfg: BandConfig, low_db: float = -3.0) -> np.ndarray:
    """Linear amplitude per carrier, drawn once per layout in [low_db, 0] dB."""
    return 10 ** (layout_rng(cfg, "levels").uniform(low_db, 0, cfg.num_carriers) / 20)


def carrier_offsets(n: int, span: float = 0.8) -> np.ndarray:
    """Evenly spaced carrier centers covering ``span`` of the band."""
    return span * ((np.arange(n) + 0.5) / n - 0.5)


# FM: lowpass message bandwidth and peak-ish deviation, as fractions of Fs
FM_MESSAGE_BW = 0.004
FM_DEVIATION = 0.008


def _fm(cfg: BandConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.num_samples
    lp = signal.firwin(257, FM_MESSAGE_BW * 2)
    t = np.arange(n)
    out = np.zeros(n, dtype=np.complex128)
    for fc, amp in zip(carrier_offsets(cfg.num_carriers), carrier_levels(cfg)):
        msg = signal.lfilter(lp, 1.0, rng.standard_normal(n + 256))[256:]
        msg /= np.std(msg)
        phase = 2 * np.pi * (fc * t + FM_DEVIATION * np.cumsum(msg)) + rng.uniform(0, 2 * np.pi)
        out += amp * np.exp(1j * phase)
    return out


# TDMA: GSM-ish frame of 8 slots; bursts ramp inside the slot guard
TDMA_SPS = 8
TDMA_SLOTS = 8
TDMA_SLOT_LEN = 512
TDMA_GUARD = 24


def tdma_slot_masks(cfg: BandConfig) -> np.ndarray:
    """(num_carriers, 8) bool: which frame slots each carrier transmits in.

    Each carrier keeps the same pattern for the whole band and has at least one
    idle and one busy slot.
    """
    rng = layout_rng(cfg, "slots")
    masks = np.zeros((cfg.num_carriers, TDMA_SLOTS), dtype=bool)
    for c in range(cfg.num_carriers):
        while True:
            m = rng.random(TDMA_SLOTS) < 0.7
            if 0 < m.sum() < TDMA_SLOTS:
                break
        masks[c] = m
    return masks


def _tdma(cfg: BandConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.num_samples
    masks = tdma_slot_masks(cfg)
    t = np.arange(n)
    burst_len = TDMA_SLOT_LEN - 2 * TDMA_GUARD
    n_bits = burst_len // TDMA_SPS + 1
    ramp = dsp.edge_ramp(burst_len, TDMA_SPS * 2)
    out = np.zeros(n, dtype=np.complex128)
    for c, (fc, amp) in enumerate(zip(carrier_offsets(cfg.num_carriers), carrier_levels(cfg))):
        carrier = np.zeros(n, dtype=np.complex128)
        for slot_start in range(0, n, TDMA_SLOT_LEN):
            slot = (slot_start // TDMA_SLOT_LEN) % TDMA_SLOTS
            bits = 2 * rng.integers(0, 2, n_bits) - 1
            if not masks[c, slot]:
                continue
            b0 = slot_start + TDMA_GUARD
            b1 = min(b0 + burst_len, n)
            if b1 <= b0:
                continue
            burst = dsp.cpfsk(bits, TDMA_SPS, 0.5, 0.3)[:burst_len] * ramp
            carrier[b0:b1] = burst[: b1 - b0] * np.exp(1j * rng.uniform(0, 2 * np.pi))
        out += amp * carrier * np.exp(2j * np.pi * fc * t)
    return out


# OFDMA: 128-point FFT, 32-sample cyclic prefix, 12-subcarrier blocks,
# 7 symbols per allocation slot
OFDM_NFFT = 128
OFDM_CP = 32
OFDM_BLOCK = 12
OFDM_SYMS_PER_SLOT = 7
OFDM_MAX_BLOCKS = 8
OFDM_ON_PROB = 0.6


def _ofdma(cfg: BandConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.num_samples
    nb = cfg.num_carriers
    sym_len = OFDM_NFFT + OFDM_CP
    n_sym = -(-n // sym_len)
    n_slots = -(-n_sym // OFDM_SYMS_PER_SLOT)
    used = nb * OFDM_BLOCK
    # centered allocation, DC skipped
    bins = np.arange(-used // 2, used - used // 2)
    bins = np.where(bins >= 0, bins + 1, bins)
    on = rng.random((n_slots, nb)) < OFDM_ON_PROB
    order = rng.choice([4, 16], size=(n_slots, nb))
    grid = np.zeros((n_sym, OFDM_NFFT), dtype=np.complex128)
    for s in range(n_sym):
        slot = s // OFDM_SYMS_PER_SLOT
        for b in range(nb):
            if on[slot, b]:
                k = bins[b * OFDM_BLOCK:(b + 1) * OFDM_BLOCK] % OFDM_NFFT
                grid[s, k] = dsp.qam_symbols(rng, OFDM_BLOCK, int(order[slot, b]))
    td = np.fft.ifft(grid, axis=1) * np.sqrt(OFDM_NFFT)
    td = np.concatenate([td[:, -OFDM_CP:], td], axis=1).reshape(-1)
    return td[:n]


# ISM: CSMA wideband QPSK bursts and frequency-hopped GFSK bursts
ISM_WIDE_SPS = 2
ISM_WIDE_LEN = (400, 2400)
ISM_WIDE_GAP_MEAN = 1500.0
ISM_HOP_SPS = 8
ISM_HOP_LEN = 360
ISM_HOP_GAP_MEAN = 1200.0


def _ism(cfg: BandConfig, rng: np.random.Generator) -> np.ndarray:
    n = cfg.num_samples
    out = np.zeros(n, dtype=np.complex128)
    taps = dsp.rrc_taps(ISM_WIDE_SPS, 11, 0.35)
    t = np.arange(n)

    pos = int(rng.exponential(ISM_WIDE_GAP_MEAN))
    while pos < n:
        length = int(rng.integers(*ISM_WIDE_LEN))
        end = min(pos + length, n)
        syms = dsp.qam_symbols(rng, length // ISM_WIDE_SPS + 12, 4)
        burst = dsp.shape_symbols(syms, ISM_WIDE_SPS, taps, length)
        amp = 10 ** (rng.uniform(-4, 2) / 20)
        out[pos:end] += amp * (burst * dsp.edge_ramp(length, 8))[: end - pos]
        # listen-before-talk: the next station waits for an idle gap
        pos = end + 50 + int(rng.exponential(ISM_WIDE_GAP_MEAN))

    for _ in range(cfg.num_carriers):
        pos = int(rng.exponential(ISM_HOP_GAP_MEAN))
        while pos < n:
            end = min(pos + ISM_HOP_LEN, n)
            bits = 2 * rng.integers(0, 2, ISM_HOP_LEN // ISM_HOP_SPS + 1) - 1
            burst = dsp.cpfsk(bits, ISM_HOP_SPS, 0.32, 0.5)[:ISM_HOP_LEN] * dsp.edge_ramp(ISM_HOP_LEN, 8)
            fc = rng.uniform(-0.45, 0.45)
            amp = 10 ** (rng.uniform(-6, 0) / 20)
            out[pos:end] += amp * burst[: end - pos] * np.exp(2j * np.pi * fc * t[pos:end])
            pos = end + int(rng.exponential(ISM_HOP_GAP_MEAN))
    return out


_GENERATORS = {BandKind.FM: _fm, BandKind.TDMA: _tdma, BandKind.OFDMA: _ofdma, BandKind.ISM: _ism}


def gen_band(cfg: BandConfig) -> IQBuffer:
    """Generate a unit-power band; a pure function of ``cfg``."""
    rng = make_rng(cfg.seed)
    sig = _GENERATORS[cfg.kind](cfg, rng)
    p = np.mean(np.abs(sig) ** 2)
    if p > 0:
        sig = sig / np.sqrt(p)
    noise_power = 10 ** (cfg.noise_floor_db / 10)
    noise = (rng.standard_normal(cfg.num_samples) + 1j * rng.standard_normal(cfg.num_samples)) * np.sqrt(noise_power / 2)
    sig = sig + noise
    sig /= np.sqrt(mean_power(sig))
    return IQBuffer(sig)
