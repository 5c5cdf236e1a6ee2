"""Pulse-shaping filters and small modulation helpers shared by the generators."""

from __future__ import annotations

import numpy as np


def rrc_taps(sps: int, span: int, alpha: float) -> np.ndarray:
    """Root-raised-cosine taps covering ``span`` symbols at ``sps`` samples/symbol.

    The tap count is ``span * sps`` rounded up to odd so the peak sits on a
    sample. Taps are scaled to unit energy.
    """
    if sps < 1 or span < 1 or not 0 < alpha <= 1:
        raise ValueError("invalid RRC parameters")
    n = span * sps
    n += 1 - n % 2
    t = (np.arange(n) - (n - 1) / 2) / sps
    h = np.empty(n)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[i] = 1.0 - alpha + 4 * alpha / np.pi
        elif abs(abs(4 * alpha * ti) - 1.0) < 1e-9:
            h[i] = alpha / np.sqrt(2) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * alpha))
                + (1 - 2 / np.pi) * np.cos(np.pi / (4 * alpha))
            )
        else:
            num = np.sin(np.pi * ti * (1 - alpha)) + 4 * alpha * ti * np.cos(np.pi * ti * (1 + alpha))
            den = np.pi * ti * (1 - (4 * alpha * ti) ** 2)
            h[i] = num / den
    return h / np.sqrt(np.sum(h**2))


def gaussian_freq_pulse(sps: int, bt: float, span: int = 4) -> np.ndarray:
    """Gaussian-filtered rectangular frequency pulse (GMSK/GFSK), unit area."""
    t = (np.arange(span * sps) - (span * sps - 1) / 2) / sps
    sigma = np.sqrt(np.log(2)) / (2 * np.pi * bt)
    g = np.exp(-(t**2) / (2 * sigma**2))
    g = np.convolve(g, np.ones(sps), mode="same")
    return g / g.sum()


def cpfsk(bits: np.ndarray, sps: int, h: float, bt: float) -> np.ndarray:
    """Gaussian-shaped continuous-phase FSK baseband for +/-1 ``bits``."""
    up = np.zeros(len(bits) * sps)
    up[::sps] = bits
    freq = np.convolve(up, gaussian_freq_pulse(sps, bt), mode="same")
    # each symbol advances the phase by pi*h*bit
    phase = np.pi * h * np.cumsum(freq)
    return np.exp(1j * phase)


def qam_symbols(rng: np.random.Generator, n: int, order: int) -> np.ndarray:
    """Unit-average-power square QAM (order 4 is QPSK)."""
    m = int(round(np.sqrt(order)))
    levels = 2 * np.arange(m) - (m - 1)
    s = rng.choice(levels, n) + 1j * rng.choice(levels, n)
    return s / np.sqrt(2 * np.mean(levels**2))


def shape_symbols(symbols: np.ndarray, sps: int, taps: np.ndarray, length: int) -> np.ndarray:
    """Zero-stuff by ``sps`` and filter with ``taps``; the filter delay is trimmed."""
    up = np.zeros(len(symbols) * sps, dtype=np.complex128)
    up[::sps] = symbols
    y = np.convolve(up, taps)
    d = (len(taps) - 1) // 2
    return y[d:d + length]


def edge_ramp(length: int, ramp: int) -> np.ndarray:
    """Raised-cosine on/off envelope for a burst of ``length`` samples."""
    env = np.ones(length)
    ramp = min(ramp, length // 2)
    if ramp > 0:
        r = 0.5 - 0.5 * np.cos(np.pi * (np.arange(ramp) + 0.5) / ramp)
        env[:ramp] = r
        env[length - ramp:] = r[::-1]
    return env
