"""Third-order unscented Kalman predictor run independently on the I and Q rails.

Each real channel carries a (value, rate, acceleration) state under a
constant-acceleration transition. Measurement noise tracks a rolling estimate
of the innovation variance; process noise is fixed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..iq import N_OUTPUT

log = logging.getLogger(__name__)

ORDER = 3
F = np.array([[1.0, 1.0, 0.5], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
# discrete white-noise acceleration increments over one sample
Q_UNIT = np.array([[0.25, 0.5, 0.5], [0.5, 1.0, 1.0], [0.5, 1.0, 1.0]])
R_FLOOR = 1e-8
P0_SCALE = 1.0
RESET_INFLATION = 10.0


def merwe_weights(n: int, alpha: float, beta: float, kappa: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Scaled sigma-point weights (mean, covariance) and lambda."""
    lam = alpha**2 * (n + kappa) - n
    wm = np.full(2 * n + 1, 1.0 / (2 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = lam / (n + lam) + (1 - alpha**2 + beta)
    return wm, wc, lam


@dataclass
class UkfState:
    """Filter state for both rails: ``x`` is (2, 3), ``P`` is (2, 3, 3)."""

    x: np.ndarray = field(default_factory=lambda: np.zeros((2, ORDER)))
    P: np.ndarray = field(default_factory=lambda: np.tile(P0_SCALE * np.eye(ORDER), (2, 1, 1)))
    R: np.ndarray = field(default_factory=lambda: np.full(2, 1e-2))
    process_noise: float = 1e-3
    alpha: float = 1.0
    beta: float = 2.0
    kappa: float = 0.0
    window: int = 64
    # ring buffer of (squared innovation, predicted measurement variance) per rail
    innovations: np.ndarray | None = None
    count: int = 0
    resets: int = 0

    def __post_init__(self):
        if self.innovations is None:
            self.innovations = np.zeros((self.window, 2, 2))

    def copy(self) -> "UkfState":
        return UkfState(self.x.copy(), self.P.copy(), self.R.copy(), self.process_noise, self.alpha,
                        self.beta, self.kappa, self.window, self.innovations.copy(), self.count, self.resets)

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(p).min() for p in self.P))


def sigma_points(x: np.ndarray, P: np.ndarray, lam: float) -> np.ndarray:
    """(2, 2n+1, n) sigma points for each rail; raises LinAlgError if P is not PD."""
    n = x.shape[-1]
    S = np.linalg.cholesky((n + lam) * P)  # lower; columns are the offsets
    offs = np.swapaxes(S, -1, -2)
    return np.concatenate([x[:, None, :], x[:, None, :] + offs, x[:, None, :] - offs], axis=1)


def _reset(state: UkfState, z: np.ndarray) -> None:
    log.warning("ukf covariance lost positive definiteness; resetting to prior")
    state.x = np.zeros((2, ORDER))
    state.x[:, 0] = z
    state.P = np.tile(RESET_INFLATION * P0_SCALE * np.eye(ORDER), (2, 1, 1))
    state.resets += 1


def step_inplace(state: UkfState, z: np.ndarray) -> None:
    """Advance ``state`` by one sample and absorb the observation ``z`` (2 reals)."""
    n = ORDER
    wm, wc, lam = merwe_weights(n, state.alpha, state.beta, state.kappa)
    try:
        chi = sigma_points(state.x, state.P, lam)
    except np.linalg.LinAlgError:
        _reset(state, z)
        return
    chi = chi @ F.T
    # +/- sigma pairs are summed first so a symmetric spread cancels exactly
    xp = wm[0] * chi[:, 0] + wm[1] * (chi[:, 1:n + 1] + chi[:, n + 1:]).sum(axis=1)
    d = chi - xp[:, None, :]
    Pp = np.einsum("k,rki,rkj->rij", wc, d, d) + state.process_noise * Q_UNIT
    zs = chi[:, :, 0]
    zbar = wm[0] * zs[:, 0] + wm[1] * (zs[:, 1:n + 1] + zs[:, n + 1:]).sum(axis=1)
    dz = zs - zbar[:, None]
    hph = dz**2 @ wc
    S = hph + state.R
    Pxz = np.einsum("k,rki,rk->ri", wc, d, dz)
    K = Pxz / S[:, None]
    nu = z - zbar
    state.x = xp + K * nu[:, None]
    P = Pp - S[:, None, None] * K[:, :, None] * K[:, None, :]
    state.P = 0.5 * (P + np.swapaxes(P, -1, -2))

    state.innovations[state.count % state.window] = (nu**2, hph)
    state.count += 1
    m = state.innovations[: min(state.count, state.window)].mean(axis=0)
    state.R = np.maximum(m[0] - m[1], R_FLOOR)


def forecast(state: UkfState, steps: int = N_OUTPUT) -> np.ndarray:
    """Mean of the state propagated ``steps`` samples ahead, as complex values."""
    out = np.empty(steps, dtype=np.complex128)
    x = state.x
    for j in range(steps):
        x = x @ F.T
        out[j] = x[0, 0] + 1j * x[1, 0]
    return out


def ukf_step(state: UkfState, observation: complex) -> tuple[UkfState, np.ndarray]:
    """Pure step: returns a new state and the 4-sample forecast after ``observation``."""
    new = state.copy()
    step_inplace(new, np.array([observation.real, observation.imag]))
    return new, forecast(new)
