"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np

from rfanomaly.iq import make_rng
from rfanomaly.predict import ModelSpec, init_params, loss_and_grad, param_count

FD_STEP = 1e-5
FD_REL_TOL = 1e-4


def fd_check(spec: ModelSpec, seed: int, coords: int = 50, batch: int = 3) -> float:
    """Max relative error of the analytic gradient against central differences.

    Coordinates where both values are exactly zero (units switched off by a
    ReLU) are skipped. The loss runs in inference mode (no dropout).
    """
    rng = make_rng(seed)
    theta = init_params(spec, rng)
    # move away from the init (zero biases sit on ReLU kinks less often this way)
    theta = theta + 0.05 * rng.standard_normal(theta.size)
    x = rng.standard_normal((batch, 64))
    y = rng.standard_normal((batch, 8))
    _, g = loss_and_grad(spec, theta, x, y)
    worst = 0.0
    for i in rng.choice(param_count(spec), coords, replace=False):
        tp, tm = theta.copy(), theta.copy()
        tp[i] += FD_STEP
        tm[i] -= FD_STEP
        fd = (loss_and_grad(spec, tp, x, y)[0] - loss_and_grad(spec, tm, x, y)[0]) / (2 * FD_STEP)
        scale = max(abs(g[i]), abs(fd))
        if scale == 0.0:
            continue
        worst = max(worst, abs(g[i] - fd) / scale)
    return worst


def gaussian_logpdf_oracle(mean, cov, e) -> float:
    """ln N(e; mean, cov) with an explicit inverse and determinant."""
    d = np.asarray(e, float) - mean
    k = len(mean)
    inv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    return float(-0.5 * (k * np.log(2 * np.pi) + logdet + d @ inv @ d))


def random_spd(rng, k=8):
    a = rng.standard_normal((k, k))
    return a @ a.T + 0.5 * np.eye(k)


def persistence_mse(X, Y) -> float:
    """Error of repeating the last input sample (complex windows)."""
    return float(np.mean(np.abs(Y - X[:, -1:]) ** 2))
