"""Multivariate Gaussian model of prediction error and the aggregated statistic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

DB_PER_NEPER = 10.0 / np.log(10.0)


class DegenerateErrorModel(ValueError):
    pass


@dataclass(frozen=True)
class ErrorModel:
    """Gaussian over flattened error vectors.

    ``cov`` is the unbiased sample covariance; densities use ``cov + ridge*I``
    through its cached lower Cholesky factor.
    """

    mean: np.ndarray
    cov: np.ndarray
    ridge: float
    chol: np.ndarray
    logdet: float

    @property
    def regularized_cov(self) -> np.ndarray:
        return self.cov + self.ridge * np.eye(self.dim)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def from_moments(cls, mean: np.ndarray, cov: np.ndarray, ridge: float = 0.0) -> "ErrorModel":
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.asarray(cov, dtype=np.float64)
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape does not match mean")
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        reg = 0.5 * (cov + cov.T) + ridge * np.eye(mean.size)
        try:
            L = linalg.cholesky(reg, lower=True)
        except linalg.LinAlgError:
            raise DegenerateErrorModel("degenerate error distribution") from None
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        return cls(mean, cov, float(ridge), L, logdet)

    def log_pdf(self, e: np.ndarray) -> np.ndarray | float:
        """Natural-log density of one vector or each row of a 2-D array."""
        e = np.asarray(e, dtype=np.float64)
        d = np.atleast_2d(e) - self.mean
        z = linalg.solve_triangular(self.chol, d.T, lower=True)
        ll = -0.5 * (np.sum(z**2, axis=0) + self.dim * np.log(2 * np.pi) + self.logdet)
        return float(ll[0]) if e.ndim == 1 else ll

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {"err_mean": self.mean, "err_cov": self.cov, "err_ridge": np.array([self.ridge])}

    @classmethod
    def from_arrays(cls, arrs) -> "ErrorModel":
        return cls.from_moments(arrs["err_mean"], arrs["err_cov"], float(np.asarray(arrs["err_ridge"])[0]))


def default_ridge(cov: np.ndarray) -> float:
    return 1e-6 * float(np.trace(cov)) / cov.shape[0]


def fit(errors: np.ndarray, ridge: float | None = None) -> ErrorModel:
    """Fit mean and unbiased covariance; ``ridge=None`` uses 1e-6 * trace/dim."""
    e = np.asarray(errors, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] < 2:
        raise ValueError("need at least 2 error vectors")
    mu = e.mean(axis=0)
    cov = np.cov(e, rowvar=False, ddof=1)
    if ridge is None:
        ridge = default_ridge(cov)
        if ridge == 0.0:
            ridge = 1e-12
    return ErrorModel.from_moments(mu, cov, ridge)


def log_pdf(model: ErrorModel, e: np.ndarray) -> np.ndarray | float:
    return model.log_pdf(e)


def aggregate(ll: np.ndarray, V: int) -> np.ndarray:
    """Sliding V-term sum of log-likelihoods expressed as 10*log10 of the product."""
    if V < 1:
        raise ValueError("V must be >= 1")
    ll = np.asarray(ll, dtype=np.float64)
    if V > ll.size:
        return np.zeros(0)
    return DB_PER_NEPER * np.lib.stride_tricks.sliding_window_view(ll, V).sum(axis=1)
