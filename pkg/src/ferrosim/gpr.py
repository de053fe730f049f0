"""Exact Gaussian process regression on a 1-D pulse index.

Squared-exponential kernel with white noise, hyperparameters picked by
maximizing the log marginal likelihood over a fixed grid. The prior mean is
the sample mean of the training targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

JITTER = 1e-10


class GprError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class HyperGrid:
    length_scales: np.ndarray
    signal_variances: np.ndarray
    noise_variances: np.ndarray

    @classmethod
    def default_for(cls, y) -> "HyperGrid":
        """16 length scales in [1, 30] pulses; variances bracket the data variance."""
        y = np.asarray(y, dtype=float)
        var = float(np.var(y))
        floor = max((1e-6 * float(np.mean(np.abs(y)))) ** 2, 1e-12)
        var = max(var, floor)
        return cls(
            np.logspace(0.0, np.log10(30.0), 16),
            var * np.logspace(-2, 1, 7),
            var * np.logspace(-4, 0, 9),
        )

    def __post_init__(self):
        for name in ("length_scales", "signal_variances", "noise_variances"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if arr.size == 0:
                raise ValueError(f"{name} grid is empty")
            if np.any(arr <= 0):
                raise ValueError(f"{name} must be > 0")
            object.__setattr__(self, name, arr)


def se_kernel(a, b, length_scale: float, signal_variance: float) -> np.ndarray:
    d = np.subtract.outer(np.asarray(a, float), np.asarray(b, float))
    return signal_variance * np.exp(-0.5 * (d / length_scale) ** 2)


class GprModel:
    def __init__(self, x, y, length_scale: float, signal_variance: float,
                 noise_variance: float):
        if min(length_scale, signal_variance, noise_variance) <= 0:
            raise ValueError("GPR hyperparameters must be > 0")
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.length_scale = float(length_scale)
        self.signal_variance = float(signal_variance)
        self.noise_variance = float(noise_variance)
        self.mean0 = float(self.y.mean())
        K = se_kernel(self.x, self.x, self.length_scale, self.signal_variance)
        K[np.diag_indices_from(K)] += self.noise_variance + JITTER * self.signal_variance
        try:
            self._chol = linalg.cho_factor(K, lower=True)
        except linalg.LinAlgError as exc:
            raise GprError("kernel matrix is numerically singular after jitter") from exc
        self._alpha = linalg.cho_solve(self._chol, self.y - self.mean0)

    def predict(self, xq, return_var: bool = False):
        xq = np.asarray(xq, dtype=float)
        Ks = se_kernel(xq, self.x, self.length_scale, self.signal_variance)
        mean = self.mean0 + Ks @ self._alpha
        if not return_var:
            return mean
        v = linalg.cho_solve(self._chol, Ks.T)
        var = self.signal_variance - np.einsum("ij,ji->i", Ks, v)
        return mean, np.maximum(var, 0.0)

    def log_marginal_likelihood(self) -> float:
        L = self._chol[0]
        r = self.y - self.mean0
        return float(-0.5 * r @ self._alpha - np.log(np.diag(L)).sum()
                     - 0.5 * len(r) * np.log(2 * np.pi))


def grid_log_likelihoods(x, y, grid: HyperGrid) -> np.ndarray:
    """Log marginal likelihood over the full grid, shape (n_ell, n_sf, n_sn).

    One eigendecomposition of the unit-variance kernel per length scale
    serves every variance pair.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(y, dtype=float)
    r = r - r.mean()
    n = len(r)
    out = np.empty((len(grid.length_scales), len(grid.signal_variances),
                    len(grid.noise_variances)))
    sf = grid.signal_variances[:, None, None]
    sn = grid.noise_variances[None, :, None]
    for i, ell in enumerate(grid.length_scales):
        lam, U = np.linalg.eigh(se_kernel(x, x, ell, 1.0))
        lam = np.clip(lam, 0.0, None)
        proj2 = (U.T @ r) ** 2
        ev = sf * (lam[None, None, :] + JITTER) + sn
        out[i] = (-0.5 * (proj2 / ev).sum(-1) - 0.5 * np.log(ev).sum(-1)
                  - 0.5 * n * np.log(2 * np.pi))
    return out


def gpr_fit(x, y, hyper_grid: HyperGrid | None = None) -> GprModel:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4 or len(x) != len(y):
        raise ValueError("GPR needs at least 4 (x, y) points")
    grid = hyper_grid or HyperGrid.default_for(y)
    lml = grid_log_likelihoods(x, y, grid)
    i, j, k = np.unravel_index(np.argmax(lml), lml.shape)
    model = GprModel(x, y, grid.length_scales[i], grid.signal_variances[j],
                     grid.noise_variances[k])
    model.grid_lml = lml
    return model
