"""Reference coefficient choices: equal weights and random-walk variance minimization."""

import numpy as np

from .errors import InputError
from .svo import CoefficientVector, optimal_coefficients
from .wavelet import SignalArray


def equal_weights(p: int) -> CoefficientVector:
    if p < 1:
        raise InputError(f"need at least one sensor, got p={p}")
    return CoefficientVector(np.full(p, 1.0 / p))


def rdvg_coefficients(Q) -> CoefficientVector:
    """Coefficients minimizing the fused random-walk innovation variance ``c' Q c``."""
    return optimal_coefficients(Q)


def project_psd(a) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm: symmetrize and clip negative eigenvalues."""
    a = np.asarray(a, dtype=float)
    a = 0.5 * (a + a.T)
    eig, vec = np.linalg.eigh(a)
    if eig[0] >= 0:
        return a
    out = (vec * np.clip(eig, 0.0, None)) @ vec.T
    return 0.5 * (out + out.T)


def _lag_cov(d: np.ndarray, lag: int) -> np.ndarray:
    n = d.shape[1]
    return d[:, lag:] @ d[:, :n - lag].T / n


def moment_Q(signals) -> np.ndarray:
    """Raw moment estimate of the random-walk innovation covariance.

    With ``D_t = X_t - X_{t-1}`` under white noise plus random walk,
    ``E[D_t D_t'] = Q + 2R`` and ``E[D_t D_{t-1}'] = -R``, so
    ``C(0) + C(1) + C(1)'`` is consistent for ``Q``.
    """
    x = signals.data if isinstance(signals, SignalArray) else np.atleast_2d(np.asarray(signals, dtype=float))
    if x.shape[1] < 3:
        raise InputError(f"need T >= 3 samples, got {x.shape[1]}")
    d = np.diff(x, axis=1)
    d = d - d.mean(axis=1, keepdims=True)
    c0 = _lag_cov(d, 0)
    c1 = _lag_cov(d, 1)
    q = c0 + c1 + c1.T
    return 0.5 * (q + q.T)


def estimate_Q_wn_rw(signals) -> np.ndarray:
    """PSD moment estimate of ``Q`` with a small ridge so it can be inverted."""
    q = project_psd(moment_Q(signals))
    ridge = 1e-12 * np.trace(q)
    if ridge == 0:
        ridge = 1e-300
    return q + ridge * np.eye(q.shape[0])
