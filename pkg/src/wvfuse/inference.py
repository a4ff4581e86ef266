"""Moving-block bootstrap covariance of the WCCV vector and coefficient intervals.

The bootstrap resamples the trimmed wavelet coefficients of all sensors and
levels jointly in time, completes every level back to its full length with one
contiguous run, and recomputes the WCCV vector. ``estimate_V`` scales the
spread of those replicates by ``T``; the delta method with the plug-in
gradient ``gradient_G`` then gives the covariance of the coefficients.

Random draws come from a single ``numpy.random.Generator`` seeded by
``BootstrapConfig.rng_seed`` in a fixed order: for each replicate, first the
``B`` block starts, then one completion start per level.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from . import _accel
from .errors import DegenerateCovarianceError, InputError
from .svo import CoefficientVector, aggregate, min_variance_direction, optimal_coefficients
from .wavelet import WaveletPyramid, flatten_wccv, level_covariances, modwt, unflatten_wccv


@dataclass(frozen=True)
class BootstrapConfig:
    block_size: int
    replicates: int = 500
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.block_size) < 1:
            raise InputError(f"block size must be positive, got {self.block_size}")
        if int(self.replicates) < 2:
            raise InputError(f"need at least 2 bootstrap replicates, got {self.replicates}")

    def check(self, pyramid: WaveletPyramid):
        m_last = int(pyramid.coefficient_counts[-1])
        if self.block_size > m_last:
            raise InputError(
                f"block size {self.block_size} exceeds the {m_last} coefficients of level J={pyramid.J}"
            )


@dataclass(frozen=True)
class CovarianceEstimates:
    V_star: np.ndarray
    G_hat: np.ndarray
    Sigma_star: np.ndarray


@dataclass(frozen=True)
class ConfidenceIntervals:
    lower: np.ndarray
    upper: np.ndarray
    point: np.ndarray
    alpha: float

    @property
    def half_width(self) -> np.ndarray:
        return self.upper - self.point

    def covers(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.lower <= truth) & (truth <= self.upper)


@dataclass(frozen=True)
class InferenceResult:
    c_hat: CoefficientVector
    per_level: np.ndarray
    gamma_hat: np.ndarray
    estimates: CovarianceEstimates
    intervals: ConfidenceIntervals
    config: BootstrapConfig
    T: int


def default_block_size(T: int, m_last: int | None = None) -> int:
    """Ceiling of the cube root of ``T``, clamped to ``[2, m_last]``."""
    T = int(T)
    if T < 8:
        raise InputError(f"T must be >= 8 for a default block size, got {T}")
    r = int(round(T ** (1.0 / 3.0)))
    while r ** 3 < T:
        r += 1
    while r > 1 and (r - 1) ** 3 >= T:
        r -= 1
    r = max(r, 2)
    if m_last is not None:
        r = min(r, int(m_last))
    return r


def trim(pyramid: WaveletPyramid):
    """Cut every level to the length of the last one.

    Returns ``Y`` with shape ``(p, J, M_J)`` (``Y[i]`` is sensor i's trimmed
    matrix) and the removed counts ``D_j = M_j - M_J``.
    """
    counts = pyramid.coefficient_counts
    m_last = int(counts[-1])
    y = np.stack([w[:, :m_last] for w in pyramid.levels], axis=1)
    return y, counts - m_last


def _block_layout(m_last: int, block_size: int):
    n_blocks = -(-m_last // block_size)
    lens = np.full(n_blocks, block_size, dtype=np.int64)
    lens[-1] = m_last - (n_blocks - 1) * block_size
    return n_blocks, lens


def _draw_indices(rng, n_rep: int, counts: np.ndarray, block_size: int):
    """All random indices for ``n_rep`` replicates, 0-based."""
    counts = np.asarray(counts, dtype=np.int64)
    m_last = int(counts[-1])
    run_lens = counts - m_last
    n_blocks, lens = _block_layout(m_last, block_size)
    starts = np.empty((n_rep, n_blocks), dtype=np.int64)
    completion = np.empty((n_rep, counts.size), dtype=np.int64)
    n_starts = m_last - block_size + 1
    highs = counts - run_lens + 1
    for h in range(n_rep):
        starts[h] = rng.integers(0, n_starts, size=n_blocks)
        completion[h] = rng.integers(0, highs)
    return starts, lens, completion, run_lens


def mbb_resample(pyramid: WaveletPyramid, config: BootstrapConfig, rng):
    """One bootstrap replicate of the full pyramid, built column by column.

    Returns a list of ``(p, M_j)`` arrays. Block starts are shared by all
    sensors and levels; each level's completion run is shared by all sensors.
    """
    config.check(pyramid)
    y, _ = trim(pyramid)
    starts, lens, completion, run_lens = _draw_indices(rng, 1, pyramid.coefficient_counts, config.block_size)
    cols = np.concatenate([np.arange(u, u + n) for u, n in zip(starts[0], lens)])
    y_star = y[:, :, cols]
    out = []
    for idx, w in enumerate(pyramid.levels):
        t0, d = completion[0, idx], run_lens[idx]
        out.append(np.concatenate([y_star[:, idx, :], w[:, t0:t0 + d]], axis=1))
    return out


def _pair_index(p: int):
    iu, ku = np.triu_indices(p)
    full = np.empty((p, p), dtype=np.int64)
    full[iu, ku] = np.arange(iu.size)
    full[ku, iu] = np.arange(iu.size)
    return iu, ku, full


def _product_prefix(pyramid: WaveletPyramid, iu, ku) -> np.ndarray:
    counts = pyramid.coefficient_counts
    prefix = np.zeros((pyramid.J, iu.size, int(counts[0]) + 1))
    for idx, w in enumerate(pyramid.levels):
        np.cumsum(w[iu] * w[ku], axis=1, out=prefix[idx, :, 1:counts[idx] + 1])
    return prefix


def bootstrap_wccv(pyramid: WaveletPyramid, config: BootstrapConfig, unique: bool = False) -> np.ndarray:
    """WCCV vectors of all ``H`` bootstrap replicates.

    Shape ``(H, J * p**2)`` in the flattened order; with ``unique=True`` only
    the ``J * p * (p + 1) / 2`` upper-triangle slots, level-major.
    """
    config.check(pyramid)
    rng = np.random.default_rng(config.rng_seed)
    counts = pyramid.coefficient_counts
    starts, lens, completion, run_lens = _draw_indices(rng, config.replicates, counts, config.block_size)
    iu, ku, full = _pair_index(pyramid.p)
    prefix = _product_prefix(pyramid, iu, ku)
    g = _accel.bootstrap_gamma(prefix, counts.astype(float), starts, lens, completion, run_lens)
    if unique:
        return g.reshape(config.replicates, -1)
    return g[:, :, full].reshape(config.replicates, -1)


def bootstrap_wccv_direct(pyramid: WaveletPyramid, config: BootstrapConfig) -> np.ndarray:
    """Same as :func:`bootstrap_wccv` through explicit resampled pyramids (slow)."""
    config.check(pyramid)
    rng = np.random.default_rng(config.rng_seed)
    out = np.empty((config.replicates, pyramid.J * pyramid.p ** 2))
    for h in range(config.replicates):
        levels = mbb_resample(pyramid, config, rng)
        out[h] = flatten_wccv([w @ w.T / w.shape[1] for w in levels])
    return out


def _outer_mean(d: np.ndarray, scale: float) -> np.ndarray:
    # einsum without BLAS: fixed summation order, exactly symmetric
    return scale * np.einsum("hi,hj->ij", d, d)


def estimate_V(pyramid: WaveletPyramid, config: BootstrapConfig) -> np.ndarray:
    """Bootstrap estimate of the asymptotic covariance of the WCCV vector."""
    p = pyramid.p
    iu, ku, full = _pair_index(p)
    g_star = bootstrap_wccv(pyramid, config, unique=True)
    g_hat = level_covariances(pyramid)[:, iu, ku].reshape(-1)
    v_u = _outer_mean(g_star - g_hat, pyramid.T / config.replicates)
    _check_psd(v_u)
    sel = (np.arange(pyramid.J)[:, None, None] * iu.size + full[None]).reshape(-1)
    return v_u[np.ix_(sel, sel)]


def _check_psd(v: np.ndarray):
    if not np.array_equal(v, v.T):
        raise DegenerateCovarianceError("bootstrap covariance is not symmetric")
    if v.size == 0:
        return
    eig = np.linalg.eigvalsh(v)
    if eig[0] < -1e-10 * max(eig[-1], 0.0) - 1e-300:
        raise DegenerateCovarianceError(f"bootstrap covariance has negative eigenvalue {eig[0]:.3e}")


def coefficient_map(gamma, weights, p: int) -> np.ndarray:
    """Optimal coefficients as a function of a (possibly asymmetric) WCCV vector."""
    a = aggregate(unflatten_wccv(gamma, p), weights)
    u = np.linalg.solve(a, np.ones(p))
    return u / u.sum()


def gradient_G(gamma_hat, weights, p: int | None = None) -> np.ndarray:
    """Jacobian of the optimal coefficients with respect to the WCCV vector, ``(p, J p^2)``."""
    w = np.asarray(getattr(weights, "omega", weights), dtype=float)
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    if p is None:
        p = int(round(np.sqrt(gamma_hat.size / w.size)))
    if gamma_hat.size != w.size * p * p:
        raise InputError(f"WCCV vector of length {gamma_hat.size} does not match J={w.size}, p={p}")
    if p == 1:
        return np.zeros((1, gamma_hat.size))
    a = aggregate(unflatten_wccv(gamma_hat, p), w)
    u = min_variance_direction(a)
    s = u.sum()
    if not s > 0:
        raise DegenerateCovarianceError("aggregate matrix not positive definite")
    a_inv = linalg.solve(0.5 * (a + a.T), np.eye(p), assume_a="sym")
    proj = np.eye(p) / s - np.outer(u, np.ones(p)) / s ** 2
    m = proj @ a_inv
    # column (j, i, k) = -omega_j * u_k * m[:, i]
    g = -np.einsum("j,k,ai->ajik", w, u, m)
    return g.reshape(p, -1)


def sandwich(G_hat, V_star) -> np.ndarray:
    s = G_hat @ V_star @ G_hat.T
    return 0.5 * (s + s.T)


def intervals(c_hat, Sigma_star, alpha: float, T: int) -> ConfidenceIntervals:
    """Normal-theory intervals ``c_i +/- z_{1-alpha/2} sqrt(Sigma_ii / T)``."""
    if not 0 < alpha < 1:
        raise InputError(f"alpha must be in (0, 1), got {alpha}")
    c = np.asarray(getattr(c_hat, "c", c_hat), dtype=float)
    diag = np.diag(np.asarray(Sigma_star, dtype=float)).copy()
    tol = 1e-12 * max(1.0, float(np.max(np.abs(diag), initial=0.0)))
    if np.any(diag < -tol):
        raise DegenerateCovarianceError("coefficient covariance has a negative diagonal entry")
    diag = np.clip(diag, 0.0, None)
    half = stats.norm.ppf(1 - alpha / 2) * np.sqrt(diag / T)
    return ConfidenceIntervals(c - half, c + half, c.copy(), float(alpha))


def covariance_estimates(pyramid: WaveletPyramid, weights, config: BootstrapConfig) -> CovarianceEstimates:
    gamma_hat = flatten_wccv(level_covariances(pyramid))
    g = gradient_G(gamma_hat, weights, pyramid.p)
    v = estimate_V(pyramid, config)
    return CovarianceEstimates(v, g, sandwich(g, v))


def svo_inference(signals, weights, J: int | None = None, config: BootstrapConfig | None = None,
                  alpha: float = 0.05) -> InferenceResult:
    """Coefficients, bootstrap covariance and intervals in one pass."""
    w = np.asarray(getattr(weights, "omega", weights), dtype=float)
    pyr = modwt(signals, J if J is not None else w.size)
    if config is None:
        config = BootstrapConfig(default_block_size(pyr.T, pyr.coefficient_counts[-1]))
    per_level = level_covariances(pyr)
    c_hat = optimal_coefficients(aggregate(per_level, w))
    est = covariance_estimates(pyr, w, config)
    ci = intervals(c_hat, est.Sigma_star, alpha, pyr.T)
    return InferenceResult(c_hat, per_level, flatten_wccv(per_level), est, ci, config, pyr.T)
