"""Haar maximal-overlap wavelet transform and lag-zero wavelet cross-covariances.

Conventions
-----------
* Level ``j`` (1-based) uses a Haar filter of length ``L_j = 2**j`` with taps
  ``+2**-j`` on the first half and ``-2**-j`` on the second half, so white
  noise of variance ``s2`` has wavelet variance ``s2 / 2**j``.
* Only full-support coefficients are kept: level ``j`` has
  ``M_j = T - L_j + 1`` coefficients, no circular extension.
* Sensors are indexed from 0; levels are indexed from 1.
* Flattened WCCV vectors are level-major then row-major over sensor pairs,
  i.e. ``gamma[(j - 1) * p * p + i * p + k]``, with both ``(i, k)`` and
  ``(k, i)`` carried.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import InputError


@dataclass(frozen=True)
class SignalArray:
    """``p`` sensor signals of common length ``T`` (rows are sensors)."""

    data: np.ndarray
    sample_rate_hz: float = 1.0
    sensor_labels: tuple = field(default=None)

    def __post_init__(self):
        data = np.array(self.data, dtype=float, copy=True)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2:
            raise InputError(f"signal data must be 2-D (sensors x time), got shape {data.shape}")
        p, T = data.shape
        if p < 1 or T < 2:
            raise InputError(f"need at least 1 sensor and 2 samples, got p={p}, T={T}")
        if not np.all(np.isfinite(data)):
            raise InputError("signal data contains non-finite values")
        if not self.sample_rate_hz > 0:
            raise InputError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        labels = self.sensor_labels
        if labels is None:
            labels = tuple(f"s{i + 1}" for i in range(p))
        labels = tuple(str(x) for x in labels)
        if len(labels) != p:
            raise InputError(f"{len(labels)} sensor labels for {p} sensors")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sensor_labels", labels)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    @property
    def p(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    def split_halves(self) -> "SignalArray":
        """Stack the second half of every signal under the first half.

        Turns ``p`` sensors of length ``T`` into ``2p`` sensors of length
        ``T // 2``; a trailing odd sample is dropped.
        """
        half = self.T // 2
        if half < 2:
            raise InputError(f"T={self.T} is too short to split in halves")
        data = np.vstack([self.data[:, :half], self.data[:, half:2 * half]])
        labels = tuple(f"{s}_a" for s in self.sensor_labels) + tuple(f"{s}_b" for s in self.sensor_labels)
        return SignalArray(data, self.sample_rate_hz, labels)


@dataclass(frozen=True)
class WaveletPyramid:
    """Per-level MODWT coefficients; ``levels[j - 1]`` has shape ``(p, M_j)``."""

    levels: tuple
    T: int

    @property
    def J(self) -> int:
        return len(self.levels)

    @property
    def p(self) -> int:
        return self.levels[0].shape[0]

    @property
    def filter_lengths(self) -> np.ndarray:
        return 2 ** np.arange(1, self.J + 1)

    @property
    def coefficient_counts(self) -> np.ndarray:
        return np.array([w.shape[1] for w in self.levels])

    def level(self, j: int) -> np.ndarray:
        """Coefficients of level ``j`` (1-based)."""
        if not 1 <= j <= self.J:
            raise InputError(f"level {j} outside 1..{self.J}")
        return self.levels[j - 1]


@dataclass(frozen=True)
class ScaleCovariances:
    per_level: np.ndarray  # (J, p, p)
    weighted: np.ndarray  # (p, p)
    weights: np.ndarray  # (J,)

    @property
    def gamma(self) -> np.ndarray:
        """Flattened WCCV vector of length ``J * p**2``."""
        return flatten_wccv(self.per_level)


def max_level(T: int) -> int:
    """Largest admissible decomposition level for ``T`` samples."""
    return int(np.floor(np.log2(T)))


def default_levels(T: int) -> int:
    return max(1, max_level(T) - 1)


def scales(J: int) -> np.ndarray:
    """Dyadic scales ``tau_j = 2**j`` in samples."""
    return 2.0 ** np.arange(1, J + 1)


def haar_filter(j: int) -> np.ndarray:
    if j < 1:
        raise InputError(f"level must be >= 1, got {j}")
    half = 2 ** (j - 1)
    tap = 2.0 ** (-j)
    return np.concatenate([np.full(half, tap), np.full(half, -tap)])


def _as_matrix(signals) -> np.ndarray:
    if isinstance(signals, SignalArray):
        return signals.data
    x = np.asarray(signals, dtype=float)
    return x[None, :] if x.ndim == 1 else x


def modwt(signals, J: int | None = None) -> WaveletPyramid:
    """Haar MODWT of every sensor up to level ``J``.

    Level coefficients are formed from exact pairwise moving sums, so the
    cost is O(p T) per level and no long cumulative sum is ever differenced.
    """
    x = np.ascontiguousarray(_as_matrix(signals), dtype=float)
    T = x.shape[1]
    if J is None:
        J = default_levels(T)
    J = int(J)
    if J < 1:
        raise InputError(f"J must be >= 1, got {J}")
    if 2 ** J > T:
        raise InputError(f"J={J} too large for T={T}; maximum admissible J is {max_level(T)}")
    levels = []
    s = x
    for j in range(1, J + 1):
        m = 2 ** (j - 1)
        w, s = _accel.haar_step(s, m, 2.0 ** (-j))
        w.flags.writeable = False
        levels.append(w)
    return WaveletPyramid(tuple(levels), T)


def wccv_hat(pyramid: WaveletPyramid, i: int, k: int, j: int) -> float:
    """Lag-zero wavelet cross-covariance of sensors ``i`` and ``k`` at level ``j``."""
    w = pyramid.level(j)
    p = w.shape[0]
    if not (0 <= i < p and 0 <= k < p):
        raise InputError(f"sensor indices ({i}, {k}) outside 0..{p - 1}")
    if k < i:
        i, k = k, i
    return float(np.dot(w[i], w[k]) / w.shape[1])


def level_covariances(pyramid: WaveletPyramid) -> np.ndarray:
    """Stack of per-level WCCV matrices, shape ``(J, p, p)``, exactly symmetric."""
    out = np.empty((pyramid.J, pyramid.p, pyramid.p))
    for idx, w in enumerate(pyramid.levels):
        a = (w @ w.T) / w.shape[1]
        upper = np.triu(a)
        out[idx] = upper + np.triu(a, 1).T
    return out


def wavelet_variance(signals, J: int | None = None) -> np.ndarray:
    """Per-level wavelet variance of each sensor, shape ``(p, J)``."""
    pyr = modwt(signals, J)
    return np.array([np.einsum("it,it->i", w, w) / w.shape[1] for w in pyr.levels]).T


def wccv_matrices(pyramid: WaveletPyramid, weights) -> ScaleCovariances:
    from .svo import aggregate

    w = np.asarray(getattr(weights, "omega", weights), dtype=float)
    if w.shape != (pyramid.J,):
        raise InputError(f"weights have length {w.size}, pyramid has J={pyramid.J}")
    per_level = level_covariances(pyramid)
    return ScaleCovariances(per_level, aggregate(per_level, w), w)


def flatten_wccv(per_level: np.ndarray) -> np.ndarray:
    per_level = np.asarray(per_level, dtype=float)
    return per_level.reshape(-1).copy()


def unflatten_wccv(gamma: np.ndarray, p: int) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if gamma.size % (p * p):
        raise InputError(f"WCCV vector of length {gamma.size} is not a multiple of p^2={p * p}")
    return gamma.reshape(-1, p, p)


def demean(signals):
    """Remove each sensor's sample mean."""
    if isinstance(signals, SignalArray):
        x = signals.data
        return SignalArray(x - x.mean(axis=1, keepdims=True), signals.sample_rate_hz, signals.sensor_labels)
    x = np.asarray(signals, dtype=float)
    return x - x.mean(axis=-1, keepdims=True)
