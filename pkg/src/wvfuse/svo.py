"""Scale-weighted variance optimization: weights, aggregation, coefficients, fusion."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DegenerateCovarianceError, InputError
from .wavelet import SignalArray, level_covariances, modwt

RCOND_MIN = 1e-12

# Scale weights used for the six-gyroscope simulations (19 levels) and for the
# twelve-signal recorded array (21 levels). Stored verbatim; normalized on use.
LONG_SCALE_19 = (
    0.000, 0.000, 0.000, 0.000, 0.000, 0.000,
    0.000, 0.001, 0.003, 0.007, 0.018, 0.041,
    0.077, 0.112, 0.135, 0.147, 0.151, 0.153,
    0.153,
)
SHORT_SCALE_19 = (
    0.118, 0.118, 0.117, 0.117, 0.116, 0.112,
    0.104, 0.086, 0.059, 0.032, 0.014, 0.006,
    0.002, 0.001, 0.000, 0.000, 0.000, 0.000,
    0.000,
)
LONG_SCALE_21 = (
    0.000, 0.000, 0.000, 0.000, 0.000, 0.000,
    0.000, 0.000, 0.000, 0.001, 0.003, 0.007,
    0.018, 0.041, 0.077, 0.112, 0.135, 0.147,
    0.151, 0.153, 0.153,
)
SHORT_SCALE_21 = (
    0.105, 0.105, 0.105, 0.105, 0.105, 0.103,
    0.100, 0.093, 0.077, 0.053, 0.028, 0.013,
    0.005, 0.002, 0.001, 0.000, 0.000, 0.000,
    0.000, 0.000, 0.000,
)

PRESETS = {
    "long-scale": {19: LONG_SCALE_19, 21: LONG_SCALE_21},
    "short-scale": {19: SHORT_SCALE_19, 21: SHORT_SCALE_21},
}
ALIASES = {"omega1": "long-scale", "omega2": "short-scale", "w1": "long-scale", "w2": "short-scale"}


@dataclass(frozen=True)
class WeightVector:
    omega: np.ndarray
    name: str = "explicit"

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float).ravel()
        if w.size == 0:
            raise InputError("weight vector is empty")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise InputError("weights sum to zero")
        w = w / total
        w.flags.writeable = False
        object.__setattr__(self, "omega", w)

    @property
    def J(self) -> int:
        return self.omega.size


@dataclass(frozen=True)
class CoefficientVector:
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        if abs(c.sum() - 1.0) > 1e-10:
            raise InputError(f"coefficients must sum to 1, got {c.sum()!r}")
        c.flags.writeable = False
        object.__setattr__(self, "c", c)

    @property
    def p(self) -> int:
        return self.c.size


@dataclass(frozen=True)
class VirtualSignal:
    samples: np.ndarray
    coefficients: CoefficientVector
    sensor_labels: tuple


def make_weights(kind, J: int, fit: str = "exact") -> WeightVector:
    """Build a normalized scale-weight vector.

    ``kind`` is ``"equal"``, a preset name (``"long-scale"``/``"omega1"``,
    ``"short-scale"``/``"omega2"``), or an explicit sequence of weights.

    Presets exist for J=19 and J=21. With ``fit="truncate"`` any other J up to
    21 uses the first J entries of the shortest preset that covers it, then
    renormalizes; level j keeps its meaning as scale ``2**j`` samples.
    """
    J = int(J)
    if J < 1:
        raise InputError(f"J must be >= 1, got {J}")
    if not isinstance(kind, str):
        w = np.asarray(kind, dtype=float).ravel()
        if w.size != J:
            raise InputError(f"explicit weight vector has length {w.size}, expected J={J}")
        return WeightVector(w)
    name = ALIASES.get(kind, kind)
    if name == "equal":
        return WeightVector(np.full(J, 1.0 / J), "equal")
    if name not in PRESETS:
        raise InputError(f"unknown weight preset {kind!r}; choose equal, long-scale, short-scale")
    table = PRESETS[name]
    if J in table:
        return WeightVector(np.array(table[J]), name)
    if fit != "truncate":
        lengths = " or ".join(str(n) for n in sorted(table))
        raise InputError(f"preset {name!r} has length {lengths}, but J={J}")
    longer = [n for n in sorted(table) if n >= J]
    if not longer:
        raise InputError(f"preset {name!r} has at most {max(table)} levels, but J={J}")
    w = np.array(table[longer[0]][:J])
    if w.sum() <= 0:
        raise InputError(f"preset {name!r} truncated to J={J} levels has no weight left")
    return WeightVector(w, f"{name}[:{J}]")


def aggregate(per_level, weights) -> np.ndarray:
    """Weighted sum of per-level WCCV matrices."""
    a = np.asarray(per_level, dtype=float)
    w = np.asarray(getattr(weights, "omega", weights), dtype=float)
    if a.ndim != 3 or a.shape[0] != w.size:
        raise InputError(f"{a.shape[0] if a.ndim == 3 else '?'} level matrices for {w.size} weights")
    return np.tensordot(w, a, axes=1)


def _check_square(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    return a


def min_variance_direction(a) -> np.ndarray:
    """``A^{-1} 1`` via a symmetric solve, with degeneracy checks."""
    a = _check_square(a)
    if not np.allclose(a, a.T, rtol=1e-10, atol=0.0):
        raise InputError("aggregate matrix is not symmetric")
    a = 0.5 * (a + a.T)
    eig = np.linalg.eigvalsh(a)
    top = np.max(np.abs(eig))
    if top == 0 or np.min(np.abs(eig)) / top < RCOND_MIN:
        raise DegenerateCovarianceError("degenerate scale covariance")
    return linalg.solve(a, np.ones(a.shape[0]), assume_a="sym")


def optimal_coefficients(a0) -> CoefficientVector:
    """Minimize ``c' A0 c`` subject to ``sum(c) == 1``."""
    u = min_variance_direction(a0)
    s = u.sum()
    if not s > 0:
        raise DegenerateCovarianceError("aggregate matrix not positive definite")
    return CoefficientVector(u / s)


def min_norm_coefficients(a0) -> CoefficientVector:
    """Smallest-norm minimizer of ``c' A0 c`` with ``sum(c) == 1`` for a singular PSD ``A0``.

    Solves the bordered system by least squares, so exchangeable sensors
    (for instance exact duplicates) share weight equally. Only meant as a
    reporting fallback; :func:`optimal_coefficients` stays strict.
    """
    a = _check_square(a0)
    a = 0.5 * (a + a.T)
    eig = np.linalg.eigvalsh(a)
    if eig[0] < -RCOND_MIN * max(abs(eig[-1]), 1e-300):
        raise DegenerateCovarianceError("aggregate matrix not positive definite")
    p = a.shape[0]
    a = a / (np.trace(a) or 1.0)
    kkt = np.zeros((p + 1, p + 1))
    kkt[:p, :p] = a
    kkt[:p, p] = kkt[p, :p] = 1.0
    rhs = np.zeros(p + 1)
    rhs[p] = 1.0
    sol = linalg.lstsq(kkt, rhs, cond=RCOND_MIN)[0]
    c = sol[:p]
    return CoefficientVector(c / c.sum())


def fuse(signals, c) -> VirtualSignal:
    coeffs = c if isinstance(c, CoefficientVector) else CoefficientVector(c)
    if isinstance(signals, SignalArray):
        x, labels = signals.data, signals.sensor_labels
    else:
        x = np.atleast_2d(np.asarray(signals, dtype=float))
        labels = tuple(f"s{i + 1}" for i in range(x.shape[0]))
    if x.shape[0] != coeffs.p:
        raise InputError(f"{coeffs.p} coefficients for {x.shape[0]} sensors")
    return VirtualSignal(coeffs.c @ x, coeffs, labels)


def virtual_wv(per_level, c) -> np.ndarray:
    """Wavelet variance of the fused signal per level, ``c' A_j c``."""
    a = np.asarray(per_level, dtype=float)
    cv = np.asarray(getattr(c, "c", c), dtype=float)
    if a.shape[1:] != (cv.size, cv.size):
        raise InputError(f"coefficients of length {cv.size} for {a.shape[1]}x{a.shape[2]} matrices")
    return np.einsum("i,jik,k->j", cv, a, cv)


def svo_fit(signals, weights, J: int | None = None):
    """Coefficients for ``signals`` under ``weights``; returns (c, per_level)."""
    if J is None:
        J = np.asarray(getattr(weights, "omega", weights)).size
    pyr = modwt(signals, J)
    per_level = level_covariances(pyr)
    return optimal_coefficients(aggregate(per_level, weights)), per_level
