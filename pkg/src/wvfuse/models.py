"""Simulators and closed forms for gyroscope-array error models.

Two array models are supported:

* white noise plus random walk, ``X_t = delta + b_t + xi_t`` with
  ``b_t = b_{t-1} + eta_t``, ``xi ~ N(0, R)``, ``eta ~ N(0, Q)``;
* white noise plus a sum of AR(1) components,
  ``X_t = sum_m b_{m,t} + xi_t`` with ``b_{m,t} = phi_m b_{m,t-1} + eta_{m,t}``,
  ``eta_m ~ N(0, P_m)``.

All matrices are in deg^2/s^2 and signals in deg/s.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import InputError
from .wavelet import SignalArray, scales, wavelet_variance

PSD_TOL = 1e-12


def color_factor(cov) -> np.ndarray:
    """Matrix ``L`` with ``L @ L.T == cov``, Cholesky when possible.

    Falls back to a clipped eigendecomposition for singular PSD matrices and
    raises for matrices with eigenvalues below ``-PSD_TOL`` times the largest.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=1e-10, atol=0.0):
        raise InputError("covariance matrix is not symmetric")
    if not np.any(cov):
        return np.zeros_like(cov)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    eig, vec = np.linalg.eigh(cov)
    if eig[0] < -PSD_TOL * max(eig[-1], 0.0):
        raise InputError(f"covariance matrix is not positive semidefinite (eigenvalue {eig[0]:.3e})")
    return vec * np.sqrt(np.clip(eig, 0.0, None))


def _check_R(R):
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[0] != R.shape[1] or np.any(R - np.diag(np.diag(R))):
        raise InputError("white-noise covariance R must be a diagonal matrix")
    if np.any(np.diag(R) < 0):
        raise InputError("white-noise variances must be nonnegative")
    return R


@dataclass(frozen=True)
class WnRwModel:
    R: np.ndarray
    Q: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        R = _check_R(self.R)
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if Q.shape != R.shape:
            raise InputError(f"Q has shape {Q.shape}, R has shape {R.shape}")
        color_factor(Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def p(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class WnAr1Model:
    R: np.ndarray
    components: tuple = field(default=())  # ((phi, P), ...)
    delta: float = 0.0

    def __post_init__(self):
        R = _check_R(self.R)
        comps = []
        for phi, P in self.components:
            phi = float(phi)
            if not abs(phi) < 1:
                raise InputError(f"AR(1) coefficient must satisfy |phi| < 1, got {phi}")
            P = np.atleast_2d(np.asarray(P, dtype=float))
            if P.shape != R.shape:
                raise InputError(f"innovation covariance has shape {P.shape}, R has shape {R.shape}")
            color_factor(P)
            comps.append((phi, P))
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "components", tuple(comps))
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def p(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class ScalarWnRwFit:
    sigma2: float
    gamma2: float


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _labels(p):
    return tuple(f"gyro{i + 1}" for i in range(p))


def simulate_wn_rw(model: WnRwModel, T: int, rng=None, sample_rate_hz: float = 10.0) -> SignalArray:
    """One array path; draws white noise first, then random-walk innovations."""
    rng = _rng(rng)
    T = int(T)
    p = model.p
    xi = rng.standard_normal((T, p)) * np.sqrt(np.diag(model.R))
    eta = rng.standard_normal((T, p)) @ color_factor(model.Q).T
    b = np.cumsum(eta, axis=0)
    x = model.delta + b + xi
    return SignalArray(x.T, sample_rate_hz, _labels(p))


def simulate_wn_ar1(model: WnAr1Model, T: int, rng=None, sample_rate_hz: float = 10.0,
                    burn_in: int | str | None = None) -> SignalArray:
    """One array path of the white noise plus AR(1) sum model.

    Each component starts from its stationary law ``N(0, P / (1 - phi^2))``.
    With ``burn_in`` (an integer or ``"auto"`` for ``10 / (1 - max|phi|)``)
    components start at zero instead and the first ``burn_in`` samples are
    dropped.

    Draw order: white noise, then for each component its initial state and
    innovations.
    """
    rng = _rng(rng)
    T = int(T)
    p = model.p
    if burn_in == "auto":
        phis = [abs(phi) for phi, _ in model.components] or [0.0]
        burn_in = int(np.ceil(10.0 / (1.0 - max(phis))))
    burn = int(burn_in or 0)
    n = T + burn
    xi = rng.standard_normal((n, p)) * np.sqrt(np.diag(model.R))
    x = model.delta + xi
    for phi, P in model.components:
        L = color_factor(P)
        z0 = rng.standard_normal(p)
        b0 = np.zeros(p) if burn else (L @ z0) / np.sqrt(1.0 - phi ** 2)
        eta = rng.standard_normal((n, p)) @ L.T
        x = x + _accel.ar1_recursion(np.ascontiguousarray(eta), phi, b0)
    return SignalArray(x[burn:].T, sample_rate_hz, _labels(p))


def simulate(model, T: int, rng=None, **kwargs) -> SignalArray:
    if isinstance(model, WnRwModel):
        return simulate_wn_rw(model, T, rng, **kwargs)
    if isinstance(model, WnAr1Model):
        return simulate_wn_ar1(model, T, rng, **kwargs)
    raise InputError(f"unsupported model type {type(model).__name__}")


def rw_wv_factor(tau) -> np.ndarray:
    """Haar wavelet variance of a unit-innovation random walk at scale ``tau``."""
    tau = np.asarray(tau, dtype=float)
    return (tau ** 2 + 2.0) / (12.0 * tau)


def closed_form_wccv_wn_rw(model: WnRwModel, j: int) -> np.ndarray:
    """Exact level-``j`` WCCV matrix ``R / tau + Q (tau^2 + 2) / (12 tau)``."""
    if j < 1:
        raise InputError(f"level must be >= 1, got {j}")
    tau = 2.0 ** j
    return model.R / tau + model.Q * rw_wv_factor(tau)


def closed_form_levels(model: WnRwModel, J: int) -> np.ndarray:
    return np.stack([closed_form_wccv_wn_rw(model, j) for j in range(1, J + 1)])


def _ar1_haar_wv(phi: float, tau: int) -> float:
    """Haar wavelet variance of a unit-innovation stationary AR(1) at scale ``tau``."""
    half = tau // 2
    d = np.arange(tau, dtype=float)
    # autocorrelation of the filter at lag d (taps +-1/tau)
    r = np.where(d <= half, 2 * half - 3 * d, -(tau - d)) / float(tau) ** 2
    acov = phi ** d / (1.0 - phi ** 2)
    return float(r[0] * acov[0] + 2.0 * np.sum(r[1:] * acov[1:]))


def closed_form_wccv_wn_ar1(model: WnAr1Model, j: int) -> np.ndarray:
    """Exact level-``j`` WCCV matrix of the white noise plus AR(1) sum model."""
    if j < 1:
        raise InputError(f"level must be >= 1, got {j}")
    tau = 2 ** j
    a = model.R / tau
    for phi, P in model.components:
        a = a + P * _ar1_haar_wv(phi, tau)
    return a


def theoretical_levels(model, J: int) -> np.ndarray:
    if isinstance(model, WnRwModel):
        return closed_form_levels(model, J)
    return np.stack([closed_form_wccv_wn_ar1(model, j) for j in range(1, J + 1)])


def _wv_design(J: int) -> np.ndarray:
    tau = scales(J)
    return np.column_stack([1.0 / tau, rw_wv_factor(tau)])


def nnls_two(design: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least squares over the nonnegative quadrant for a two-column design.

    Solves the free problem; if a coordinate is negative, clamps it to zero and
    re-solves the other one alone, keeping the better of the feasible
    candidates.
    """
    sol, *_ = np.linalg.lstsq(design, target, rcond=None)
    if np.all(sol >= 0):
        return sol
    candidates = [np.zeros(2)]
    for k in range(2):
        col = design[:, k]
        denom = col @ col
        val = max(col @ target / denom, 0.0) if denom > 0 else 0.0
        cand = np.zeros(2)
        cand[k] = val
        candidates.append(cand)
    loss = [np.sum((target - design @ c) ** 2) for c in candidates]
    return candidates[int(np.argmin(loss))]


def gmwm_fit_wn_rw(signal, J: int | None = None) -> ScalarWnRwFit:
    """Fit white-noise and random-walk variances by matching wavelet variances."""
    x = np.asarray(getattr(signal, "samples", getattr(signal, "data", signal)), dtype=float).ravel()
    if J is None:
        from .wavelet import default_levels

        J = default_levels(x.size)
    if 2 ** J > x.size:
        raise InputError(f"J={J} too large for T={x.size}")
    nu = wavelet_variance(x, J)[0]
    sigma2, gamma2 = nnls_two(_wv_design(J), nu)
    return ScalarWnRwFit(float(sigma2), float(gamma2))


# Appendix parameter sets; printed values are scaled by the factors below.
_R_DIAG = np.array([2.805556, 1.977778, 1.361111, 1.063889, 1.069444, 2.538889])
_Q_CASE1 = np.array([
    [0.255058, -0.008573, 0.102881, -0.162894, -0.240055, -0.055727],
    [-0.008573, 0.471536, 0.199331, 0.010717, 0.032150, 0.207905],
    [0.102881, 0.199331, 3.489369, -1.281722, 0.055727, -0.302212],
    [-0.162894, 0.010717, -1.281722, 2.091907, 0.409379, 0.544410],
    [-0.240055, 0.032150, 0.055727, 0.409379, 0.555127, 0.244342],
    [-0.055727, 0.207905, -0.302212, 0.544410, 0.244342, 2.501286],
])
_P1_CASE2 = np.array([
    [0.400813, -0.018061, -0.044770, -0.104857, 0.254671, -0.234950],
    [-0.018061, 1.177847, -0.012905, -0.374198, -0.051101, 0.284942],
    [-0.044770, -0.012905, 1.965775, 0.202629, -0.175089, 0.144629],
    [-0.104857, -0.374198, 0.202629, 1.309887, 0.023176, 0.412761],
    [0.254671, -0.051101, -0.175089, 0.023176, 1.928375, 0.571453],
    [-0.234950, 0.284942, 0.144629, 0.412761, 0.571453, 1.434466],
])
_P2_CASE2 = np.array([
    [6.713833, 1.515552, 1.245013, -0.071179, 0.428489, 0.957757],
    [1.515552, 5.607230, 2.264650, -0.773724, 0.281054, 1.440987],
    [1.245013, 2.264650, 7.499051, -0.162687, -0.529317, -0.999575],
    [-0.071179, -0.773724, -0.162687, 1.207920, -0.187305, 0.681702],
    [0.428489, 0.281054, -0.529317, -0.187305, 7.499327, 2.414762],
    [0.957757, 1.440987, -0.999575, 0.681702, 2.414762, 6.461646],
])
_P3_CASE2 = np.array([
    [5.062006, -0.643280, 0.326013, 0.697800, 1.727949, 0.738584],
    [-0.643280, 1.612038, -0.318449, -0.383634, -0.768214, -0.100044],
    [0.326013, -0.318449, 2.102923, 0.091458, 0.398505, -0.137760],
    [0.697800, -0.383634, 0.091458, 0.788177, -0.129179, 0.519119],
    [1.727949, -0.768214, 0.398505, -0.129179, 5.442670, 0.378632],
    [0.738584, -0.100044, -0.137760, 0.519119, 0.378632, 4.990004],
])
CASE2_PHI = (0.9975214, 0.9998705, 0.9999933)

R_SCALE = 1e-7
Q_SCALE = 1e-13
P_SCALES = (1e-11, 1e-13, 1e-14)


def case1(delta: float = 0.0) -> WnRwModel:
    """Six gyroscopes, white noise plus correlated random walk."""
    return WnRwModel(np.diag(_R_DIAG) * R_SCALE, _Q_CASE1 * Q_SCALE, delta)


def case2(delta: float = 0.0) -> WnAr1Model:
    """Six gyroscopes, white noise plus three correlated AR(1) components."""
    comps = tuple(
        (phi, P * scale)
        for phi, P, scale in zip(CASE2_PHI, (_P1_CASE2, _P2_CASE2, _P3_CASE2), P_SCALES)
    )
    return WnAr1Model(np.diag(_R_DIAG) * R_SCALE, comps, delta)


PRESETS = {"case1": case1, "case2": case2}


def preset(name: str, **kwargs):
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise InputError(f"unknown model preset {name!r}; choose {', '.join(PRESETS)}") from None


def preset_matrices(name: str) -> dict:
    """Named parameter matrices of a preset, for export."""
    model = preset(name)
    out = {"R": model.R}
    if isinstance(model, WnRwModel):
        out["Q"] = model.Q
    else:
        for m, (phi, P) in enumerate(model.components, start=1):
            out[f"P{m}"] = P
            out[f"phi{m}"] = np.array([[phi]])
    return out


def model_to_dict(model) -> dict:
    if isinstance(model, WnRwModel):
        return {"type": "wn_rw", "R": model.R.tolist(), "Q": model.Q.tolist(), "delta": model.delta}
    return {
        "type": "wn_ar1",
        "R": model.R.tolist(),
        "components": [{"phi": phi, "P": P.tolist()} for phi, P in model.components],
        "delta": model.delta,
    }


def model_from_dict(spec: dict):
    kind = spec.get("type")
    if kind == "wn_rw":
        return WnRwModel(np.array(spec["R"]), np.array(spec["Q"]), spec.get("delta", 0.0))
    if kind == "wn_ar1":
        comps = tuple((c["phi"], np.array(c["P"])) for c in spec.get("components", ()))
        return WnAr1Model(np.array(spec["R"]), comps, spec.get("delta", 0.0))
    raise InputError(f"unknown model type {kind!r}; expected wn_rw or wn_ar1")
