"""Monte Carlo harnesses: method comparison, interval coverage, consistency.

Every harness takes one integer seed and derives independent child streams
with ``numpy.random.SeedSequence.spawn``, so results do not depend on the
number of worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import models
from .baselines import equal_weights, estimate_Q_wn_rw, rdvg_coefficients
from .errors import InputError
from .inference import BootstrapConfig, default_block_size, svo_inference
from .models import nnls_two, _wv_design
from .svo import aggregate, make_weights, optimal_coefficients, virtual_wv
from .wavelet import default_levels, level_covariances, modwt

METHODS = ("svo_w1", "svo_w2", "eq", "rdvg_oracle", "rdvg_est")
LABELS = {
    "svo_w1": "SVO long-scale weights",
    "svo_w2": "SVO short-scale weights",
    "eq": "equal weights",
    "rdvg_oracle": "RW-variance minimizer, true Q",
    "rdvg_est": "RW-variance minimizer, moment-estimated Q",
}


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _children(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


def true_coefficients(model, weights) -> np.ndarray:
    """Optimal coefficients from the exact per-level WCCV matrices of ``model``."""
    w = np.asarray(getattr(weights, "omega", weights), dtype=float)
    a0 = aggregate(models.theoretical_levels(model, w.size), w)
    return optimal_coefficients(a0).c


def fit_methods(signals, model, J, w1, w2, methods=METHODS) -> dict:
    """Coefficients of each method on one array."""
    per_level = level_covariances(modwt(signals, J))
    out = {}
    for name in methods:
        if name == "svo_w1":
            c = optimal_coefficients(aggregate(per_level, w1)).c
        elif name == "svo_w2":
            c = optimal_coefficients(aggregate(per_level, w2)).c
        elif name == "eq":
            c = equal_weights(signals.p).c
        elif name == "rdvg_oracle":
            if not isinstance(model, models.WnRwModel):
                raise InputError("oracle RW-variance coefficients need a white noise plus random walk model")
            c = rdvg_coefficients(model.Q).c
        elif name == "rdvg_est":
            c = rdvg_coefficients(estimate_Q_wn_rw(signals)).c
        else:
            raise InputError(f"unknown method {name!r}")
        out[name] = c
    return out


@dataclass
class CompareResult:
    methods: tuple
    J: int
    T: int
    coefficients: dict  # method -> (n_fit, p)
    oos_wv: dict  # method -> (n_fit * n_eval, J)
    sensor_wv: np.ndarray  # (n_fit * n_eval, p, J)
    fits: dict = field(default_factory=dict)  # method -> (n, 2) [sigma2, gamma2]

    def mean_wv(self, method):
        return self.oos_wv[method].mean(axis=0)

    def se_wv(self, method):
        x = self.oos_wv[method]
        return x.std(axis=0, ddof=1) / np.sqrt(x.shape[0])

    def ratio_to_eq(self, method):
        return self.mean_wv(method) / self.mean_wv("eq")


def _compare_task(args):
    model, T, J, w1, w2, methods, n_eval, seed_seq, gmwm = args
    fit_seq, *eval_seqs = seed_seq.spawn(1 + n_eval)
    x = models.simulate(model, T, np.random.default_rng(fit_seq))
    coefs = fit_methods(x, model, J, w1, w2, methods)
    wv = {m: [] for m in methods}
    sensor = []
    fits = {m: [] for m in methods}
    design = _wv_design(J)
    for seq in eval_seqs:
        y = models.simulate(model, T, np.random.default_rng(seq))
        per_level = level_covariances(modwt(y, J))
        sensor.append(np.einsum("jii->ij", per_level))
        for m in methods:
            nu = virtual_wv(per_level, coefs[m])
            wv[m].append(nu)
            if gmwm:
                fits[m].append(nnls_two(design, nu))
    return coefs, wv, sensor, fits


def compare(model, T: int, J: int | None = None, n_fit: int = 50, n_eval: int = 10,
            seed: int = 0, methods=METHODS, w1="long-scale", w2="short-scale",
            gmwm: bool = False, workers: int | None = None) -> CompareResult:
    """Two-stage out-of-sample comparison of fusion methods.

    ``n_fit`` arrays are simulated to estimate each method's coefficients;
    each coefficient set is then applied to ``n_eval`` fresh arrays (shared by
    all methods) and the fused wavelet variances recorded.
    """
    J = default_levels(T) if J is None else int(J)
    if not isinstance(model, models.WnRwModel):
        methods = tuple(m for m in methods if m != "rdvg_oracle")
    w1 = make_weights(w1, J, fit="truncate") if isinstance(w1, str) else w1
    w2 = make_weights(w2, J, fit="truncate") if isinstance(w2, str) else w2
    tasks = [(model, T, J, w1, w2, tuple(methods), n_eval, s, gmwm) for s in _children(seed, n_fit)]
    results = _map(_compare_task, tasks, workers)
    coefficients = {m: np.array([r[0][m] for r in results]) for m in methods}
    oos = {m: np.array([nu for r in results for nu in r[1][m]]) for m in methods}
    sensor = np.array([s for r in results for s in r[2]])
    fits = {m: np.array([f for r in results for f in r[3][m]]) for m in methods} if gmwm else {}
    return CompareResult(tuple(methods), J, T, coefficients, oos, sensor, fits)


@dataclass
class CoverageResult:
    c0: np.ndarray
    covered: np.ndarray  # (n_rep, p) booleans
    c_hat: np.ndarray  # (n_rep, p)
    half_width: np.ndarray  # (n_rep, p)
    alpha: float
    T: int
    J: int
    block_size: int
    replicates: int

    @property
    def coverage(self) -> np.ndarray:
        return self.covered.mean(axis=0)

    @property
    def mc_error(self) -> float:
        """Two standard errors of a coverage estimate at the nominal level."""
        n = self.covered.shape[0]
        return 2.0 * np.sqrt(self.alpha * (1 - self.alpha) / n)


def _coverage_task(args):
    model, T, J, w, H, l, alpha, seq = args
    sim_seq, boot_seq = seq.spawn(2)
    x = models.simulate(model, T, np.random.default_rng(sim_seq))
    boot_seed = int(boot_seq.generate_state(1, dtype=np.uint64)[0])
    res = svo_inference(x, w, J, BootstrapConfig(l, H, boot_seed), alpha)
    return res.c_hat.c, res.intervals.lower, res.intervals.upper


def coverage(model, T: int, J: int | None = None, weights="short-scale", n_rep: int = 300,
             replicates: int = 200, block_size: int | None = None, alpha: float = 0.05,
             seed: int = 0, workers: int | None = None) -> CoverageResult:
    """Empirical coverage of bootstrap intervals for the true optimal coefficients."""
    J = default_levels(T) if J is None else int(J)
    w = make_weights(weights, J, fit="truncate") if isinstance(weights, str) else weights
    c0 = true_coefficients(model, w)
    m_last = T - 2 ** J + 1
    l = default_block_size(T, m_last) if block_size is None else int(block_size)
    tasks = [(model, T, J, w, replicates, l, alpha, s) for s in _children(seed, n_rep)]
    out = _map(_coverage_task, tasks, workers)
    c_hat = np.array([o[0] for o in out])
    lower = np.array([o[1] for o in out])
    upper = np.array([o[2] for o in out])
    covered = (lower <= c0) & (c0 <= upper)
    return CoverageResult(c0, covered, c_hat, upper - c_hat, alpha, T, J, l, replicates)


def _consistency_task(args):
    model, T, J, w, seq = args
    x = models.simulate(model, T, np.random.default_rng(seq))
    per_level = level_covariances(modwt(x, J))
    return optimal_coefficients(aggregate(per_level, w)).c


def consistency(model, Ts, J: int, weights="short-scale", n_rep: int = 50, seed: int = 0,
                workers: int | None = None) -> dict:
    """Median coefficient error ``||c_hat - c0||`` for each sample size in ``Ts``."""
    w = make_weights(weights, J, fit="truncate") if isinstance(weights, str) else weights
    c0 = true_coefficients(model, w)
    out = {}
    for k, T in enumerate(Ts):
        if 2 ** J > T:
            raise InputError(f"J={J} too large for T={T}")
        tasks = [(model, int(T), J, w, s) for s in _children([seed, k], n_rep)]
        c = np.array(_map(_consistency_task, tasks, workers))
        out[int(T)] = np.linalg.norm(c - c0, axis=1)
    return out


def _levels_task(args):
    model, T, J, seq = args
    x = models.simulate(model, T, np.random.default_rng(seq))
    return level_covariances(modwt(x, J))


def wccv_validation(model, T: int, J: int, n_rep: int = 50, seed: int = 0, workers: int | None = None):
    """Monte Carlo mean and standard error of the per-level WCCV estimates.

    Returns ``(mean, se, exact)`` each of shape ``(J, p, p)``.
    """
    tasks = [(model, T, J, s) for s in _children(seed, n_rep)]
    a = np.array(_map(_levels_task, tasks, workers))
    mean = a.mean(axis=0)
    se = a.std(axis=0, ddof=1) / np.sqrt(n_rep)
    return mean, se, models.theoretical_levels(model, J)

