import numpy as np
import pytest

from wvfuse import InputError, WnAr1Model, WnRwModel, case1, case2, gmwm_fit_wn_rw, simulate
from wvfuse import models
from wvfuse.models import (
    _ar1_haar_wv,
    closed_form_wccv_wn_ar1,
    closed_form_wccv_wn_rw,
    model_from_dict,
    model_to_dict,
    nnls_two,
    preset_matrices,
    simulate_wn_ar1,
    simulate_wn_rw,
)
from wvfuse.wavelet import haar_filter, level_covariances, modwt, wavelet_variance


def test_noise_free_constant():
    m = WnRwModel(np.zeros((3, 3)), np.zeros((3, 3)), delta=5.0)
    x = simulate_wn_rw(m, 50, 0)
    assert np.all(x.data == 5.0)


def test_white_noise_only():
    m = WnRwModel(np.diag([1.0, 4.0]), np.zeros((2, 2)), delta=2.0)
    x = simulate_wn_rw(m, 100_000, np.random.default_rng(1))
    np.testing.assert_allclose(x.data.var(axis=1), [1.0, 4.0], rtol=0.05)
    np.testing.assert_allclose(x.data.mean(axis=1), [2.0, 2.0], atol=0.03)


def test_cholesky_coloring():
    q = np.array([[2.0, 0.6, -0.3], [0.6, 1.0, 0.2], [-0.3, 0.2, 0.5]])
    m = WnRwModel(np.zeros((3, 3)), q)
    x = simulate_wn_rw(m, 100_000, np.random.default_rng(2))
    eta = np.diff(x.data, axis=1)
    emp = np.cov(eta)
    assert np.all(np.abs(emp - q) <= 0.05 * np.sqrt(np.outer(np.diag(q), np.diag(q))))


def test_determinism_and_seed_dependence():
    a = simulate(case1(), 256, np.random.default_rng(3))
    b = simulate(case1(), 256, np.random.default_rng(3))
    c = simulate(case1(), 256, np.random.default_rng(4))
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_invalid_models():
    with pytest.raises(InputError):
        WnRwModel(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(InputError):
        WnRwModel(np.array([[1.0, 0.1], [0.1, 1.0]]), np.zeros((2, 2)))
    with pytest.raises(InputError):
        WnAr1Model(np.eye(1), ((1.0, np.eye(1)),))


def test_ar1_stationary_variance():
    m = WnAr1Model(np.zeros((1, 1)), ((0.5, np.array([[0.75]])),))
    x = simulate_wn_ar1(m, 100_000, np.random.default_rng(5))
    assert abs(x.data.var() - 1.0) < 0.05


def test_ar1_phi_zero_is_white():
    m = WnAr1Model(np.array([[1.0]]), ((0.0, np.array([[2.0]])),))
    x = simulate_wn_ar1(m, 100_000, np.random.default_rng(6)).data[0]
    assert abs(x.var() - 3.0) < 0.15
    assert abs(np.corrcoef(x[1:], x[:-1])[0, 1]) < 0.02


def test_ar1_burn_in_option():
    m = case2()
    x = simulate_wn_ar1(m, 128, np.random.default_rng(0), burn_in=50)
    assert x.data.shape == (6, 128)


def test_closed_form_wn_rw_examples():
    m = WnRwModel(np.eye(2), np.zeros((2, 2)))
    np.testing.assert_allclose(closed_form_wccv_wn_rw(m, 1), 0.5 * np.eye(2))
    q = np.array([[1.0, 0.3], [0.3, 2.0]])
    m = WnRwModel(np.zeros((2, 2)), q)
    np.testing.assert_allclose(closed_form_wccv_wn_rw(m, 1), q / 4)


def _brute_wv(acov, j):
    """h' Gamma h for the level-j Haar taps and autocovariance function ``acov``."""
    h = haar_filter(j)
    lag = np.abs(np.subtract.outer(np.arange(h.size), np.arange(h.size)))
    return h @ acov(lag) @ h


def test_closed_forms_against_filter_quadratic_forms():
    for j in range(1, 8):
        tau = 2 ** j
        # random walk: cov(b_s, b_t) = min(s, t) for unit innovations
        h = haar_filter(j)
        idx = np.arange(1, tau + 1)
        rw = h @ np.minimum.outer(idx, idx) @ h
        assert np.isclose(rw, (tau ** 2 + 2) / (12 * tau), rtol=1e-12)
        assert np.isclose(_brute_wv(lambda d: (d == 0).astype(float), j), 1 / tau, rtol=1e-12)
        for phi in (0.3, 0.9, 0.9975214):
            want = _brute_wv(lambda d: phi ** d / (1 - phi ** 2), j)
            assert np.isclose(_ar1_haar_wv(phi, tau), want, rtol=1e-9)


def test_case2_closed_form_against_monte_carlo():
    # with J small the AR(1) terms are well mixed; compare averaged estimates
    m = case2()
    rng = np.random.default_rng(8)
    reps = np.array([level_covariances(modwt(simulate(m, 2 ** 12, rng), 3)) for _ in range(60)])
    mean, se = reps.mean(axis=0), reps.std(axis=0, ddof=1) / np.sqrt(60)
    exact = np.stack([closed_form_wccv_wn_ar1(m, j) for j in (1, 2, 3)])
    z = np.abs(mean - exact) / se
    assert np.mean(z < 3) > 0.95


def test_presets():
    c1 = case1()
    assert c1.p == 6
    np.testing.assert_allclose(np.diag(c1.R) / models.R_SCALE,
                               [2.805556, 1.977778, 1.361111, 1.063889, 1.069444, 2.538889])
    assert np.isclose(c1.Q[0, 0] / models.Q_SCALE, 0.255058)
    assert np.isclose(c1.Q[-1, -1] / models.Q_SCALE, 2.501286)
    assert np.linalg.eigvalsh(c1.Q)[0] > 0
    c2 = case2()
    assert tuple(phi for phi, _ in c2.components) == (0.9975214, 0.9998705, 0.9999933)
    mats = preset_matrices("case2")
    assert set(mats) == {"R", "P1", "P2", "P3", "phi1", "phi2", "phi3"}
    with pytest.raises(InputError):
        models.preset("case3")


def test_model_dict_round_trip():
    for m in (case1(0.25), case2()):
        back = model_from_dict(model_to_dict(m))
        assert model_to_dict(back) == model_to_dict(m)


def test_nnls_two():
    design = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(nnls_two(design, np.array([1.0, 2.0, 3.0])), [1.0, 2.0])
    sol = nnls_two(design, np.array([-1.0, 2.0, 1.0]))
    assert np.all(sol >= 0)
    # brute force over a grid as an oracle
    grid = np.linspace(0, 3, 301)
    best = min(((np.sum((np.array([-1.0, 2.0, 1.0]) - design @ np.array([a, b])) ** 2), a, b)
                for a in grid for b in grid))
    assert np.sum((np.array([-1.0, 2.0, 1.0]) - design @ sol) ** 2) <= best[0] + 1e-12


def test_gmwm_white_noise():
    rng = np.random.default_rng(9)
    fits = [gmwm_fit_wn_rw(rng.standard_normal(2 ** 16), 14) for _ in range(100)]
    s2 = np.median([f.sigma2 for f in fits])
    g2 = np.median([f.gamma2 for f in fits])
    assert abs(s2 - 1) < 0.05
    assert g2 < 1e-2 * s2 / 2 ** 16


def test_gmwm_random_walk():
    rng = np.random.default_rng(10)
    fits = [gmwm_fit_wn_rw(np.cumsum(rng.standard_normal(2 ** 14) * 1e-3), 12) for _ in range(100)]
    assert abs(np.median([f.gamma2 for f in fits]) / 1e-6 - 1) < 0.1


def test_gmwm_zero_signal():
    f = gmwm_fit_wn_rw(np.zeros(256), 6)
    assert (f.sigma2, f.gamma2) == (0.0, 0.0)
    with pytest.raises(InputError):
        gmwm_fit_wn_rw(np.zeros(16), 5)
