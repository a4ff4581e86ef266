import numpy as np
import pytest

from oracles import finite_diff_jacobian
from wvfuse import BootstrapConfig, InputError, default_block_size, estimate_V, gradient_G, modwt
from wvfuse.inference import (
    _block_layout,
    bootstrap_wccv,
    bootstrap_wccv_direct,
    intervals,
    mbb_resample,
    sandwich,
    svo_inference,
    trim,
)
from wvfuse.svo import make_weights
from wvfuse.wavelet import flatten_wccv, level_covariances


def test_trim_example():
    pyr = modwt(np.random.default_rng(0).standard_normal((2, 100)), 3)
    y, d = trim(pyr)
    assert y.shape == (2, 3, 93)
    assert d.tolist() == [6, 4, 0]
    np.testing.assert_array_equal(y[:, 2], pyr.level(3))
    y1, d1 = trim(modwt(np.arange(10.0), 1))
    assert d1.tolist() == [0] and y1.shape == (1, 1, 9)


def test_block_layout():
    n, lens = _block_layout(93, 10)
    assert n == 10 and lens[-1] == 3 and lens.sum() == 93
    n, lens = _block_layout(90, 10)
    assert n == 9 and np.all(lens == 10)


@pytest.mark.parametrize("T,expected", [(1000, 10), (8, 2), (2 ** 20, 102), (2 ** 15, 32), (1001, 11)])
def test_default_block_size(T, expected):
    assert default_block_size(T) == expected


def test_block_size_clamped_and_checked():
    assert default_block_size(1000, m_last=4) == 4
    pyr = modwt(np.zeros((1, 16)), 4)
    with pytest.raises(InputError):
        BootstrapConfig(5, 10).check(pyr)
    with pytest.raises(InputError):
        BootstrapConfig(2, 1)


def test_full_block_reproduces_data(rng):
    x = rng.standard_normal((2, 64))
    pyr = modwt(x, 3)
    m_last = int(pyr.coefficient_counts[-1])
    g = bootstrap_wccv(pyr, BootstrapConfig(m_last, 20, 1))
    # one block at the only start; completion runs vary, so compare the trimmed part
    out = mbb_resample(pyr, BootstrapConfig(m_last, 20, 1), np.random.default_rng(3))
    y, _ = trim(pyr)
    for j in range(3):
        np.testing.assert_array_equal(out[j][:, :m_last], y[:, j])
    assert g.shape == (20, 3 * 4)
    # top level has no completion, so its WCCV is exactly the original
    top = level_covariances(pyr)[2].ravel()
    np.testing.assert_allclose(g[:, 8:], np.tile(top, (20, 1)), rtol=1e-13)


def test_joint_resampling_keeps_relations(rng):
    x = rng.standard_normal(300)
    pyr = modwt(np.vstack([x, 2 * x]), 4)
    cfg = BootstrapConfig(7, 5, 0)
    r = np.random.default_rng(11)
    for _ in range(5):
        for w in mbb_resample(pyr, cfg, r):
            np.testing.assert_allclose(w[1], 2 * w[0], rtol=1e-15)


def test_fast_path_matches_literal_resampling(rng):
    x = rng.standard_normal((3, 777)).cumsum(axis=1)
    pyr = modwt(x, 5)
    cfg = BootstrapConfig(9, 40, 123)
    np.testing.assert_allclose(bootstrap_wccv(pyr, cfg), bootstrap_wccv_direct(pyr, cfg), rtol=1e-10, atol=1e-13)


def test_V_symmetric_psd_deterministic(rng):
    x = rng.standard_normal((3, 500))
    pyr = modwt(x, 4)
    cfg = BootstrapConfig(8, 60, 42)
    v1, v2 = estimate_V(pyr, cfg), estimate_V(pyr, cfg)
    assert v1.shape == (4 * 9, 4 * 9)
    assert np.array_equal(v1, v2) and np.array_equal(v1, v1.T)
    assert np.linalg.eigvalsh(v1)[0] > -1e-12 * np.abs(v1).max()
    assert not np.array_equal(v1, estimate_V(pyr, BootstrapConfig(8, 60, 43)))


def test_V_zero_signal():
    pyr = modwt(np.zeros((2, 64)), 3)
    assert not np.any(estimate_V(pyr, BootstrapConfig(4, 10, 0)))


def test_V_matches_monte_carlo_variance():
    # p=1, J=1, iid N(0,1), T=2^14: bootstrap variance of sqrt(T) gamma within 25% of MC truth
    T = 2 ** 14
    rng = np.random.default_rng(77)
    gam = np.array([level_covariances(modwt(rng.standard_normal(T), 1))[0, 0, 0] for _ in range(1000)])
    mc = T * gam.var(ddof=1)
    l = default_block_size(T)
    boot = [estimate_V(modwt(rng.standard_normal(T), 1), BootstrapConfig(l, 200, s))[0, 0] for s in range(10)]
    assert abs(np.mean(boot) / mc - 1) < 0.25


def test_V_converges_in_H(rng):
    x = rng.standard_normal((2, 4000))
    x[1] += 0.5 * x[0]
    pyr = modwt(x, 5)
    a = estimate_V(pyr, BootstrapConfig(13, 500, 1))
    b = estimate_V(pyr, BootstrapConfig(13, 2000, 2))
    assert np.linalg.norm(a - b) < 0.1 * np.linalg.norm(b)


def test_gradient_matches_finite_differences(rng):
    p, J = 3, 2
    per = []
    for _ in range(J):
        m = rng.standard_normal((p, p))
        per.append(m @ m.T + p * np.eye(p))
    gamma = flatten_wccv(np.array(per))
    omega = np.array([0.3, 0.7])
    g = gradient_G(gamma, omega, p)
    fd = finite_diff_jacobian(gamma, omega, p, 1e-6 * np.linalg.norm(gamma))
    assert np.max(np.abs(g - fd)) <= 1e-4 * np.max(np.abs(fd))


def test_gradient_p1_and_euler(rng):
    assert np.array_equal(gradient_G(np.array([2.0, 0.5]), [0.5, 0.5], 1), np.zeros((1, 2)))
    x = rng.standard_normal((4, 400)).cumsum(axis=1)
    gamma = flatten_wccv(level_covariances(modwt(x, 6)))
    g = gradient_G(gamma, make_weights("equal", 6), 4)
    assert np.max(np.abs(g @ gamma)) < 1e-10 * max(1.0, np.max(np.abs(g)) * np.max(np.abs(gamma)))


def test_interval_examples():
    ci = intervals([1.0], np.array([[1.0]]), 0.05, 100)
    assert abs(ci.half_width[0] - 0.1959964) < 1e-7
    zero = intervals([0.3, 0.7], np.zeros((2, 2)), 0.05, 50)
    np.testing.assert_array_equal(zero.lower, zero.upper)
    with pytest.raises(InputError):
        intervals([1.0], np.eye(1), 1.5, 10)
    with pytest.raises(ArithmeticError):
        intervals([0.5, 0.5], np.diag([1.0, -0.1]), 0.05, 10)


def test_sandwich_symmetric(rng):
    g = rng.standard_normal((3, 18))
    m = rng.standard_normal((18, 18))
    s = sandwich(g, m @ m.T)
    assert np.array_equal(s, s.T)


def test_svo_inference_deterministic(rng):
    x = rng.standard_normal((3, 2048)).cumsum(axis=1) * 1e-3 + rng.standard_normal((3, 2048))
    w = make_weights("short-scale", 10, fit="truncate")
    cfg = BootstrapConfig(13, 100, 9)
    a, b = svo_inference(x, w, 10, cfg), svo_inference(x, w, 10, cfg)
    assert np.array_equal(a.estimates.Sigma_star, b.estimates.Sigma_star)
    assert np.array_equal(a.intervals.lower, b.intervals.lower)
    assert np.all(a.intervals.lower <= a.c_hat.c) and np.all(a.c_hat.c <= a.intervals.upper)
    np.testing.assert_allclose(a.intervals.upper - a.c_hat.c, a.c_hat.c - a.intervals.lower, rtol=1e-12)
