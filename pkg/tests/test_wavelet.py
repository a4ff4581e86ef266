import numpy as np
import pytest

from oracles import haar_taps, modwt_naive, wccv_loop
from wvfuse import InputError, SignalArray, modwt, wccv_hat
from wvfuse.wavelet import (
    WaveletPyramid,
    default_levels,
    demean,
    flatten_wccv,
    haar_filter,
    level_covariances,
    max_level,
    unflatten_wccv,
    wavelet_variance,
    wccv_matrices,
)


@pytest.mark.parametrize("j,expected", [(1, [0.5, -0.5]), (2, [0.25, 0.25, -0.25, -0.25])])
def test_haar_filter_small(j, expected):
    np.testing.assert_array_equal(haar_filter(j), expected)


def test_haar_filter_identities():
    for j in range(1, 8):
        h = haar_filter(j)
        assert h.size == 2 ** j
        assert h.sum() == 0.0
        assert np.isclose(np.sum(h ** 2), 2.0 ** -j, rtol=0, atol=1e-15)
    assert np.sum(haar_filter(3) ** 2) == 0.125


def test_modwt_ramp():
    pyr = modwt(np.array([1.0, 2.0, 3.0, 4.0]), 1)
    np.testing.assert_array_equal(pyr.level(1)[0], [0.5, 0.5, 0.5])
    assert pyr.coefficient_counts.tolist() == [3]


def test_constant_signal_has_zero_coefficients():
    pyr = modwt(np.full(64, 7.0), 5)
    for w in pyr.levels:
        assert not np.any(w)


def test_counts_and_lengths():
    pyr = modwt(np.zeros(100), 3)
    assert tuple(pyr.coefficient_counts) == (99, 97, 93)
    assert tuple(pyr.filter_lengths) == (2, 4, 8)


def test_too_many_levels_names_max():
    with pytest.raises(InputError, match="maximum admissible J is 6"):
        modwt(np.zeros(100), 7)
    modwt(np.zeros(128), 7)


def test_matches_naive_convolution(rng):
    for _ in range(20):
        p = int(rng.integers(1, 5))
        T = int(rng.integers(2, 257))
        J = int(rng.integers(1, min(6, int(np.log2(T))) + 1))
        x = rng.standard_normal((p, T)) * rng.uniform(0.1, 10)
        pyr = modwt(x, J)
        for got, want in zip(pyr.levels, modwt_naive(x, J)):
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


def test_shift_invariance(rng):
    x = rng.standard_normal((2, 200))
    a, b = modwt(x, 5), modwt(x + 123.25, 5)
    for u, v in zip(a.levels, b.levels):
        np.testing.assert_allclose(u, v, rtol=0, atol=1e-12)


def test_wccv_examples():
    w = np.array([[1.0, -1, 1, -1], [1.0, 0, 1, 0], [0.0, 1, 0, 1]])
    pyr = WaveletPyramid((w,), 5)
    assert wccv_hat(pyr, 0, 0, 1) == 1.0
    assert wccv_hat(pyr, 1, 2, 1) == 0.0


def test_wccv_brute_force_and_symmetry(rng):
    x = rng.standard_normal((4, 300))
    pyr = modwt(x, 6)
    a = level_covariances(pyr)
    for j in range(1, 7):
        np.testing.assert_allclose(a[j - 1], wccv_loop(pyr.level(j)), rtol=0, atol=1e-12)
        for i in range(4):
            for k in range(4):
                assert wccv_hat(pyr, i, k, j) == wccv_hat(pyr, k, i, j)
        assert np.array_equal(a[j - 1], a[j - 1].T)


def test_scaling_identity(rng):
    x = rng.standard_normal((2, 512))
    s = 3.7
    a = level_covariances(modwt(x, 5))
    y = x.copy()
    y[0] *= s
    b = level_covariances(modwt(y, 5))
    np.testing.assert_allclose(b[:, 0, 0], s * s * a[:, 0, 0], rtol=1e-12)
    np.testing.assert_allclose(b[:, 0, 1], s * a[:, 0, 1], rtol=1e-12)


def test_white_noise_wv_monte_carlo():
    # E[nu_j] = sigma^2 / 2^j for iid noise; 2000 replicates, 3 standard errors
    rng = np.random.default_rng(5)
    reps = np.array([wavelet_variance(rng.standard_normal(256), 3)[0] for _ in range(2000)])
    mean = reps.mean(axis=0)
    se = reps.std(axis=0, ddof=1) / np.sqrt(reps.shape[0])
    target = 2.0 ** -np.arange(1, 4)
    assert np.all(np.abs(mean - target) < 3 * se)


def test_wccv_matrices_univariate_and_duplicates(rng):
    x = rng.standard_normal(256)
    pyr = modwt(x, 4)
    w = np.array([0.1, 0.2, 0.3, 0.4])
    sc = wccv_matrices(pyr, w)
    nu = wavelet_variance(x, 4)[0]
    assert np.isclose(sc.weighted[0, 0], w @ nu, rtol=1e-14)
    dup = wccv_matrices(modwt(np.vstack([x, x]), 4), w)
    for a in dup.per_level:
        assert np.all(a == a[0, 0])
    assert np.linalg.matrix_rank(dup.weighted) == 1


def test_flatten_order():
    p, J = 3, 2
    a = np.arange(J * p * p, dtype=float).reshape(J, p, p)
    g = flatten_wccv(a)
    # (j-1) p^2 + (i-1) p + k with 1-based i, k, j -> 0-based j*p*p + i*p + k
    assert g[1 * 9 + 2 * 3 + 1] == a[1, 2, 1]
    np.testing.assert_array_equal(unflatten_wccv(g, p), a)


def test_demean():
    out = demean(SignalArray(np.array([[1.0, 2, 3], [5.0, 5, 5], [-1.0, 0, 1]])))
    np.testing.assert_array_equal(out.data, [[-1, 0, 1], [0, 0, 0], [-1, 0, 1]])


def test_signal_array_validation():
    with pytest.raises(InputError):
        SignalArray(np.array([[1.0]]))
    with pytest.raises(InputError):
        SignalArray(np.array([[1.0, np.nan]]))
    with pytest.raises(InputError):
        SignalArray(np.zeros((1, 4)), sample_rate_hz=0)
    s = SignalArray(np.arange(12.0).reshape(2, 6))
    halves = s.split_halves()
    assert halves.p == 4 and halves.T == 3
    np.testing.assert_array_equal(halves.data[2], [3, 4, 5])


def test_default_levels():
    assert max_level(100) == 6
    assert default_levels(2 ** 15) == 14
    assert default_levels(2) == 1
