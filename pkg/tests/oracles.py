"""Independent reference implementations used only by the tests.

None of these import the routines they check; they follow the defining
formulas as literally as possible and are slow on purpose.
"""

import numpy as np


def haar_taps(j):
    half = 2 ** (j - 1)
    return np.r_[np.full(half, 2.0 ** -j), np.full(half, -(2.0 ** -j))]


def modwt_naive(x, J):
    """W[i][j-1][t] = sum_l h_{j,l} x[i, t + L_j - 1 - l], full support only."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p, T = x.shape
    out = []
    for j in range(1, J + 1):
        h = haar_taps(j)
        L = h.size
        M = T - L + 1
        w = np.zeros((p, M))
        for l in range(L):
            # term l of the sum for every t at once: x[:, t + L - 1 - l]
            w += h[l] * x[:, L - 1 - l:L - 1 - l + M]
        out.append(w)
    return out


def wccv_loop(w_level):
    p, M = w_level.shape
    a = np.zeros((p, p))
    for i in range(p):
        for k in range(p):
            s = 0.0
            for t in range(M):
                s += w_level[i, t] * w_level[k, t]
            a[i, k] = s / M
    return a


def kkt_minimizer(a):
    """Minimize c'Ac subject to 1'c = 1 through the bordered KKT system."""
    p = a.shape[0]
    kkt = np.block([[2 * a, np.ones((p, 1))], [np.ones((1, p)), np.zeros((1, 1))]])
    rhs = np.r_[np.zeros(p), 1.0]
    return np.linalg.solve(kkt, rhs)[:p]


def coef_from_gamma(gamma, omega, p):
    """The optimal-coefficient map written from scratch (explicit inverse)."""
    J = len(omega)
    a = sum(omega[j] * np.asarray(gamma[j * p * p:(j + 1) * p * p]).reshape(p, p) for j in range(J))
    inv = np.linalg.inv(a)
    one = np.ones(p)
    return inv @ one / (one @ inv @ one)


def finite_diff_jacobian(gamma, omega, p, step):
    gamma = np.asarray(gamma, dtype=float)
    cols = []
    for m in range(gamma.size):
        e = np.zeros_like(gamma)
        e[m] = step
        cols.append((coef_from_gamma(gamma + e, omega, p) - coef_from_gamma(gamma - e, omega, p)) / (2 * step))
    return np.column_stack(cols)


def random_spd(rng, p, cond=50.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    eig = np.exp(rng.uniform(0, np.log(cond), size=p))
    a = (q * eig) @ q.T
    return 0.5 * (a + a.T)
