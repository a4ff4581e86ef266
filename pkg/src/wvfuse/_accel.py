"""Hot kernels with a numba path and a pure-numpy fallback.

Set ``WVFUSE_DISABLE_NUMBA=1`` before import to force the numpy path (also
used automatically when numba is not importable). Both paths implement the
same arithmetic; within one path results are deterministic and independent of
the numba thread count, because every bootstrap replicate owns its output row.
"""

import os

import numpy as np

_DISABLED = os.environ.get("WVFUSE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by WVFUSE_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    # the system TBB is often too old for numba; avoid the warning and use OpenMP
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    NUMBA_AVAILABLE = True
except ImportError:
    numba = None
    NUMBA_AVAILABLE = False

BACKEND = "numba" if NUMBA_AVAILABLE else "numpy"


# --------------------------------------------------------------------------
# Haar MODWT step
# --------------------------------------------------------------------------

def _haar_step_numpy(s, m, scale):
    """One dyadic level from moving sums of length ``m``.

    ``s[:, t]`` holds the sum of ``m`` consecutive samples starting at ``t``.
    Returns the level coefficients (later half minus earlier half, times
    ``scale``) and the moving sums of length ``2m``.
    """
    n = s.shape[1] - m
    w = (s[:, m:m + n] - s[:, :n]) * scale
    s_next = s[:, :n] + s[:, m:m + n]
    return w, s_next


# --------------------------------------------------------------------------
# Moving-block bootstrap replicate sums
# --------------------------------------------------------------------------

def _bootstrap_gamma_numpy(prefix, counts, starts, block_lens, completion, run_lens):
    """WCCV vectors of every bootstrap replicate from product prefix sums.

    prefix: (J, Q, M_1 + 1) cumulative sums of coefficient products per level
        and sensor pair, zero-padded past ``counts[j] + 1``.
    counts: (J,) coefficients per level, M_j.
    starts: (H, B) 0-based block starts into the trimmed range.
    block_lens: (B,) columns taken from each block (last one may be short).
    completion: (H, J) 0-based start of the completion run per level.
    run_lens: (J,) completion run lengths D_j.
    Returns (H, J, Q).
    """
    n_rep = starts.shape[0]
    n_lev, n_pair, _ = prefix.shape
    ends = starts + block_lens[None, :]
    # (J, Q, H, B) -> sum over blocks
    blocks = (prefix[:, :, ends] - prefix[:, :, starts]).sum(axis=3)
    out = np.empty((n_rep, n_lev, n_pair))
    for j in range(n_lev):
        t0 = completion[:, j]
        tail = prefix[j][:, t0 + run_lens[j]] - prefix[j][:, t0]
        out[:, j, :] = ((blocks[j] + tail) / counts[j]).T
    return out


# --------------------------------------------------------------------------
# AR(1) recursion
# --------------------------------------------------------------------------

def _ar1_numpy(innov, phi, b0):
    """b_t = phi * b_{t-1} + innov_t along axis 0, starting from ``b0``."""
    from scipy.signal import lfilter

    zi = (phi * b0)[None, :]
    out, _ = lfilter([1.0], [1.0, -phi], innov, axis=0, zi=zi)
    return out


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _haar_step_numba(s, m, scale):
        p, width = s.shape
        n = width - m
        w = np.empty((p, n))
        s_next = np.empty((p, n))
        for i in range(p):
            for t in range(n):
                a = s[i, t]
                b = s[i, t + m]
                w[i, t] = (b - a) * scale
                s_next[i, t] = a + b
        return w, s_next

    @njit(cache=True, parallel=True)
    def _bootstrap_gamma_numba(prefix, counts, starts, block_lens, completion, run_lens):
        n_rep, n_blocks = starts.shape
        n_lev, n_pair, _ = prefix.shape
        out = np.empty((n_rep, n_lev, n_pair))
        for h in prange(n_rep):
            for j in range(n_lev):
                t0 = completion[h, j]
                d = run_lens[j]
                inv = 1.0 / counts[j]
                for q in range(n_pair):
                    row = prefix[j, q]
                    acc = 0.0
                    for b in range(n_blocks):
                        u = starts[h, b]
                        acc += row[u + block_lens[b]] - row[u]
                    acc += row[t0 + d] - row[t0]
                    out[h, j, q] = acc * inv
        return out

    @njit(cache=True)
    def _ar1_numba(innov, phi, b0):
        n, p = innov.shape
        out = np.empty((n, p))
        prev = b0.copy()
        for t in range(n):
            for i in range(p):
                prev[i] = phi * prev[i] + innov[t, i]
                out[t, i] = prev[i]
        return out

    haar_step = _haar_step_numba
    bootstrap_gamma = _bootstrap_gamma_numba
    ar1_recursion = _ar1_numba
else:
    haar_step = _haar_step_numpy
    bootstrap_gamma = _bootstrap_gamma_numpy
    ar1_recursion = _ar1_numpy


def set_num_threads(n):
    """Set the numba worker count; no-op on the numpy path."""
    if NUMBA_AVAILABLE:
        numba.set_num_threads(int(n))


def get_num_threads():
    if NUMBA_AVAILABLE:
        return numba.get_num_threads()
    return 1
