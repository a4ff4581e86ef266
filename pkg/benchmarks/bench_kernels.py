"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--T 32768]

Both paths run in the same process (the fallback functions are always
defined), on identical inputs, and the script checks they agree before
reporting times.
"""

import argparse
import time

import numpy as np

from wvfuse import _accel, models
from wvfuse.inference import BootstrapConfig, _draw_indices, _pair_index, _product_prefix, default_block_size
from wvfuse.wavelet import modwt


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def haar_case(T, p=6):
    x = np.random.default_rng(0).standard_normal((p, T))

    def run(step):
        cur = x
        m = 1
        out = []
        while 2 * m <= T:
            w, cur = step(cur, m, 0.5 / m)
            out.append(w)
            m *= 2
        return out

    return lambda: run(_accel._haar_step_numpy), lambda: run(_accel._haar_step_numba)


def bootstrap_case(T, H=200, J=12):
    x = models.simulate(models.case1(), T, np.random.default_rng(1))
    pyr = modwt(x, J)
    counts = pyr.coefficient_counts
    l = default_block_size(T, int(counts[-1]))
    cfg = BootstrapConfig(l, H, 3)
    starts, lens, completion, run_lens = _draw_indices(np.random.default_rng(cfg.rng_seed), H, counts, l)
    iu, ku, _ = _pair_index(pyr.p)
    prefix = _product_prefix(pyr, iu, ku)
    c = counts.astype(float)
    args = (prefix, c, starts, lens, completion, run_lens)
    return lambda: _accel._bootstrap_gamma_numpy(*args), lambda: _accel._bootstrap_gamma_numba(*args)


def ar1_case(T, p=6):
    rng = np.random.default_rng(2)
    innov = rng.standard_normal((T, p))
    b0 = rng.standard_normal(p)
    phi = 0.9998705
    return lambda: _accel._ar1_numpy(innov, phi, b0), lambda: _accel._ar1_numba(innov, phi, b0)


def compare(a, b):
    a = a if isinstance(a, list) else [a]
    b = b if isinstance(b, list) else [b]
    return max(float(np.max(np.abs(u - v))) for u, v in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=2 ** 15)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is unavailable (or disabled); nothing to compare")
    if args.threads:
        _accel.set_num_threads(args.threads)

    cases = {
        "haar_pyramid": haar_case(args.T),
        "bootstrap_H200": bootstrap_case(args.T),
        "ar1_recursion": ar1_case(args.T),
    }
    print(f"T={args.T}  numba threads={_accel.get_num_threads()}  best of {args.repeat}")
    print(f"{'kernel':<16}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max |diff|':>12}")
    for name, (np_fn, nb_fn) in cases.items():
        nb_fn()  # compile or load from cache
        t_np, out_np = best_of(np_fn, args.repeat)
        t_nb, out_nb = best_of(nb_fn, args.repeat)
        diff = compare(out_np, out_nb)
        print(f"{name:<16}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
