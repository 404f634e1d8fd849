"""Time the numba kernels against the numpy fallback on a synthetic cache.

    python benchmarks/bench_kernels.py [--K 50] [--N 5000] [--J 3] [--repeat 20]

The first numba call compiles (or loads the on-disk cache) and is excluded.
"""

import argparse
import time

import numpy as np

from fracnb.kernels import _numba, _numpy


def make_cache(K, N, J, seed=0):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(J), size=(K, N))
    cond = np.ascontiguousarray(np.log(p))
    log_prior = np.log(np.full(J, 1.0 / J))
    y = rng.integers(0, J, N)
    w = rng.uniform(0, 1, K)
    return cond, log_prior, y, w


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(mod, cond, log_prior, y, w):
    scores = mod.compute_scores(cond, log_prior, w)
    v = np.linspace(-0.5, 1.5, len(w))
    coeff = np.full(len(w), 3.0)
    return {
        "compute_scores": lambda: mod.compute_scores(cond, log_prior, w),
        "nll_from_scores": lambda: mod.nll_from_scores(scores, y),
        "nll_gradient": lambda: mod.nll_gradient(cond, scores, y),
        "trial_nll": lambda: mod.trial_nll(scores, cond[0], 0.25, y),
        "prox_penalty": lambda: mod.prox_penalty(v, coeff, 10.0, 0.95, 1e-6),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=50)
    ap.add_argument("--N", type=int, default=5000)
    ap.add_argument("--J", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    cond, log_prior, y, w = make_cache(args.K, args.N, args.J)
    fast = cases(_numba, cond, log_prior, y, w)
    slow = cases(_numpy, cond, log_prior, y, w)
    for fn in fast.values():
        fn()  # compile

    print(f"K={args.K} N={args.N} J={args.J}, best of {args.repeat}")
    print(f"{'kernel':<18}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name in fast:
        t_np = best_of(slow[name], args.repeat) * 1e3
        t_nb = best_of(fast[name], args.repeat) * 1e3
        print(f"{name:<18}{t_np:>12.3f}{t_nb:>12.3f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
