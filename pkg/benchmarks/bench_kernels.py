"""Time the numba kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--quick]

Both backends get identical inputs; the first numba call (compilation or
cache load) is excluded.  Discrete outputs are also checked for equality.
"""
import argparse
import time

import numpy as np

from gdae import kernels


def cases(quick):
    g = np.random.default_rng(0)
    n = 20_000 if quick else 200_000
    K = 10
    cdf = np.cumsum(g.random((K, K)) + 0.05, axis=1)
    yield "discrete_chain", (cdf, 0.5, 0, g.random((n, 3))), True

    x0s = g.integers(0, K, size=n // 10)
    yield "discrete_walkback", (cdf, 0.5, x0s, 0.5, 20, 0, g.random(len(x0s) * 80)), True

    d, m = 10, 500
    ax, axt = g.normal(size=(m, d)), g.normal(size=(m, d))
    steps = 500 if quick else 5000
    yield "parzen_chain", (ax, axt, 0.2, 1.0, 1.0, np.zeros(d), g.random((steps, 1 + 4 * d))), False

    X, XT = g.normal(size=(200, d)), g.normal(size=(200, d))
    yield "parzen_log_prob_matrix", (X, XT, ax, axt, 0.2, 1.0), False

    T = g.random((200, 200)) + 0.01
    T /= T.sum(axis=0)
    yield "power_iteration", (np.ascontiguousarray(T.T), 1e-13, 100_000), False


def best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args()
    jit, ref = kernels.numba_backend, kernels.numpy_backend
    if jit is None:
        raise SystemExit("numba backend unavailable (GDAE_DISABLE_NUMBA set or numba missing)")
    print(f"{'kernel':<24}{'numpy s':>10}{'numba s':>10}{'speedup':>10}  match")
    for name, inputs, exact in cases(args.quick):
        getattr(jit, name)(*inputs)  # compile / load cache
        t_ref, a = best_of(getattr(ref, name), inputs, args.repeat)
        t_jit, b = best_of(getattr(jit, name), inputs, args.repeat)
        a, b = (a, b) if isinstance(a, tuple) else ((a,), (b,))
        if exact:
            match = all(np.array_equal(u, v) for u, v in zip(a, b))
        else:
            match = all(np.allclose(u, v, rtol=1e-9, atol=1e-9) for u, v in zip(a, b))
        print(f"{name:<24}{t_ref:>10.4f}{t_jit:>10.4f}{t_ref / t_jit:>9.1f}x  {'yes' if match else 'NO'}")


if __name__ == "__main__":
    main()
