"""Compare the compiled kernels against the pure-numpy fallback.

Run with:  python3 benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from exam import _kernels
from exam._kernels import _numpy_ops

try:
    from exam._kernels import _fastops
except ImportError:
    _fastops = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_region_pool(impl, B, n, w, k, repeats):
    rng = np.random.default_rng(0)
    e = rng.normal(size=(B, n, w, k)).astype(np.float32)
    u = rng.normal(size=(B, n, w, k)).astype(np.float32)
    valid = np.ones((n, w), dtype=bool)
    valid[0, 0] = valid[-1, -1] = False

    fwd = timeit(lambda: impl.region_pool_forward(e, u, valid), repeats)
    out, am = impl.region_pool_forward(e, u, valid)
    g = rng.normal(size=out.shape).astype(np.float32)
    bwd = timeit(lambda: impl.region_pool_backward(e, u, am, g), repeats)
    return fwd, bwd


def bench_scatter(impl, rows, vocab, k, repeats):
    rng = np.random.default_rng(0)
    ids = rng.integers(0, vocab, rows)
    grads = rng.normal(size=(rows, k)).astype(np.float32)

    def run():
        table = np.zeros((vocab, k), dtype=np.float32)
        impl.scatter_add_rows(table, ids, grads)

    return timeit(run, repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=64)
    parser.add_argument("--text-len", type=int, default=64)
    parser.add_argument("--window", type=int, default=7)
    parser.add_argument("--embed-dim", type=int, default=128)
    parser.add_argument("--vocab", type=int, default=50_000)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    impls = [("numpy", _numpy_ops)]
    if _fastops is not None:
        impls.append(("cython", _fastops))
    print(f"active backend: {_kernels.BACKEND}")
    print(f"region pool: B={args.batch} n={args.text_len} "
          f"w={args.window} k={args.embed_dim}")
    results = {}
    for name, impl in impls:
        fwd, bwd = bench_region_pool(impl, args.batch, args.text_len,
                                     args.window, args.embed_dim, args.repeats)
        sc = bench_scatter(impl, args.batch * args.text_len, args.vocab,
                           args.embed_dim, args.repeats)
        results[name] = (fwd, bwd, sc)
        print(f"  {name:>7}: pool fwd {fwd * 1e3:7.3f} ms   "
              f"pool bwd {bwd * 1e3:7.3f} ms   scatter {sc * 1e3:7.3f} ms")
    if len(results) == 2:
        for i, label in enumerate(["pool fwd", "pool bwd", "scatter"]):
            speedup = results["numpy"][i] / results["cython"][i]
            print(f"  cython speedup on {label}: {speedup:.2f}x")


if __name__ == "__main__":
    main()
