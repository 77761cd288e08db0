"""Time the numba and numpy backends on the hot kernels.

Run with ``python3 benchmarks/bench_kernels.py [--n 200000] [--repeat 5]``.
The first numba call is a warm-up (compilation or cache load) and is not
timed. Both backends must agree exactly; the script aborts if they do not.
"""

import argparse
import timeit

import numpy as np

from tamlearn import _kernels
from tamlearn.bn import sample
from tamlearn.synth import GraphSpec, ModelSpec


def _cases(n: int):
    rng = np.random.Generator(np.random.Philox(0))
    data = rng.integers(0, 3, size=(n, 12)).astype(np.int64)
    cols3 = [0, 4, 7]
    cols8 = list(range(8))
    radices3 = [3] * len(cols3)
    radices8 = [3] * len(cols8)
    bn = ModelSpec("mod", 0.2).compile(GraphSpec("tree", 30, 0, 1).generate())
    return {
        "entropy, 3 columns": lambda b: _kernels.plugin_entropy(data, cols3, radices3, b),
        "entropy, 8 columns": lambda b: _kernels.plugin_entropy(data, cols8, radices8, b),
        "forward sample, d=30": lambda b: sample(bn, n, 7, b).values,
    }


def _same(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable (or disabled); only the numpy backend can run")
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<24}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, fn in _cases(args.n).items():
        ref = fn("numpy")
        t_np = min(timeit.repeat(lambda: fn("numpy"), number=1, repeat=args.repeat)) * 1e3
        if _kernels.HAVE_NUMBA:
            if not _same(fn("numba"), ref):
                raise SystemExit(f"{name}: backends disagree")
            t_nb = min(timeit.repeat(lambda: fn("numba"), number=1, repeat=args.repeat)) * 1e3
            print(f"{name:<24}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<24}{t_np:>12.2f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
