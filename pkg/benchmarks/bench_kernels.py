"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from pursuitlab import kernels


def ar1_case(n):
    rng = np.random.default_rng(0)
    innov = rng.standard_normal(n)
    return lambda k: k.ar1_filter(innov, 0.93, 0.0)


def dcd_case(n, p=6, epochs=50):
    rng = np.random.default_rng(1)
    X = np.hstack([rng.standard_normal((n, p - 1)), np.ones((n, 1))])
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    X[:, 0] += 0.5 * y
    X = np.ascontiguousarray(X)
    q = np.einsum("ij,ij->i", X, X)
    orders = [rng.permutation(n).astype(np.int64) for _ in range(epochs)]

    def run(k):
        alpha, w = np.zeros(n), np.zeros(p)
        for order in orders:
            k.dcd_epoch(X, y, alpha, w, q, order, 1.0)
    return run


CASES = [
    ("ar1_filter n=1,800 (one 30 s run)", ar1_case(1_800)),
    ("ar1_filter n=1,000,000", ar1_case(1_000_000)),
    ("dcd 50 epochs, 57 x 6 (one split)", dcd_case(57)),
    ("dcd 50 epochs, 5,000 x 6", dcd_case(5_000)),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = sorted(kernels.available_backends(), key=lambda n: n != "c")  # compiled first
    print(f"backends: {', '.join(names)} (default: {kernels.BACKEND})")
    header = f"{'case':<38}" + "".join(f"{n + ' (ms)':>14}" for n in names) + (f"{'c speedup':>12}" if len(names) > 1 else "")
    print(header)
    print("-" * len(header))
    for label, case in CASES:
        times = []
        for name in names:
            backend = kernels.get_backend(name)
            times.append(min(timeit.repeat(lambda: case(backend), number=1, repeat=args.repeat)) * 1e3)
        line = f"{label:<38}" + "".join(f"{t:>14.3f}" for t in times)
        if len(times) > 1:
            line += f"{times[1] / times[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
