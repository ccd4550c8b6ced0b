"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--repeat N]
"""
import argparse
import time

import numpy as np

from rfsgd import _backend
from rfsgd.data import SyntheticDistribution, sample
from rfsgd.features import GaussianKernel, sample_features
from rfsgd.loss import SurrogateLoss
from rfsgd.optim import Schedule, fit_kernel, fit_rff
from rfsgd.spectra import gram


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    dist = SyntheticDistribution()
    kernel = GaussianKernel(1.1, 2)
    loss, sched = SurrogateLoss(), Schedule()
    X, y = sample(dist, 12000, seed=0)
    fs = sample_features(kernel, 1000, seed=1)
    fs_small = sample_features(kernel, 100, seed=1)
    fs_gram = sample_features(kernel, 1024, seed=2)
    pts = X[:200]

    cases = {
        "rff_sgd  M=1000 T=12000": lambda b: fit_rff(fs, X, y, sched, loss, [12000], backend=b),
        "rff_sgd  M=100 T=12000": lambda b: fit_rff(fs_small, X, y, sched, loss, [12000],
                                                    backend=b),
        "kernel_sgd gaussian T=2000": lambda b: fit_kernel(kernel, X[:2000], y[:2000], sched,
                                                           loss, [2000], backend=b),
        "rff_gram n=200 M=1024": lambda b: gram(fs_gram, pts, backend=b),
    }
    names = sorted(_backend.BACKENDS)
    print(f"{'kernel':<30}" + "".join(f"{n:>12}" for n in names) +
          ("     speedup" if len(names) == 2 else ""))
    for label, fn in cases.items():
        t = {n: best_of(lambda: fn(n), args.repeat) for n in names}
        row = f"{label:<30}" + "".join(f"{t[n]:>11.3f}s" for n in names)
        if len(names) == 2:
            row += f"{t['python'] / t['compiled']:>11.1f}x"
        print(row)
    if len(names) < 2:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
