"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from nrcdt import kernels
from nrcdt.cdt import QuantileGrid
from nrcdt.datasets import make_template
from nrcdt.measures import MERGE_TOL, TIE_TOL, make_measure_2d
from nrcdt.radon import AngleGrid


def radon_case(m, L, M):
    th = AngleGrid(L).angles
    args = (m.points, m.weights, np.cos(th), np.sin(th), QuantileGrid(M).levels, True, MERGE_TOL, TIE_TOL)
    return lambda k: k(*args)


def svm_case(n, d, iters):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(n, d))
    y = np.where(x[:, 0] + 0.5 * rng.normal(size=n) > 0, 1.0, -1.0)
    gram = x @ x.T
    return lambda k: k(gram, y, 1e-2, iters, 0.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.BACKEND != "compiled":
        print("compiled extension not available; only the fallback can be timed")
    rng = np.random.default_rng(1)
    cases = [
        ("radon_quantiles", "random 500 atoms, L=64, M=64",
         radon_case(make_measure_2d(rng.normal(size=(500, 2)), rng.uniform(size=500)), 64, 64)),
        ("radon_quantiles", "64x64 template, L=16, M=64", radon_case(make_template("shield", 64), 16, 64)),
        ("radon_quantiles", "64x64 template, L=128, M=64", radon_case(make_template("shield", 64), 128, 64)),
        ("svm_subgradient", "n=60, d=1024, 2000 steps", svm_case(60, 1024, 2000)),
        ("svm_subgradient", "n=180, d=64, 2000 steps", svm_case(180, 64, 2000)),
    ]
    print(f"{'kernel':<17} {'case':<32} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, label, run in cases:
        times = {}
        for backend in ("python", "compiled"):
            try:
                k = kernels.get_kernel(backend, name)
            except ImportError:
                continue
            times[backend] = min(timeit.repeat(lambda: run(k), number=1, repeat=args.repeat)) * 1e3
        py = times["python"]
        co = times.get("compiled")
        speed = f"{py / co:7.1f}x" if co else "     n/a"
        co_s = f"{co:12.2f}" if co else f"{'n/a':>12}"
        print(f"{name:<17} {label:<32} {py:10.2f} {co_s} {speed}")


if __name__ == "__main__":
    main()
