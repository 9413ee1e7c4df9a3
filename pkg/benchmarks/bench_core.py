#!/usr/bin/env python3
"""Benchmark the fragmentation-gain hot kernel: compiled core vs numpy fallback.

Times the triangular gain operator (the inner loop of every discrete
right-hand-side evaluation) and a full embedded-system RHS, for both
backends when the compiled extension is available.

Usage: python benchmarks/bench_core.py [--sizes 200,400,800,1600] [--repeat 30]
"""
import argparse
import time

import numpy as np

from aggfrag._core import TriGainOperator, available_backends
from aggfrag import discrete as D
from aggfrag import kernels as K
from aggfrag.rates import InitialData, ScalingConfig, power_law_rates


def time_fn(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_operator(sizes, repeat):
    print("triangular gain operator, best of %d (ms)" % repeat)
    header = f"{'N':>6} " + " ".join(f"{b:>12}" for b in available_backends())
    print(header)
    rng = np.random.default_rng(0)
    for N in sizes:
        kern = K.kernel_from_measure(K.SelfSimilarMeasure.lebesgue(), N)
        w = rng.random(N - 1)
        row = [f"{N:>6}"]
        results = {}
        for backend in available_backends():
            op = kern.gain_operator(2, N, backend=backend)
            out = op.apply(w)
            results[backend] = out
            row.append(f"{1e3 * time_fn(lambda: op.apply(w), repeat):12.3f}")
        print(" ".join(row))
        if len(results) == 2:
            a, b = results["cython"], results["python"]
            rel = np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300))
            assert rel < 1e-12, f"backend mismatch: rel={rel}"


def bench_rhs(sizes, repeat):
    print("\nfull embedded right-hand side, best of %d (ms)" % repeat)
    fam = power_law_rates(alpha=1.0, theta=0.0, m=0.0, lam=1.0, gamma=1.0,
                          tau_coeff=0.3, mu_coeff=0.1)
    print(f"{'N':>6} " + " ".join(f"{b:>12}" for b in available_backends()))
    for N in sizes:
        kern = K.kernel_from_measure(K.SelfSimilarMeasure.lebesgue(), N)
        eps = 4.0 / N
        scaling = ScalingConfig(eps=min(eps, 1.0))
        i = np.arange(2, N + 1, dtype=float)
        u0 = np.exp(-0.5 * ((i * eps - 1.5) / 0.35) ** 2) / eps
        row = [f"{N:>6}"]
        for backend in available_backends():
            system = D.DiscreteSystem(fam, kern, 2, N, scaling=scaling, backend=backend)
            y = system.pack(1.0, u0)
            row.append(f"{1e3 * time_fn(lambda: system.rhs(0.0, y), repeat):12.3f}")
        print(" ".join(row))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="200,400,800,1600")
    ap.add_argument("--repeat", type=int, default=30)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    print("available backends:", ", ".join(available_backends()))
    bench_operator(sizes, args.repeat)
    bench_rhs(sizes, args.repeat)


if __name__ == "__main__":
    main()
