"""Benchmark the boosting kernel backends (compiled vs pure numpy).

Times full model fits at the dataset sizes the labeling loop actually sees:
small early-loop fits, mid-loop, and full-cohort. Run:

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""
import argparse
import time

import numpy as np

import xlabel.kernels as kernels
from xlabel.ebm import TrainConfig, fit


def make_data(n, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        rng.integers(0, 2, n).astype(float),
        rng.integers(0, 2, n).astype(float),
        rng.integers(0, 2, n).astype(float),
        rng.normal(100.0, 20.0, n),
        rng.normal(6.0, 1.5, n),
        rng.normal(90.0, 15.0, n),
    ])
    X[rng.random(X.shape) < 0.15] = np.nan
    score = 2.5 * np.nan_to_num(X[:, 0]) + 0.02 * np.nan_to_num(X[:, 3], nan=100.0) - 2.5
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-score))).astype(np.int64)
    if y.min() == y.max():  # ensure two classes at tiny n
        y[0] = 1 - y[0]
    return X, y


def time_fit(backend, X, y, config, repeats):
    kernels.select(backend)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fit(X, y, config)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5,
                        help="Take the best of this many runs per cell.")
    args = parser.parse_args()

    backends = kernels.available_backends()
    if len(backends) < 2:
        print(f"only {backends} built; compile the extension to compare "
              "(pip install -e . --no-build-isolation)")
    config = TrainConfig(seed=0)
    sizes = (42, 200, 838, 5000)
    previous = kernels.active_backend()

    print(f"fit wall time, best of {args.repeats} "
          f"(config: {config.n_rounds} rounds, lr {config.learning_rate}, "
          f"patience {config.early_stop_patience})\n")
    header = f"{'n':>6} | " + " | ".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += " | speedup"
    print(header)
    print("-" * len(header))
    try:
        for n in sizes:
            X, y = make_data(n, seed=n)
            times = {b: time_fit(b, X, y, config, args.repeats) for b in backends}
            row = f"{n:>6} | " + " | ".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
            if len(backends) == 2:
                slow, fast = sorted(times.values(), reverse=True)
                row += f" | {slow / fast:>6.1f}x"
            print(row)
    finally:
        kernels.select(previous)

    if len(backends) == 2:
        # agreement check: identical data and config through both kernels
        X, y = make_data(400, seed=3)
        check = TrainConfig(early_stop_patience=0, n_rounds=200, seed=1)
        results = {}
        for b in backends:
            kernels.select(b)
            results[b] = fit(X, y, check).raw_score_many(X)
        kernels.select(previous)
        a, b = results.values()
        print(f"\nmax |raw score difference| across backends: {np.abs(a - b).max():.3e}")


if __name__ == "__main__":
    main()
