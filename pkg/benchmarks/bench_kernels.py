"""Compare the numba kernels against the pure-numpy fallbacks.

Run twice, once per backend:

    python3 benchmarks/bench_kernels.py
    PROTOSELECT_NUMBA=0 python3 benchmarks/bench_kernels.py

or pass --both to fork a subprocess for the other backend.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np


def bench_cd_lasso(reps: int = 20) -> float:
    from protoselect.dataset import generate_block_design, generate_response, BlockDesignSpec
    from protoselect.lasso import fit_lasso, lambda_max

    spec = BlockDesignSpec(n=200, block_sizes=tuple([10] * 20), rho=0.5, seed=0)
    X = generate_block_design(spec)
    beta = np.zeros(200)
    beta[::20] = 2.0
    y = generate_response(X, beta, 1.0, seed=0)
    lam = 0.2 * lambda_max(X, y)
    fit_lasso(X, y, lam)  # warm-up (jit compilation)
    t0 = time.perf_counter()
    for _ in range(reps):
        fit_lasso(X, y, lam)
    return (time.perf_counter() - t0) / reps


def bench_linkage(reps: int = 20) -> float:
    from protoselect.cluster import correlation_dissimilarity, hclust
    from protoselect.dataset import generate_block_design, BlockDesignSpec

    spec = BlockDesignSpec(n=100, block_sizes=tuple([20] * 10), rho=0.5, seed=1)
    D = correlation_dissimilarity(generate_block_design(spec))
    hclust(D)  # warm-up
    t0 = time.perf_counter()
    for _ in range(reps):
        hclust(D)
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--reps", type=int, default=20)
    parser.add_argument("--both", action="store_true",
                        help="also run the other backend in a subprocess")
    args = parser.parse_args()

    from protoselect import BACKEND

    t_cd = bench_cd_lasso(args.reps)
    t_link = bench_linkage(args.reps)
    print(f"backend={BACKEND:6s}  cd_lasso {t_cd * 1e3:8.2f} ms  "
          f"linkage {t_link * 1e3:8.2f} ms  (mean of {args.reps})")

    if args.both:
        env = dict(os.environ)
        env["PROTOSELECT_NUMBA"] = "0" if BACKEND == "numba" else "1"
        subprocess.run(
            [sys.executable, __file__, "--reps", str(args.reps)],
            env=env,
            check=True,
        )


if __name__ == "__main__":
    main()
