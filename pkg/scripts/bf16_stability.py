"""Median spectral error of the runtime schedule in emulated bfloat16.

Compares three ways of drawing spectra in [1e-3, 1] and reports the error
floor that rounding the input alone already causes.
"""

import argparse

import numpy as np

from polarexpress.bench import random_orthogonal
from polarexpress.engine import apply_schedule, exact_polar, round_bf16

DRAWS = {
    "uniform": lambda r, n: r.uniform(1e-3, 1.0, n),
    "uniform+ends": lambda r, n: np.concatenate([[1.0, 1e-3], r.uniform(1e-3, 1.0, n - 2)]),
    "log-uniform": lambda r, n: 10 ** r.uniform(-3, 0, n),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--T", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'spectrum':>13} {'median':>8} {'max':>8} {'floor':>8} {'non-finite':>10}")
    for name, draw in DRAWS.items():
        rng = np.random.default_rng(args.seed)
        errs, floors, bad = [], [], 0
        for _ in range(args.count):
            U = random_orthogonal(rng, args.n, args.n)
            V = random_orthogonal(rng, args.n, args.n)
            M = (U * draw(rng, args.n)) @ V.T
            P = exact_polar(M)
            X = apply_schedule(M, "polarexpress", args.T, precision="bf16", normalization="listing2")
            if not np.all(np.isfinite(X)):
                bad += 1
                continue
            errs.append(np.linalg.norm(X - P, 2))
            floors.append(np.linalg.norm(exact_polar(round_bf16(M).astype(np.float64)) - P, 2))
        print(f"{name:>13} {np.median(errs):8.4f} {np.max(errs):8.4f} {np.median(floors):8.4f} {bad:>10}")


if __name__ == "__main__":
    main()
