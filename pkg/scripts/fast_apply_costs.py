"""Measured multiply-adds of the fast rectangular iteration against the naive path."""

import argparse

import numpy as np

from polarexpress.accel import FastApplyConfig, fast_apply, fast_cost, naive_apply, naive_cost, should_use_fast
from polarexpress.engine import Arith, normalize
from polarexpress.schedule import build_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--T", type=int, default=6)
    args = ap.parse_args()

    polys = build_schedule(1e-3, args.T).polys
    rng = np.random.default_rng(0)
    print(f"{'aspect':>6} {'fast':>12} {'naive':>12} {'ratio':>6} {'formula':>7} {'use fast':>8} {'max diff':>9}")
    for a in (1, 2, 4, 8, 16, 32):
        X = normalize(rng.standard_normal((a * args.n, args.n)))
        fa, na = Arith(), Arith()
        F = fast_apply(X, polys, FastApplyConfig(first_pass_regularization=0.0), arith=fa)
        N = naive_apply(X, polys, arith=na)
        pred = naive_cost(args.n, a, 5, args.T) / fast_cost(args.n, a, 5, args.T)
        print(
            f"{a:>6} {fa.madds:>12,} {na.madds:>12,} {na.madds / fa.madds:6.2f} {pred:7.2f} "
            f"{str(should_use_fast(a, args.T)):>8} {np.linalg.norm(F - N, 2):9.1e}"
        )


if __name__ == "__main__":
    main()
