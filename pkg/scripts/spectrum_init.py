"""Iterations to a target error with and without the spectrum-aware init step.

Uses a 32x32 matrix with sigma_j = j^-p scaled to unit Frobenius norm. The
init step counts as one iteration.
"""

import argparse
import math

import numpy as np

from polarexpress.accel import init_then_schedule, power_lower_bound, spectrum_aware_init
from polarexpress.bench import SpectrumSpec, gen_matrix
from polarexpress.engine import exact_polar, iterate
from polarexpress.schedule import build_schedule


def iters_to(M, P, s, target, T_max=80):
    for t, X in enumerate(iterate(M, s, T_max, normalization="none")):
        if np.linalg.norm(X - P, 2) <= target:
            return t
    return math.inf


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--exponent", type=float, default=5.0)
    ap.add_argument("--targets", default="1e-1,1e-2,1e-4,1e-8")
    args = ap.parse_args()

    M = gen_matrix(SpectrumSpec("pow", args.n, exponent=args.exponent))
    M /= np.linalg.norm(M)
    P = exact_polar(M)
    z = power_lower_bound(M).z
    smin = float(np.linalg.svd(M, compute_uv=False).min())
    _, X1 = spectrum_aware_init(M, z)
    print(f"z = {z:.8f}, sigma_min = {smin:.3e}, lifted bound = {smin / math.sqrt(1 - z * z):.3e}")
    print(f"{'target':>8} {'method':>24} {'plain':>6} {'init':>6}")
    tuned = build_schedule(smin, 80, safety=1.0)
    for target in map(float, args.targets.split(",")):
        for name in ("ns5", "polarexpress"):
            print(f"{target:8.0e} {name:>24} {iters_to(M, P, name, target):>6} {1 + iters_to(X1, P, name, target):>6}")
        k = next(
            (k for k in range(1, 60) if np.linalg.norm(init_then_schedule(M, smin, k, z=z, safety=1.0)[0] - P, 2) <= target),
            math.inf,
        )
        print(f"{target:8.0e} {'polarexpress(sigma_min)':>24} {iters_to(M, P, tuned, target):>6} {k + 1:>6}")


if __name__ == "__main__":
    main()
