"""Spectral error per iteration for several methods on a synthetic spectrum.

Writes the benchmark CSV and prints a compact table every few iterations.
"""

import argparse

from polarexpress.bench import gen_matrix, parse_spectrum, run_convergence, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", default="log:1e-6:1:64")
    ap.add_argument("--methods", default="polarexpress:1e-6,ns3,ns5,jordan")
    ap.add_argument("--T", type=int, default=25)
    ap.add_argument("--normalize", default="spectral")
    ap.add_argument("--precision", default="binary64")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--csv", default="convergence.csv")
    args = ap.parse_args()

    M = gen_matrix(parse_spectrum(args.spec, args.seed))
    reports = run_convergence(M, args.methods.split(","), args.T, args.precision, normalization=args.normalize)
    write_csv(reports, args.csv)

    width = max(len(r.method) for r in reports)
    print(f"{'iter':>{width}} " + " ".join(f"{t:>9d}" for t in range(0, args.T + 1, 5)))
    for r in reports:
        errs = r.spectral()
        print(f"{r.method:>{width}} " + " ".join(f"{errs[t]:9.2e}" for t in range(0, args.T + 1, 5)))
    print(f"\nwrote {args.csv}")


if __name__ == "__main__":
    main()
