"""Print a schedule's coefficients, interval trace and certified error."""

import argparse

from polarexpress.schedule import DEFAULT_SAFETY, build_schedule, certified_error


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=float, default=1e-3)
    ap.add_argument("--T", type=int, default=8)
    ap.add_argument("--degree", type=int, default=5, choices=(3, 5))
    ap.add_argument("--safety", type=float, default=DEFAULT_SAFETY)
    args = ap.parse_args()

    s = build_schedule(args.l, args.T, args.degree, safety=args.safety)
    print(f"{'t':>2}  {'l_t':>12} {'u_t':>12}   pre-safety coefficients")
    for t, (p, iv) in enumerate(zip(s.pre_safety_polys, s.intervals), start=1):
        print(f"{t:>2}  {iv.lo:12.6e} {iv.hi:12.6e}   " + ", ".join(f"{c:.17g}" for c in p.coeffs))
    print(f"\nruntime list (safety {args.safety} on all but the last):")
    for p in s.polys:
        print("    (" + ", ".join(f"{c:.17g}" for c in p.coeffs) + "),")
    print(f"\ncertified error 1 - l_{{T+1}} = {certified_error(s):.3e}")


if __name__ == "__main__":
    main()
