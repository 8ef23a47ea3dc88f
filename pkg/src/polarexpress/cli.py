"""Command-line entry point: ``polarexpress {synth,apply,bench,polar}``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .accel import FastApplyConfig, fast_apply, should_use_fast
from .bench import gen_matrix, parse_spectrum, run_convergence, write_csv
from .engine import (
    NORMALIZATIONS,
    PRECISIONS,
    MatrixBuffer,
    NonFiniteError,
    apply_schedule,
    exact_polar,
    normalize,
    read_matrix,
    resolve_polys,
    steps_for,
    write_matrix,
)
from .minimax import RemezConvergenceError
from .schedule import DEFAULT_CUSHION, DEFAULT_SAFETY, build_schedule, dumps

log = logging.getLogger("polarexpress")

EXIT_USAGE = 1
EXIT_NUMERIC = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_synth(args):
    s = build_schedule(args.l, args.T, args.degree, args.cushion, args.safety, args.safety_on_last)
    text = dumps(s)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
        log.info("wrote %d-step schedule to %s (certified error %.3e)", s.T, args.out, 1 - s.intervals[-1].lo)


def _cmd_apply(args):
    M = read_matrix(args.input, args.precision)
    polys = resolve_polys(args.schedule)
    T = args.T if args.T is not None else len(polys)
    if T < 1:
        raise UsageError("--T must be >= 1")
    steps = steps_for(polys, T)
    tall = M.rows >= M.cols
    aspect = max(M.rows, M.cols) / min(M.rows, M.cols)
    fast = args.fast == "on" or (args.fast == "auto" and should_use_fast(aspect, T))
    if fast:
        X = normalize(M, args.eps_add, args.normalize, args.precision)
        cfg = FastApplyConfig(
            restart_interval=args.restart if args.restart else float("inf"),
            first_pass_regularization=args.regularization,
        )
        out = fast_apply(X if tall else X.T, steps, cfg, args.precision)
        out = out if tall else out.T
    else:
        out = apply_schedule(M, steps, T, args.precision, args.normalize, args.eps_add)
    write_matrix(args.out, np.asarray(out, dtype=np.float64))


def _cmd_bench(args):
    spec = parse_spectrum(args.spec, seed=args.seed)
    M = spec if isinstance(spec, MatrixBuffer) else gen_matrix(spec)
    methods = [m for m in args.methods.split(",") if m]
    try:
        reports = run_convergence(
            M, methods, args.T, args.precision, args.gamma, args.normalize,
            parallel=args.parallel, timing=not args.no_timing,
        )
    except KeyError as e:
        raise UsageError(e.args[0]) from None
    write_csv(reports, args.csv)
    for r in reports:
        log.info("%s: final spectral error %.3e", r.method, r.records[-1].spectral_error)


def _cmd_polar(args):
    M = read_matrix(args.input)
    write_matrix(args.out, exact_polar(M))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polarexpress", description="Polar factors via optimal odd polynomial compositions.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="build a coefficient schedule")
    s.add_argument("--l", type=float, required=True, help="lower bound on the normalized spectrum")
    s.add_argument("--T", type=int, required=True, help="number of polynomials")
    s.add_argument("--degree", type=int, choices=(3, 5), default=5)
    s.add_argument("--cushion", type=float, help=f"lower-endpoint floor as a fraction of u (default {DEFAULT_CUSHION} for degree 5, 0 for degree 3)")
    s.add_argument("--safety", type=float, default=DEFAULT_SAFETY)
    s.add_argument("--safety-on-last", action="store_true")
    s.add_argument("--out", help="schedule JSON path (default: stdout)")
    s.set_defaults(func=_cmd_synth)

    a = sub.add_parser("apply", help="apply a schedule to a matrix file")
    a.add_argument("--schedule", required=True, help="schedule file or builtin name (polarexpress, ns3, ns5, jordan)")
    a.add_argument("--in", dest="input", required=True, help="PXM1 or CSV matrix")
    a.add_argument("--out", required=True)
    a.add_argument("--T", type=int)
    a.add_argument("--precision", default="binary64", choices=PRECISIONS + ("bf16", "float32", "float64"))
    a.add_argument("--fast", choices=("auto", "on", "off"), default="off")
    a.add_argument("--restart", type=int, help="restart interval for --fast (default: never)")
    a.add_argument("--regularization", type=float, default=1e-3, help="first-pass Gram shift for --fast")
    a.add_argument("--normalize", choices=NORMALIZATIONS, default="frobenius")
    a.add_argument("--eps-add", type=float, default=1e-2)
    a.set_defaults(func=_cmd_apply)

    b = sub.add_parser("bench", help="convergence comparison to CSV")
    b.add_argument("--spec", required=True, help="log:<min>:<max>:<n>[x<m>] | pow:<exp>:<n>[x<m>] | file:<path>")
    b.add_argument("--methods", required=True, help="comma list, e.g. polarexpress:1e-6,ns5,jordan")
    b.add_argument("--T", type=int, required=True)
    b.add_argument("--csv", required=True)
    b.add_argument("--gamma", type=float, default=1e-3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--precision", default="binary64", choices=PRECISIONS + ("bf16", "float32", "float64"))
    b.add_argument("--normalize", choices=NORMALIZATIONS, default="frobenius")
    b.add_argument("--parallel", action="store_true", help="run methods concurrently")
    b.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    b.set_defaults(func=_cmd_bench)

    o = sub.add_parser("polar", help="exact polar factor via SVD")
    o.add_argument("--in", dest="input", required=True)
    o.add_argument("--out", required=True)
    o.set_defaults(func=_cmd_polar)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (NonFiniteError, RemezConvergenceError, np.linalg.LinAlgError, FloatingPointError) as e:
        print(f"polarexpress: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"polarexpress: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
