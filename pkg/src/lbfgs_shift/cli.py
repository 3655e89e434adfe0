"""Command-line benchmark harness.

    lbfgs-shift [solve] --n 1000,2000 --updates 5 --sigma 0.5 --solvers cg,recursion
    lbfgs-shift trust --n 5000 --delta 0.5
    lbfgs-shift precond --n 5000 --d 1.0

Tables go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import bench
from .augmented import build_augmented
from .errors import LbfgsError
from .lbfgs_core import matrix_from_pairs, read_pairs
from .trust_region import solve_subproblem

SUBCOMMANDS = ("solve", "trust", "precond")


def _int_list(text):
    try:
        values = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _solver_list(text):
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in names if t not in bench.SOLVERS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"solvers must be drawn from {','.join(bench.SOLVERS)}")
    return names


def _cg_tol(text):
    if text == "match":
        return ("match", None)
    if text.startswith("fixed:"):
        try:
            return ("fixed", float(text[len("fixed:"):]))
        except ValueError:
            pass
    raise argparse.ArgumentTypeError("expected 'match' or 'fixed:<tol>'")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=_int_list, default=None,
                        help="comma-separated dimensions (default: 1000,2000,5000,10000,20000)")
    common.add_argument("--large", action="store_true",
                        help="use the large grid up to n = 2e6 when --n is not given")
    common.add_argument("--updates", type=int, default=5, help="number of stored pairs M")
    common.add_argument("--sigma", type=float, default=0.5, help="shift sigma (lambda for precond)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--solvers", type=_solver_list, default=bench.SOLVERS)
    common.add_argument("--cg-tol", type=_cg_tol, default=("match", None),
                        help="'match' (use the recursion residual) or 'fixed:<tol>'")
    common.add_argument("--repeats", type=int, default=5)
    common.add_argument("--format", choices=("csv", "markdown"), default="csv")
    common.add_argument("--pairs-file", default=None, help="read (s, y) pairs from a text file")
    common.add_argument("--dense-limit", type=int, default=bench.DEFAULT_DENSE_LIMIT)

    parser = argparse.ArgumentParser(prog="lbfgs-shift", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("solve", parents=[common], help="direct / CG / recursion benchmark")
    trust = sub.add_parser("trust", parents=[common], help="trust-region subproblem demo")
    trust.add_argument("--delta", type=float, default=None,
                       help="trust-region radius (default: 0.1 * |B^-1 g|)")
    trust.add_argument("--tol", type=float, default=1e-10)
    precond = sub.add_parser("precond", parents=[common], help="augmented preconditioner demo")
    precond.add_argument("--d", type=float, default=1.0, help="scalar block d > 0")
    return parser


def _config(args) -> bench.BenchConfig:
    n_list = args.n or list(bench.LARGE_GRID if args.large else bench.DEFAULT_GRID)
    mode, tol = args.cg_tol
    cfg = bench.BenchConfig(n_list=n_list, updates=args.updates, sigma=args.sigma,
                            seed=args.seed, solvers=args.solvers, cg_tol_mode=mode,
                            repeats=args.repeats, output_format=args.format,
                            pairs_file=args.pairs_file, dense_limit=args.dense_limit)
    if tol is not None:
        cfg.cg_tol = tol
    cfg.validate()
    return cfg


def _instances(args):
    if args.pairs_file:
        n, pairs = read_pairs(args.pairs_file)
        m, rejected = matrix_from_pairs(n, pairs)
        if rejected:
            print(f"warning: {rejected} pair(s) rejected by the curvature test", file=sys.stderr)
        yield m, np.random.default_rng(args.seed).standard_normal(n)
        return
    for n in args.n or (bench.LARGE_GRID if args.large else bench.DEFAULT_GRID):
        yield bench.generate_instance(n, args.updates, args.seed)


def _table(header, rows, fmt):
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(map(str, r)) for r in rows]
    else:
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(map(str, r)) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def run_trust(args) -> str:
    rows = []
    for m, g in _instances(args):
        delta = args.delta
        if delta is None:
            delta = 0.1 * float(np.linalg.norm(m.apply_Binv(g)))
        t0 = time.perf_counter()
        sol = solve_subproblem(m, g, delta, tol=args.tol)
        elapsed = time.perf_counter() - t0
        kkt = np.linalg.norm(m.apply_B(sol.step) + sol.multiplier * sol.step + g)
        rows.append((m.dim, f"{delta:.6e}", f"{sol.multiplier:.6e}",
                     f"{np.linalg.norm(sol.step):.6e}", sol.iterations, sol.on_boundary,
                     f"{kkt / np.linalg.norm(g):.3e}", f"{elapsed:.6e}"))
    header = ("n", "delta", "multiplier", "step_norm", "iterations", "on_boundary",
              "relative_kkt_residual", "wall_time_seconds")
    return _table(header, rows, args.format)


def run_precond(args) -> str:
    rows = []
    for m, y1 in _instances(args):
        rng = np.random.default_rng(args.seed + 1)
        x_vec = rng.standard_normal(m.dim)
        y2 = float(rng.standard_normal())
        t0 = time.perf_counter()
        aug = build_augmented(m, x_vec, args.sigma, args.d)
        x1, x2 = aug.apply_P_inverse(y1, y2)
        elapsed = time.perf_counter() - t0
        # P (x1, x2) evaluated matrix-free
        r1 = m.apply_B(x1) + args.sigma * x1 + (2.0 / args.d) * x_vec * np.dot(x_vec, x1) \
            - x_vec * x2 - y1
        r2 = -np.dot(x_vec, x1) + args.d * x2 - y2
        res = np.hypot(np.linalg.norm(r1), r2) / np.hypot(np.linalg.norm(y1), y2)
        rows.append((m.dim, args.sigma, args.d, f"{res:.3e}", f"{elapsed:.6e}"))
    header = ("n", "lambda", "d", "relative_residual", "wall_time_seconds")
    return _table(header, rows, args.format)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or (argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help")):
        argv.insert(0, "solve")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            cfg = _config(args)
            out = bench.format_rows(bench.run_bench(cfg), cfg.output_format)
        elif args.command == "trust":
            out = run_trust(args)
        else:
            out = run_precond(args)
        sys.stdout.write(out)
        sys.stdout.flush()
    except (LbfgsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
