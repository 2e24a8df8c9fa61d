"""Command line front end.

Usage:
    cltlb-check FILE [flags]            check one problem file
    cltlb-check suite DIR --csv OUT     run a directory of annotated files
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys

from .driver import RunConfig, apply_file_options, check_sat, run_suite
from .parsing import ParseError, parse
from .smtbackend import find_default_solver


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--max-k", type=int, default=None, metavar="N",
                        help="largest bound to try (default 10)")
    parser.add_argument("--theory", default=None,
                        choices=["ipc", "int", "nat", "rat", "real"],
                        help="override the file's theory header")
    parser.add_argument("--solver", default=None, metavar="CMD",
                        help="SMT-LIB 2 solver command reading stdin "
                             "(default: auto-detect)")
    parser.add_argument("--timeout", type=float, default=None, metavar="S",
                        help="per-call solver timeout in seconds (default 300)")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--weak", dest="mode", action="store_const", const="weak",
                      help="restrict existence constraints to compared "
                           "variable classes (default)")
    mode.add_argument("--strong", dest="mode", action="store_const",
                      const="strong", help="existence constraints over all "
                                           "variable pairs")
    parser.add_argument("--consts", default=None,
                        choices=["occurring", "interval"],
                        help="constant set used by valuations (default "
                             "occurring)")
    parser.add_argument("--emit-smt", default=None, metavar="PATH",
                        help="dump each script to PATH.k<N>.smt2 "
                             "(or substitute a literal {k})")
    parser.add_argument("--no-shift", action="store_true",
                        help="encode past-shifted terms directly instead of "
                             "left-shifting")
    parser.add_argument("--no-existence", action="store_true",
                        help="drop the arithmetic-model existence condition "
                             "(unsound over discrete domains; for experiments)")
    parser.set_defaults(mode=None)


def _build_config(args) -> tuple:
    cfg = RunConfig()
    explicit = set()
    if args.max_k is not None:
        cfg.max_k = args.max_k
        explicit.add("max_k")
    if args.theory is not None:
        cfg.theory = args.theory
        explicit.add("theory")
    if args.solver is not None:
        cfg.solver = shlex.split(args.solver)
    if args.timeout is not None:
        cfg.timeout = args.timeout
        explicit.add("timeout")
    if args.mode is not None:
        cfg.valuation_mode = args.mode
        explicit.add("mode")
    if args.consts is not None:
        cfg.consts_mode = args.consts
        explicit.add("consts")
    if getattr(args, "emit_smt", None):
        cfg.emit_smt_path = args.emit_smt
    cfg.apply_shift = not args.no_shift
    cfg.with_existence = not args.no_existence
    return cfg, explicit


def _print_witness(w, out):
    positions = list(w.positions())
    out.write(f"  loop: {w.loop}   positions {positions[0]}..{positions[-1]}\n")
    for x in sorted(w.sigma):
        row = " ".join(str(w.sigma[x][p]) for p in positions)
        out.write(f"  {x}: {row}\n")
    if w.prop_back is not None:
        for i, names in enumerate(w.prop_back):
            out.write(f"  props@{i}: {{{', '.join(sorted(names))}}}\n")
    out.write(f"  verified: {str(w.verified).lower()}\n")


def _run_check(args) -> int:
    cfg, explicit = _build_config(args)
    try:
        text = open(args.file).read()
    except OSError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 2
    try:
        problem = parse(text)
    except ParseError as exc:
        print(f"{args.file}:{exc}", file=sys.stderr)
        return 2
    cfg = apply_file_options(cfg, problem.options, explicit)
    verdict = check_sat(problem, cfg)
    if args.json:
        json.dump(verdict.to_json(), sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        total = sum(r.wall_time for r in verdict.per_k)
        if verdict.kind == "sat":
            print(f"sat at k={verdict.k}  ({total:.2f}s solver time)")
            _print_witness(verdict.witness, sys.stdout)
        elif verdict.kind == "unsat-up-to":
            print(f"unsat up to k={verdict.max_k}  ({total:.2f}s solver time)")
            if verdict.note:
                print(f"  note: {verdict.note}")
        else:
            print(f"unknown: {verdict.note}")
    return verdict.exit_code()


def _run_suite(args) -> int:
    cfg, _ = _build_config(args)
    rows, code = run_suite(args.directory, cfg, args.csv)
    width = max((len(r["file"]) for r in rows), default=4)
    for r in rows:
        sat_k = f" k={r['sat_k']}" if r["sat_k"] != "" else ""
        print(f"{r['file']:<{width}}  {r['verdict']:<12}{sat_k:<6} "
              f"{r['wall_time']}s  {r['status']}")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    top = argparse.ArgumentParser(
        prog="cltlb-check",
        description="Bounded satisfiability checker for linear temporal "
                    "logic with past operators over arithmetic constraints.")
    sub = top.add_subparsers(dest="command")

    check = sub.add_parser("check", help="check one problem file")
    check.add_argument("file")
    _add_common(check)
    check.add_argument("--json", action="store_true",
                       help="machine-readable verdict on stdout")

    suite = sub.add_parser("suite", help="run a directory of .cltl files")
    suite.add_argument("directory")
    suite.add_argument("--csv", default=None, metavar="OUT",
                       help="write per-file results as CSV ('-' for stdout)")
    _add_common(suite)

    solvers = sub.add_parser("solver", help="show the auto-detected solver")
    del solvers

    # bare `cltlb-check FILE` is shorthand for the check subcommand
    if argv and argv[0] not in ("check", "suite", "solver", "-h", "--help"):
        argv.insert(0, "check")
    args = top.parse_args(argv)
    if args.command == "check":
        return _run_check(args)
    if args.command == "suite":
        return _run_suite(args)
    if args.command == "solver":
        command = find_default_solver()
        print(" ".join(command) if command else "none found")
        return 0 if command else 2
    top.print_help()
    return 2


if __name__ == "__main__":
    sys.exit(main())
