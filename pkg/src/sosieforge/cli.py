"""Command line entry point: ``sosieforge <command> ...``."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from pathlib import Path
from typing import List, Optional

from . import corpus_dir, corpus_names
from .campaign import CampaignConfig, CampaignResult, NoViableTrials, run_campaign, write_sosies
from .interpreter import DEFAULT_STEP_LIMIT, run_suite
from .parser import ParseError
from .program import Program, load_program
from .report import HashMismatch, SchemaError, build_report, export_csv, write_report
from .sesig import OriginalSuiteFails, SignatureStore, collect_signatures
from .transform import OPS
from .typecheck import TypeCheckError, typecheck

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_SUITE = 0, 1, 2, 3

log = logging.getLogger("sosieforge")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(path: str) -> Program:
    program = load_program(path)
    typecheck(program)
    return program


def cmd_check(args) -> int:
    program = _load(args.dir)
    n_stmts = len(program.program_statement_ids)
    print(f"ok: {len(program.units)} units, {len(program.functions)} functions, "
          f"{n_stmts} program statements, {len(program.tests)} tests")
    return EXIT_OK


def cmd_test(args) -> int:
    program = _load(args.dir)
    results = run_suite(program, step_limit=args.step_limit)
    for r in results:
        line = f"{r.status.upper():7} {r.name}"
        if r.detail:
            line += f"  ({r.detail})"
        print(line)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed} passed, {failed} failed")
    return EXIT_SUITE if failed else EXIT_OK


def cmd_sesig(args) -> int:
    program = _load(args.dir)
    store = collect_signatures(program, step_limit=args.step_limit)
    store.save(args.out)
    covered = len(store.covered())
    print(f"wrote {args.out}: {len(store)} statements, {covered} covered by {store.total_tests} tests")
    return EXIT_OK


def _ops(text: str) -> tuple:
    ops = tuple(o.strip() for o in text.split(",") if o.strip())
    bad = [o for o in ops if o not in OPS]
    if bad or not ops:
        raise UsageError(f"--ops must be a comma-separated subset of {','.join(OPS)}")
    return ops


def cmd_sosiefy(args) -> int:
    ops = _ops(args.ops)
    if args.budget < 1 or args.workers < 1:
        raise UsageError("--budget and --workers must be positive")
    program = _load(args.dir)
    store = SignatureStore.load(args.signatures)
    if store.program_hash and store.program_hash != program.content_hash:
        raise HashMismatch(f"{args.signatures} was collected on a different version of {args.dir}")
    targets = tuple(args.target) if args.target else None
    config = CampaignConfig(budget=args.budget, seed=args.seed, ops=ops, step_limit=args.step_limit,
                            workers=args.workers, targets=targets, full_validation=args.full_validation)
    result = run_campaign(program, store, config)
    result.save(args.out)
    print(f"wrote {args.out}: {len(result.trials)} trials, {result.sosie_count} sosies, "
          f"exploration rate {result.exploration_rate:.3f}")
    if args.sosie_dir:
        files = write_sosies(program, result, args.sosie_dir)
        print(f"wrote {len(files)} sosie files to {args.sosie_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = build_report(args.signatures, args.campaign, args.labels, args.tc_threshold)
    if args.out:
        write_report(report, args.out)
    if args.csv:
        export_csv(report, args.csv)
    pt = report.proportion_test
    print(f"trials {report.total_trials}, sosies {report.sosie_count}, "
          f"SR {report.sosie_count / report.total_trials if report.total_trials else 0:.4f}")
    if report.trend.slope is not None:
        print(f"trend slope {report.trend.slope:.6f} over {report.trend.bins_used} confident bins")
    if pt.statistic is None:
        print(f"proportion test: {pt.status}")
    else:
        print(f"proportion test (tc <= {report.tc_threshold} vs > {report.tc_threshold}): "
              f"X2 = {pt.statistic:.4f}, p = {pt.p_value:.4g}")
    return EXIT_OK


def cmd_corpus(args) -> int:
    if args.name is None:
        for name in corpus_names():
            print(name)
        return EXIT_OK
    if args.name not in corpus_names():
        raise UsageError(f"unknown corpus program {args.name!r}; choose from {', '.join(corpus_names())}")
    src = corpus_dir(args.name)
    if args.out is None:
        print(src)
        return EXIT_OK
    shutil.copytree(src, args.out, dirs_exist_ok=True)
    print(f"copied {args.name} to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sosieforge", description="Test-suite-driven program diversification for MiniLang.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="parse and type-check a program directory")
    c.add_argument("dir")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("test", help="run the test suite")
    c.add_argument("dir")
    c.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)
    c.set_defaults(func=cmd_test)

    c = sub.add_parser("sesig", help="collect execution signatures")
    c.add_argument("dir")
    c.add_argument("--out", required=True)
    c.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)
    c.set_defaults(func=cmd_sesig)

    c = sub.add_parser("sosiefy", help="run a sosiefication campaign")
    c.add_argument("dir")
    c.add_argument("--signatures", required=True)
    c.add_argument("--budget", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--ops", default=",".join(OPS))
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)
    c.add_argument("--target", action="append", help="restrict points to a function or statement id")
    c.add_argument("--full-validation", action="store_true",
                   help="also run tests that never reach the transplantation point")
    c.add_argument("--out", required=True)
    c.add_argument("--sosie-dir")
    c.set_defaults(func=cmd_sosiefy)

    c = sub.add_parser("report", help="build analysis tables from signatures and a campaign")
    c.add_argument("--signatures", required=True)
    c.add_argument("--campaign", required=True)
    c.add_argument("--labels")
    c.add_argument("--tc-threshold", type=int, default=25)
    c.add_argument("--out")
    c.add_argument("--csv")
    c.set_defaults(func=cmd_report)

    c = sub.add_parser("corpus", help="list or copy the bundled example programs")
    c.add_argument("name", nargs="?")
    c.add_argument("--out")
    c.set_defaults(func=cmd_corpus)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sosieforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OriginalSuiteFails as exc:
        print(f"sosieforge: {exc}", file=sys.stderr)
        return EXIT_SUITE
    except (ParseError, TypeCheckError, HashMismatch, SchemaError, NoViableTrials, OSError, ValueError) as exc:
        print(f"sosieforge: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
