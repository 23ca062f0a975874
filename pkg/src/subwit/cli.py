"""Command-line driver: `subwit check|run|test`.

Exit codes: 0 success, 1 semantic failure (diagnostic, failed test or
uncaught exception), 2 usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import Diagnostic, ParseError
from .evaluator import Returned, eval_program
from .prelude import MANIFEST, check_source, render_run, verify_corpus

OK, FAILED, BROKEN = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trace-subtype", action="store_true", help="print every subtyping derivation to stderr")
    common.add_argument("--count-steps", action="store_true", help="print evaluation step counts to stderr")
    common.add_argument("--json-diagnostics", action="store_true", help="print diagnostics as a JSON array")
    common.add_argument("--no-prelude", action="store_true", help="do not load the prelude first")

    parser = argparse.ArgumentParser(prog="subwit", description="Check and run programs with first-class subtypes.")
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", parents=[common], help="type check programs")
    check.add_argument("paths", nargs="+", type=Path)
    run = sub.add_parser("run", parents=[common], help="check and evaluate a program")
    run.add_argument("path", type=Path)
    test = sub.add_parser("test", parents=[common], help="verify a corpus manifest")
    test.add_argument("manifest", nargs="?", type=Path, default=MANIFEST)
    return parser


class _Reporter:
    """Collects diagnostics; renders them immediately or as one JSON array."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.items: list[dict] = []

    def report(self, err: Diagnostic) -> None:
        if self.as_json:
            self.items.append(err.to_json())
        else:
            print(err.render(), file=sys.stderr)

    def io_error(self, path, exc: OSError) -> None:
        message = f"Cannot read {path}: {exc.strerror or exc}"
        if self.as_json:
            self.items.append({"file": str(path), "line": None, "col": None, "code": "io-error", "message": message})
        else:
            print(f"Error: {message}", file=sys.stderr)

    def flush(self) -> None:
        if self.as_json:
            print(json.dumps(self.items, indent=2))


def _load(path: Path, args, reporter: _Reporter, trace):
    """Read, parse and check one file; returns (status, loaded)."""
    try:
        source = path.read_text(encoding="utf-8")
    except OSError as exc:
        reporter.io_error(path, exc)
        return BROKEN, None
    try:
        loaded, err = check_source(source, str(path), not args.no_prelude, trace)
    except ParseError as exc:
        reporter.report(exc)
        return BROKEN, None
    if err is not None:
        reporter.report(err)
        return FAILED, None
    return OK, loaded


def _print_trace(trace) -> None:
    for d in trace:
        print(d.render(), file=sys.stderr)


def cmd_check(args) -> int:
    reporter = _Reporter(args.json_diagnostics)
    status = OK
    for path in args.paths:
        trace = [] if args.trace_subtype else None
        code, _ = _load(path, args, reporter, trace)
        if trace:
            _print_trace(trace)
        if code == OK and not args.json_diagnostics:
            print(f"{path}: OK")
        status = max(status, code)
    reporter.flush()
    return status


def cmd_run(args) -> int:
    reporter = _Reporter(args.json_diagnostics)
    trace = [] if args.trace_subtype else None
    status, loaded = _load(args.path, args, reporter, trace)
    if trace:
        _print_trace(trace)
    reporter.flush()
    if status != OK:
        return status
    result = eval_program(loaded.full)
    sys.stdout.write(render_run(result))
    sys.stdout.flush()
    if args.count_steps:
        machine = result.machine
        for phase, n in machine.steps.items():
            print(f"phase {phase}: {n}", file=sys.stderr)
        print(machine.total_steps, file=sys.stderr)
    return OK if isinstance(result.outcome, Returned) else FAILED


def cmd_test(args) -> int:
    try:
        results = verify_corpus(args.manifest)
    except (OSError, ValueError, KeyError) as exc:
        print(f"Error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
        return BROKEN
    passed = 0
    for r in results:
        if r.ok:
            passed += 1
            print(f"PASS {r.entry.path}")
        else:
            print(f"FAIL {r.entry.path} (expected {r.entry.expects}, got {r.actual})")
            for line in r.detail.splitlines():
                print(f"    {line}")
    print(f"{passed}/{len(results)}")
    return OK if passed == len(results) else FAILED


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handler = {"check": cmd_check, "run": cmd_run, "test": cmd_test}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
