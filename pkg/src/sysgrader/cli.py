"""Command line: ``sysgrader evaluate | check-rules | check-trace | snapshot``.

Exit status is 0 on pass, 1 on fail and 2 when the grader itself could not
complete (bad manifest, missing tool, unreadable rule pack).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .pipeline import InternalError, evaluate, load_manifest
from .report import STAGES, render_feedback
from .resources import read_proc_sysvipc
from .rules import RuleError, load_rule_file
from .trace import MalformedEvent, TraceSpecError, check_trace, load_trace_spec, parse_trace

EXIT_PASS, EXIT_FAIL, EXIT_INTERNAL = 0, 1, 2


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    report = evaluate(manifest, args.submission, only_stage=args.stage)
    text = render_feedback(report, args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.stage:
        return EXIT_PASS if report.stage(args.stage).status == "pass" else EXIT_FAIL
    return report.exit_code


def _cmd_check_rules(args) -> int:
    try:
        pack = load_rule_file(args.rules)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except RuleError as exc:
        print(f"{args.rules}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{args.rules}: {len(pack)} rule(s) OK")
    for rule in pack.rules:
        flag = " (require_match)" if rule.require_match else ""
        print(f"  {rule.id}{flag}")
    return EXIT_PASS


def _cmd_check_trace(args) -> int:
    try:
        spec = load_trace_spec(args.spec)
        output = Path(args.trace).read_text(encoding="utf-8", errors="replace")
    except (OSError, TraceSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    try:
        events = parse_trace(output, spec)
    except MalformedEvent as exc:
        print("FAIL")
        print(f"line {exc.line_no}: malformed event: {exc.message}")
        return EXIT_FAIL
    verdict = check_trace(events, spec)
    print(verdict.status.upper(), f"({len(events)} events)")
    for err in verdict.errors:
        where = f"line {err.line_no}: " if err.line_no is not None else ""
        print(f"{where}{err.message}")
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def _cmd_snapshot(args) -> int:
    sys.stdout.write(read_proc_sysvipc(args.proc))
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sysgrader", description="Autograder for C systems-programming exercises.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="run build, execution and static analysis on a submission")
    ev.add_argument("--manifest", required=True, help="assignment manifest (YAML)")
    ev.add_argument("--submission", required=True, help="submission directory")
    ev.add_argument("--format", choices=("text", "json"), default="text")
    ev.add_argument("--stage", choices=STAGES, help="run a single stage only (debugging)")
    ev.add_argument("--output", help="write the report here instead of stdout")
    ev.set_defaults(func=_cmd_evaluate)

    cr = sub.add_parser("check-rules", help="validate a rule pack")
    cr.add_argument("--rules", required=True)
    cr.set_defaults(func=_cmd_check_rules)

    ct = sub.add_parser("check-trace", help="check a captured program output offline")
    ct.add_argument("--spec", required=True, help="trace spec (YAML)")
    ct.add_argument("--trace", required=True, help="captured standard output")
    ct.set_defaults(func=_cmd_check_trace)

    sn = sub.add_parser("snapshot", help="print the host's System V IPC resources in snapshot format")
    sn.add_argument("--proc", default="/proc/sysvipc", help=argparse.SUPPRESS)
    sn.set_defaults(func=_cmd_snapshot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
