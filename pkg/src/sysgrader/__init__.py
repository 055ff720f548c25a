"""Autograding engine for C systems-programming exercises.

Three stages: build, execution (crash/stall detection, IPC leak diffing,
output-trace checks) and static analysis with assignment-specific
structural rules.
"""
from pathlib import Path

from .cfront import Kind, Node, ParseError, Span, find_functions, parse, parse_source, tokenize
from .matcher import Finding, Match, evaluate_rule, match_pattern, run_rules
from .pipeline import AssignmentManifest, InternalError, evaluate, load_manifest, run_build, run_execution, run_static
from .report import EvaluationReport, Feedback, StageResult, parse_report, render_feedback
from .resources import ResourceId, Snapshot, SnapshotFormatError, diff_snapshots, parse_snapshot
from .rules import PatternSyntaxError, Rule, RulePack, SchemaError, load_rule_file, load_rule_pack, parse_pattern
from .trace import (
    MalformedEvent,
    TraceEvent,
    TraceSpec,
    TraceVerdict,
    check_order,
    check_progress,
    check_trace,
    check_values,
    evaluate_prod_cons,
    parse_trace,
)

__version__ = "0.1.0"

ASSIGNMENTS_DIR = Path(__file__).parent / "assignments"


def assignment_path(name: str) -> Path:
    """Directory of a shipped assignment (manifest, rule packs, trace spec)."""
    path = ASSIGNMENTS_DIR / name
    if not path.is_dir():
        raise FileNotFoundError(f"no shipped assignment named {name!r}")
    return path
