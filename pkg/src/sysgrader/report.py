"""Evaluation reports and their text/JSON renderings."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .cfront import Span

STAGES = ("build", "execution", "static")
SCHEMA = "sysgrader.report/1"


@dataclass(frozen=True)
class Feedback:
    """One feedback item; ``line_no`` refers to a line of program output."""

    message: str
    code: str | None = None
    file: str | None = None
    span: Span | None = None
    line_no: int | None = None

    @property
    def location(self) -> str | None:
        if self.span is not None:
            return f"{self.span.file}:{self.span.start_line}"
        if self.file is not None:
            return self.file if self.line_no is None else f"{self.file}:{self.line_no}"
        if self.line_no is not None:
            return f"stdout:{self.line_no}"
        return None

    def to_dict(self) -> dict:
        return {
            "message": self.message,
            "code": self.code,
            "file": self.file,
            "span": None if self.span is None else self.span.to_dict(),
            "line_no": self.line_no,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Feedback":
        span = data.get("span")
        return cls(
            data["message"],
            data.get("code"),
            data.get("file"),
            None if span is None else Span.from_dict(span),
            data.get("line_no"),
        )


@dataclass
class StageResult:
    stage: str
    status: str  # pass | fail | skipped
    findings: list[Feedback] = field(default_factory=list)
    duration_ms: int = 0

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.status not in ("pass", "fail", "skipped"):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "fail" and not self.findings:
            raise ValueError("a failed stage needs at least one finding")

    @classmethod
    def skipped(cls, stage: str) -> "StageResult":
        return cls(stage, "skipped")

    @classmethod
    def from_findings(cls, stage: str, findings: list[Feedback], duration_ms: int) -> "StageResult":
        return cls(stage, "fail" if findings else "pass", list(findings), duration_ms)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "status": self.status,
            "duration_ms": self.duration_ms,
            "findings": [f.to_dict() for f in self.findings],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StageResult":
        return cls(
            data["stage"],
            data["status"],
            [Feedback.from_dict(f) for f in data.get("findings", [])],
            data.get("duration_ms", 0),
        )


@dataclass
class EvaluationReport:
    submission_id: str
    timestamp: str
    stages: list[StageResult]

    @property
    def verdict(self) -> str:
        return "pass" if all(s.status == "pass" for s in self.stages) else "fail"

    @property
    def status_sequence(self) -> str:
        return "".join(s.status[0].upper() for s in self.stages)

    def stage(self, name: str) -> StageResult:
        for s in self.stages:
            if s.stage == name:
                return s
        raise KeyError(name)

    @property
    def exit_code(self) -> int:
        return 0 if self.verdict == "pass" else 1

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "submission_id": self.submission_id,
            "timestamp": self.timestamp,
            "verdict": self.verdict,
            "stages": [s.to_dict() for s in self.stages],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvaluationReport":
        if data.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        report = cls(data["submission_id"], data["timestamp"], [StageResult.from_dict(s) for s in data["stages"]])
        if data.get("verdict") not in (None, report.verdict):
            raise ValueError("verdict does not agree with stage results")
        return report


def render_text(report: EvaluationReport) -> str:
    lines = []
    if report.verdict == "pass":
        lines.append("PASS")
        for s in report.stages:
            lines.append(f"  {s.stage}: pass ({s.duration_ms} ms)")
        return "\n".join(lines) + "\n"
    lines.append("FAIL")
    lines.append("  " + "  ".join(f"{s.stage}={s.status}" for s in report.stages))
    for s in report.stages:
        if s.status != "fail":
            continue
        lines.append("")
        lines.append(f"[{s.stage}] {len(s.findings)} problem(s) ({s.duration_ms} ms)")
        for f in s.findings:
            loc = f.location
            lines.append(f"{s.stage} {loc} {f.message}" if loc else f"{s.stage} {f.message}")
    return "\n".join(lines) + "\n"


def render_json(report: EvaluationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n"


def render_feedback(report: EvaluationReport, format: str = "text") -> str:
    if format == "text":
        return render_text(report)
    if format == "json":
        return render_json(report)
    raise ValueError(f"unknown format {format!r}")


def parse_report(text: str) -> EvaluationReport:
    """Inverse of the JSON rendering."""
    return EvaluationReport.from_dict(json.loads(text))
