"""The three-stage evaluation: build, execution, static analysis.

Stages run in order on a private copy of the submission and the first
failing stage stops the pipeline; later stages are reported as skipped.
Problems with the assignment setup itself (missing tools, broken rule packs,
unreadable manifests) raise :class:`InternalError` instead of failing the
student.
"""
from __future__ import annotations

import datetime as _dt
import logging
import os
import re
import shlex
import shutil
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .cfront import CSyntaxError, Node, Span, parse, tokenize
from .matcher import run_rules
from .report import STAGES, EvaluationReport, Feedback, StageResult
from .resources import SnapshotFormatError, diff_snapshots, parse_snapshot
from .rules import RuleError, RulePack, load_rule_file
from .trace import MalformedEvent, TraceSpec, TraceSpecError, check_trace, load_trace_spec, parse_trace

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_SECS = 10
BUILD_TIMEOUT_SECS = 300
TIMEOUT_ENV = "SYSGRADER_TIMEOUT_SECS"
SOURCE_SUFFIXES = (".c", ".h")


class InternalError(Exception):
    """The grader could not do its job; not the student's fault."""


def _command(value, key: str) -> list[str]:
    if isinstance(value, str):
        argv = shlex.split(value)
    elif isinstance(value, list) and all(isinstance(v, str) for v in value):
        argv = list(value)
    else:
        raise InternalError(f"manifest field {key!r} must be a command string or list of strings")
    if not argv:
        raise InternalError(f"manifest field {key!r} is empty")
    return argv


@dataclass
class AssignmentManifest:
    build_cmd: list[str]
    run_cmd: list[str]
    timeout_secs: int = DEFAULT_TIMEOUT_SECS
    rule_pack: Path | None = None
    trace_spec: Path | None = None
    snapshot_cmd: list[str] | None = None
    workdir: str = "."
    _rules: RulePack | None = field(default=None, repr=False, compare=False)
    _trace: TraceSpec | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.timeout_secs, int) or self.timeout_secs < 1:
            raise InternalError(f"timeout_secs must be an integer >= 1, got {self.timeout_secs!r}")

    def rules(self) -> RulePack | None:
        if self.rule_pack is None:
            return None
        if self._rules is None:
            try:
                self._rules = load_rule_file(self.rule_pack)
            except OSError as exc:
                raise InternalError(f"cannot read rule pack: {exc}") from None
            except RuleError as exc:
                raise InternalError(f"invalid rule pack {self.rule_pack}: {exc}") from None
        return self._rules

    def trace(self) -> TraceSpec | None:
        if self.trace_spec is None:
            return None
        if self._trace is None:
            try:
                self._trace = load_trace_spec(self.trace_spec)
            except OSError as exc:
                raise InternalError(f"cannot read trace spec: {exc}") from None
            except TraceSpecError as exc:
                raise InternalError(f"invalid trace spec {self.trace_spec}: {exc}") from None
        return self._trace


_MANIFEST_KEYS = {"build_cmd", "run_cmd", "timeout_secs", "rule_pack", "trace_spec", "snapshot_cmd", "workdir"}


def manifest_from_dict(doc: dict, base_dir: Path = Path("."), env=None) -> AssignmentManifest:
    env = os.environ if env is None else env
    if not isinstance(doc, dict):
        raise InternalError("manifest must be a mapping")
    unknown = set(doc) - _MANIFEST_KEYS
    if unknown:
        raise InternalError(f"unknown manifest keys: {sorted(unknown)}")
    for key in ("build_cmd", "run_cmd"):
        if key not in doc:
            raise InternalError(f"manifest lacks {key!r}")
    timeout = doc.get("timeout_secs", DEFAULT_TIMEOUT_SECS)
    if env.get(TIMEOUT_ENV):
        try:
            timeout = int(env[TIMEOUT_ENV])
        except ValueError:
            raise InternalError(f"{TIMEOUT_ENV} must be an integer") from None

    def path(key):
        value = doc.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else (base_dir / p)

    return AssignmentManifest(
        build_cmd=_command(doc["build_cmd"], "build_cmd"),
        run_cmd=_command(doc["run_cmd"], "run_cmd"),
        timeout_secs=timeout,
        rule_pack=path("rule_pack"),
        trace_spec=path("trace_spec"),
        snapshot_cmd=None if doc.get("snapshot_cmd") is None else _command(doc["snapshot_cmd"], "snapshot_cmd"),
        workdir=str(doc.get("workdir", ".")),
    )


def load_manifest(path: str | Path, env=None) -> AssignmentManifest:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InternalError(f"cannot read manifest: {exc}") from None
    except yaml.YAMLError as exc:
        raise InternalError(f"invalid manifest YAML: {exc}") from None
    return manifest_from_dict(doc, path.parent, env)


def _ms(start: float) -> int:
    return int((time.monotonic() - start) * 1000)


# -- build -------------------------------------------------------------------

_DIAG_RE = re.compile(
    r"^(?P<file>[^\s:][^:\n]*):(?P<line>\d+):(?:(?P<col>\d+):)?\s*(?P<sev>fatal error|error)\s*:\s*(?P<msg>.*)$",
    re.M,
)


def _diagnostics(output: str, workdir: Path) -> list[Feedback]:
    items = []
    for m in _DIAG_RE.finditer(output):
        file = m.group("file")
        try:
            file = str(Path(file).resolve().relative_to(workdir.resolve())) if Path(file).is_absolute() else file
        except ValueError:
            pass
        line = int(m.group("line"))
        col = int(m.group("col") or 1)
        items.append(
            Feedback(
                f"{m.group('sev')}: {m.group('msg').strip()}",
                "build-error",
                file,
                Span(file, line, col, line, col),
            )
        )
    return items


def _spawn_error(argv: list[str], exc: OSError) -> InternalError:
    return InternalError(f"cannot run {shlex.join(argv)!r}: {exc.strerror or exc}")


def run_build(manifest: AssignmentManifest, workdir: Path) -> StageResult:
    start = time.monotonic()
    try:
        proc = subprocess.run(
            manifest.build_cmd,
            cwd=workdir,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            timeout=BUILD_TIMEOUT_SECS,
        )
    except OSError as exc:
        raise _spawn_error(manifest.build_cmd, exc) from None
    except subprocess.TimeoutExpired:
        return StageResult.from_findings(
            "build", [Feedback(f"Build did not finish within {BUILD_TIMEOUT_SECS} s", "build-timeout")], _ms(start)
        )
    if proc.returncode == 0:
        return StageResult.from_findings("build", [], _ms(start))
    output = proc.stdout.decode("utf-8", errors="replace")
    findings = _diagnostics(output, workdir)
    if not findings:
        tail = "\n".join(output.strip().splitlines()[-10:])
        findings = [Feedback(f"Build failed with exit status {proc.returncode}: {tail}".strip(), "build-error")]
    return StageResult.from_findings("build", findings, _ms(start))


# -- execution ---------------------------------------------------------------


def take_snapshot(manifest: AssignmentManifest, workdir: Path, label: str):
    try:
        proc = subprocess.run(
            manifest.snapshot_cmd, cwd=workdir, stdin=subprocess.DEVNULL, capture_output=True, timeout=60
        )
    except OSError as exc:
        raise _spawn_error(manifest.snapshot_cmd, exc) from None
    except subprocess.TimeoutExpired:
        raise InternalError("snapshot command timed out") from None
    if proc.returncode != 0:
        raise InternalError(
            f"snapshot command failed ({proc.returncode}): {proc.stderr.decode(errors='replace').strip()}"
        )
    try:
        return parse_snapshot(proc.stdout.decode("utf-8", errors="replace"), label)
    except SnapshotFormatError as exc:
        raise InternalError(f"unreadable snapshot: {exc}") from None


def _kill_group(pid: int) -> None:
    try:
        os.killpg(pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass


def _describe_exit(code: int) -> str:
    if code < 0:
        try:
            name = signal.Signals(-code).name
        except ValueError:
            name = f"signal {-code}"
        return f"Program crashed: terminated by {name}"
    return f"Program terminated abnormally with exit status {code}"


def run_execution(manifest: AssignmentManifest, workdir: Path) -> StageResult:
    start = time.monotonic()
    findings: list[Feedback] = []
    before = take_snapshot(manifest, workdir, "before") if manifest.snapshot_cmd else None
    try:
        proc = subprocess.Popen(
            manifest.run_cmd,
            cwd=workdir,
            stdin=subprocess.DEVNULL,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
        )
    except OSError as exc:
        raise _spawn_error(manifest.run_cmd, exc) from None
    completed = True
    try:
        out, _err = proc.communicate(timeout=manifest.timeout_secs)
    except subprocess.TimeoutExpired:
        _kill_group(proc.pid)
        out, _err = proc.communicate()
        completed = False
        findings.append(
            Feedback(
                f"Stall/timeout: the program did not complete within {manifest.timeout_secs} s "
                "(possible deadlock or missing termination)",
                "stall",
            )
        )
    finally:
        # reap anything the program left running in its process group
        _kill_group(proc.pid)
    if completed and proc.returncode != 0:
        completed = False
        findings.append(Feedback(_describe_exit(proc.returncode), "crash"))

    if before is not None:
        after = take_snapshot(manifest, workdir, "after")
        for res in diff_snapshots(before, after):
            findings.append(
                Feedback(f"Resource leak: {res.describe()} was still allocated after the program ended", "leak")
            )

    spec = manifest.trace()
    if completed and spec is not None:
        output = out.decode("utf-8", errors="replace")
        try:
            events = parse_trace(output, spec)
        except MalformedEvent as exc:
            findings.append(Feedback(f"Malformed event output ({exc.message})", "malformed-event", line_no=exc.line_no))
        else:
            for err in check_trace(events, spec).errors:
                findings.append(Feedback(err.message, err.code, line_no=err.line_no))
    return StageResult.from_findings("execution", findings, _ms(start))


# -- static analysis -----------------------------------------------------------


def source_files(workdir: Path) -> list[Path]:
    files = []
    for path in workdir.rglob("*"):
        rel = path.relative_to(workdir)
        if any(part.startswith(".") for part in rel.parts):
            continue
        if path.is_file() and path.suffix in SOURCE_SUFFIXES:
            files.append(path)
    return sorted(files, key=lambda p: p.relative_to(workdir).as_posix())


def parse_submission(workdir: Path) -> tuple[list[Node], list[Feedback]]:
    trees, problems = [], []
    for path in source_files(workdir):
        name = path.relative_to(workdir).as_posix()
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
            trees.append(parse(tokenize(text, name), name))
        except CSyntaxError as exc:
            problems.append(Feedback(f"Cannot analyse {name}: {exc.message}", "parse-error", name, exc.span))
    return trees, problems


def run_static(manifest: AssignmentManifest, workdir: Path) -> StageResult:
    start = time.monotonic()
    pack = manifest.rules()
    trees, problems = parse_submission(workdir)
    if problems or pack is None:
        return StageResult.from_findings("static", problems, _ms(start))
    findings = [Feedback(f.message, f.rule_id, f.file, f.span) for f in run_rules(pack, trees)]
    return StageResult.from_findings("static", findings, _ms(start))


# -- driver --------------------------------------------------------------------

_RUNNERS = {"build": run_build, "execution": run_execution, "static": run_static}


def evaluate(
    manifest: AssignmentManifest,
    submission_path: str | Path,
    *,
    only_stage: str | None = None,
    submission_id: str | None = None,
) -> EvaluationReport:
    """Run the pipeline on a copy of ``submission_path``.

    With ``only_stage`` just that stage runs and the others are reported as
    skipped (a debugging aid).  Execution needs the build output, so asking
    for it alone still runs the build first.
    """
    submission = Path(submission_path)
    if not submission.is_dir():
        raise InternalError(f"submission {submission} is not a directory")
    if only_stage is not None and only_stage not in STAGES:
        raise InternalError(f"unknown stage {only_stage!r}")
    # load instructor-side inputs up front so their errors surface as internal errors
    manifest.rules()
    manifest.trace()
    timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    with tempfile.TemporaryDirectory(prefix="sysgrader-") as tmp:
        copy = Path(tmp) / "submission"
        shutil.copytree(submission, copy, symlinks=True)
        workdir = (copy / manifest.workdir).resolve()
        if not workdir.is_dir():
            raise InternalError(f"workdir {manifest.workdir!r} does not exist in the submission")
        wanted = set(STAGES) if only_stage is None else {only_stage}
        if only_stage == "execution":
            wanted.add("build")
        results = []
        failed = False
        for stage in STAGES:
            if failed or stage not in wanted:
                results.append(StageResult.skipped(stage))
                continue
            log.info("running %s stage", stage)
            result = _RUNNERS[stage](manifest, workdir)
            results.append(result)
            failed = result.status == "fail"
    return EvaluationReport(submission_id or submission.resolve().name, timestamp, results)
