"""Shared fixtures: the shipped reference submission and seeded mutants of it."""
from __future__ import annotations

import contextlib
import shutil
import subprocess
from pathlib import Path

from sysgrader import assignment_path
from sysgrader.resources import diff_snapshots, parse_snapshot, read_proc_sysvipc

PRODCONS = assignment_path("prodcons")
REFERENCE = PRODCONS / "reference"
MANIFEST = PRODCONS / "manifest.yaml"
LISTING = PRODCONS / "listing.yaml"
RULES = PRODCONS / "rules.yaml"
TRACE_SPEC = PRODCONS / "trace.yaml"


def reference_text(name: str = "procons.c") -> str:
    return (REFERENCE / name).read_text()


def line_of(text: str, needle: str) -> int:
    """1-based line of the first occurrence of ``needle`` (plain text search)."""
    idx = text.index(needle)
    return text.count("\n", 0, idx) + 1


def _replace_once(text: str, old: str, new: str) -> str:
    assert text.count(old) == 1, f"{old!r} occurs {text.count(old)} times"
    return text.replace(old, new)


def _swap_lines(text: str, a: str, b: str) -> str:
    lines = text.split("\n")
    ia = next(i for i, l in enumerate(lines) if l.strip() == a)
    ib = next(i for i, l in enumerate(lines) if l.strip() == b)
    lines[ia], lines[ib] = lines[ib], lines[ia]
    return "\n".join(lines)


PRODUCER_HEADER = "void insert_request(queue_requests *q, int value) {"

# name -> (edit of procons.c, rule id, needle locating the expected line; None = line 1)
STATIC_MUTANTS = {
    "semget-count-2": (
        lambda s: _replace_once(s, "semget(IPC_PRIVATE, 4,", "semget(IPC_PRIVATE, 2,"),
        "semaphore-allocation",
        "semget(IPC_PRIVATE, 2,",
    ),
    "semget-absent": (
        lambda s: _replace_once(s, "sem_id = semget(IPC_PRIVATE, 4, IPC_CREAT|0664);", "sem_id = 0;"),
        "semaphore-allocation",
        None,
    ),
    "setval-5": (
        lambda s: _replace_once(s, "SPACE_AVAILABLE, SETVAL, 10)", "SPACE_AVAILABLE, SETVAL, 5)"),
        "semaphore-initialization",
        "SPACE_AVAILABLE, SETVAL, 5)",
    ),
    "missing-wait-mutexp": (
        lambda s: _replace_once(s, "    Wait_Sem(sem_id, MUTEXP);\n", ""),
        "producer_synchronization",
        PRODUCER_HEADER,
    ),
    "swapped-waits": (
        lambda s: _swap_lines(s, "Wait_Sem(sem_id, SPACE_AVAILABLE);", "Wait_Sem(sem_id, MUTEXP);"),
        "producer_synchronization",
        PRODUCER_HEADER,
    ),
    "missing-signal-message": (
        lambda s: _replace_once(s, "    Signal_Sem(sem_id, MESSAGE_AVAILABLE);\n", ""),
        "producer_synchronization",
        PRODUCER_HEADER,
    ),
}


def mutant_source(name: str) -> str:
    edit = STATIC_MUTANTS[name][0]
    return edit(reference_text())


def expected_location(name: str) -> tuple[str, int]:
    _, _, needle = STATIC_MUTANTS[name]
    if needle is None:
        return ("procons.c", 1)
    return ("procons.c", line_of(mutant_source(name), needle))


def require_match_variant(document: str) -> str:
    """The listing pack with ``require_match: true`` added to semaphore-allocation."""
    return _replace_once(
        document,
        "  - id: semaphore-allocation\n",
        "  - id: semaphore-allocation\n    require_match: true\n",
    )


# -- whole-submission fixtures for the pipeline ---------------------------------


def copy_reference(dest: Path) -> Path:
    dest = Path(dest)
    shutil.copytree(REFERENCE, dest)
    return dest


def _edit(path: Path, old: str, new: str) -> None:
    path.write_text(_replace_once(path.read_text(), old, new))


def make_missing_semicolon(dest: Path) -> Path:
    sub = copy_reference(dest)
    _edit(sub / "procons.c", "    q->head = 0;\n", "    q->head = 0\n")
    return sub


def make_leak(dest: Path) -> Path:
    sub = copy_reference(dest)
    _edit(sub / "procons.c", "    semctl(sem_id, 0, IPC_RMID);\n", "")
    return sub


def make_deadlock(dest: Path) -> Path:
    """The producer waits twice on its mutex and never gets past the second Wait."""
    sub = copy_reference(dest)
    _edit(sub / "procons.c", "    Wait_Sem(sem_id, MUTEXP);\n", "    Wait_Sem(sem_id, MUTEXP);\n    Wait_Sem(sem_id, MUTEXP);\n")
    return sub


def make_mutex_zero(dest: Path) -> Path:
    """MUTEXP initialized to 0; main() posts it once, so the run still looks right."""
    sub = copy_reference(dest)
    _edit(sub / "procons.c", "semctl(sem_id, MUTEXP, SETVAL, 1);", "semctl(sem_id, MUTEXP, SETVAL, 0);")
    _edit(
        sub / "main.c",
        "    queue_requests *q = initialization();\n",
        "    queue_requests *q = initialization();\n    Signal_Sem(sem_id, MUTEXP);\n",
    )
    return sub


def make_unparsable(dest: Path) -> Path:
    """Builds (the file is not compiled) but cannot be parsed."""
    sub = copy_reference(dest)
    (sub / "notes.c").write_text("int broken( {\n")
    return sub


# -- IPC hygiene ------------------------------------------------------------------

_IPCRM_FLAG = {"semaphore_set": "-s", "shared_memory": "-m", "message_queue": "-q"}


def ipc_available() -> bool:
    return Path("/proc/sysvipc/sem").exists() and shutil.which("gcc") is not None and shutil.which("make") is not None


@contextlib.contextmanager
def ipc_guard():
    """Remove any System V resource created inside the block."""
    before = parse_snapshot(read_proc_sysvipc())
    try:
        yield
    finally:
        after = parse_snapshot(read_proc_sysvipc(), "after")
        for res in diff_snapshots(before, after):
            subprocess.run(["ipcrm", _IPCRM_FLAG[res.kind], str(res.os_id)], capture_output=True)
