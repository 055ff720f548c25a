"""System V IPC snapshots and leak detection.

Snapshot text has one resource per line::

    <kind> <key> <id> <owner>

where kind is ``semaphore_set``, ``shared_memory`` or ``message_queue``,
key is decimal or 0x-hex (0 for IPC_PRIVATE), and id is the kernel id.
Blank lines, ``#`` comments and a ``kind key id owner`` header are skipped.
"""
from __future__ import annotations

import os
import pwd
from dataclasses import dataclass
from pathlib import Path

KINDS = ("semaphore_set", "shared_memory", "message_queue")
_KIND_ORDER = {k: i for i, k in enumerate(KINDS)}

PROC_FILES = {
    "semaphore_set": "sem",
    "shared_memory": "shm",
    "message_queue": "msg",
}


class SnapshotFormatError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"snapshot line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class ResourceId:
    kind: str
    key: int
    os_id: int
    owner: str

    @property
    def identity(self) -> tuple[str, int]:
        return (self.kind, self.os_id)

    def describe(self) -> str:
        return f"{self.kind} id={self.os_id} key={self.key:#x} owner={self.owner}"

    def to_line(self) -> str:
        return f"{self.kind} {self.key:#x} {self.os_id} {self.owner}"


@dataclass(frozen=True)
class Snapshot:
    resources: frozenset[ResourceId]
    taken_at: str = "before"

    def __post_init__(self) -> None:
        ids = [r.identity for r in self.resources]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate (kind, id) in snapshot")

    def by_identity(self) -> dict[tuple[str, int], ResourceId]:
        return {r.identity: r for r in self.resources}

    def render(self) -> str:
        return "".join(r.to_line() + "\n" for r in sort_resources(self.resources))


def sort_resources(resources) -> list[ResourceId]:
    return sorted(resources, key=lambda r: (_KIND_ORDER.get(r.kind, len(KINDS)), r.kind, r.os_id))


def _int(text: str, what: str, line_no: int) -> int:
    try:
        return int(text, 0)
    except ValueError:
        try:
            return int(text, 16) if what == "key" else int(text)
        except ValueError:
            raise SnapshotFormatError(f"bad {what} {text!r}", line_no) from None


def parse_snapshot(text: str, label: str = "before") -> Snapshot:
    seen: dict[tuple[str, int], int] = {}
    resources = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "kind":
            continue
        if len(fields) != 4:
            raise SnapshotFormatError(f"expected 4 fields, got {len(fields)}", line_no)
        kind, key, os_id, owner = fields
        if kind not in KINDS:
            raise SnapshotFormatError(f"unknown resource kind {kind!r}", line_no)
        res = ResourceId(kind, _int(key, "key", line_no), _int(os_id, "id", line_no), owner)
        if res.identity in seen:
            raise SnapshotFormatError(
                f"duplicate {kind} id {res.os_id} (first on line {seen[res.identity]})", line_no
            )
        seen[res.identity] = line_no
        resources.append(res)
    return Snapshot(frozenset(resources), label)


def diff_snapshots(before: Snapshot, after: Snapshot) -> list[ResourceId]:
    """Resources present after the run but not before, sorted by (kind, id).

    Only new resources count; anything that disappeared was not created by
    the submission.
    """
    old = {r.identity for r in before.resources}
    return sort_resources(r for r in after.resources if r.identity not in old)


def _owner(uid: int) -> str:
    try:
        return pwd.getpwuid(uid).pw_name
    except KeyError:
        return str(uid)


def read_proc_sysvipc(root: str | Path = "/proc/sysvipc") -> str:
    """Render the live IPC tables of this host in snapshot format."""
    root = Path(root)
    lines = []
    for kind, name in PROC_FILES.items():
        path = root / name
        if not path.exists():
            continue
        rows = path.read_text().splitlines()
        if not rows:
            continue
        header = rows[0].split()
        for row in rows[1:]:
            cols = dict(zip(header, row.split()))
            if not cols:
                continue
            os_id = cols.get("semid") or cols.get("shmid") or cols.get("msqid")
            uid = int(cols.get("uid", os.getuid()))
            lines.append(f"{kind} {int(cols['key']):#x} {os_id} {_owner(uid)}")
    return "".join(line + "\n" for line in lines)
