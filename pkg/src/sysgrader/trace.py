"""Validation of program output traces.

Output lines that fit an event template become :class:`TraceEvent` values.
The producer-consumer check replays head/tail ring positions; the generic
checks cover progress (event counts), values (multiset equality) and order
(a later event must be justified by an earlier one).
"""
from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import yaml

PRODUCTION = "production"
CONSUMPTION = "consumption"

DEFAULT_EVENTS = {
    PRODUCTION: "[PROD] pid={pid:int} value={value:int} pos={position:int}",
    CONSUMPTION: "[CONS] pid={pid:int} value={value:int} pos={position:int}",
}

MSG_PROD_LOCATION = "Production at wrong location"
MSG_CONS_LOCATION = "Consumption at wrong location"
MSG_MISSING = "Missing productions/consumptions"
MSG_VALUES = "Produced/consumed values do not match"


class EventKind(str, enum.Enum):
    Production = "production"
    Consumption = "consumption"
    Generic = "generic"


class TraceSpecError(ValueError):
    pass


class MalformedEvent(ValueError):
    def __init__(self, message: str, line_no: int, raw: str):
        super().__init__(f"output line {line_no}: {message}: {raw!r}")
        self.message = message
        self.line_no = line_no
        self.raw = raw


@dataclass(frozen=True)
class TraceEvent:
    kind: EventKind
    label: str
    pid: int | None
    value: int | None
    position: int | None
    line_no: int
    raw: str = ""


@dataclass(frozen=True)
class TraceError:
    code: str
    message: str
    line_no: int | None = None


@dataclass
class TraceVerdict:
    errors: list[TraceError] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "fail" if self.errors else "pass"

    @property
    def passed(self) -> bool:
        return not self.errors

    @property
    def messages(self) -> list[str]:
        return [e.message for e in self.errors]

    def add(self, code: str, message: str, line_no: int | None = None) -> None:
        self.errors.append(TraceError(code, message, line_no))

    def merge(self, *others: "TraceVerdict") -> "TraceVerdict":
        seen = set(self.errors)
        for other in others:
            for err in other.errors:
                if err not in seen:
                    seen.add(err)
                    self.errors.append(err)
        return self


@dataclass(frozen=True)
class OrderRelation:
    earlier: str
    later: str
    join_key: str | None = "value"


_SLOT_RE = re.compile(r"\{(\w+)(?::(int|str))?\}")


@dataclass(frozen=True)
class _Template:
    label: str
    regex: re.Pattern
    prefix: str
    slots: dict[str, str]


def _compile_template(label: str, template: str) -> _Template:
    parts = []
    slots = {}
    pos = 0
    for m in _SLOT_RE.finditer(template):
        parts.append(_literal(template[pos : m.start()]))
        name, typ = m.group(1), m.group(2) or "int"
        if name in slots:
            raise TraceSpecError(f"template {label!r} repeats slot {name!r}")
        slots[name] = typ
        parts.append(rf"(?P<{name}>\S+)" if typ == "int" else rf"(?P<{name}>.+?)")
        pos = m.end()
    parts.append(_literal(template[pos:]))
    first = _SLOT_RE.search(template)
    prefix = (template[: first.start()] if first else template).strip()
    return _Template(label, re.compile("".join(parts).strip()), prefix, slots)


def _literal(text: str) -> str:
    return r"\s+".join(re.escape(chunk) for chunk in text.split(" ")) if text.strip() else (r"\s+" if text else "")


@dataclass
class TraceSpec:
    """Per-assignment trace parameters: ring capacity, expected total and event grammar."""

    size: int
    total: int
    event_patterns: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_EVENTS))
    order_relations: list[OrderRelation] = field(
        default_factory=lambda: [OrderRelation(PRODUCTION, CONSUMPTION, "value")]
    )
    multiset_pairs: list[tuple[str, str]] = field(default_factory=lambda: [(PRODUCTION, CONSUMPTION)])
    expected_counts: dict[str, int] | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.size, int) or self.size < 1:
            raise TraceSpecError(f"size must be an integer >= 1, got {self.size!r}")
        if not isinstance(self.total, int) or self.total < 0:
            raise TraceSpecError(f"total must be an integer >= 0, got {self.total!r}")
        self._templates = [_compile_template(label, tpl) for label, tpl in self.event_patterns.items()]
        labels = set(self.event_patterns)
        for rel in self.order_relations:
            if rel.join_key not in ("value", None):
                raise TraceSpecError(f"unsupported join key {rel.join_key!r}")
            for label in (rel.earlier, rel.later):
                if label not in labels:
                    raise TraceSpecError(f"order relation names unknown event {label!r}")
        for a, b in self.multiset_pairs:
            for label in (a, b):
                if label not in labels:
                    raise TraceSpecError(f"value pair names unknown event {label!r}")

    @property
    def is_prod_cons(self) -> bool:
        return PRODUCTION in self.event_patterns and CONSUMPTION in self.event_patterns

    def counts(self) -> dict[str, int]:
        if self.expected_counts is not None:
            return dict(self.expected_counts)
        return {label: self.total for label in (PRODUCTION, CONSUMPTION) if label in self.event_patterns}

    def to_dict(self) -> dict:
        doc = {
            "size": self.size,
            "total": self.total,
            "events": dict(self.event_patterns),
            "order": [[r.earlier, r.later, r.join_key or "none"] for r in self.order_relations],
            "value_pairs": [list(p) for p in self.multiset_pairs],
        }
        if self.expected_counts is not None:
            doc["counts"] = dict(self.expected_counts)
        return doc


_SPEC_KEYS = {"size", "total", "events", "order", "value_pairs", "counts"}


def trace_spec_from_dict(doc: dict) -> TraceSpec:
    if not isinstance(doc, dict):
        raise TraceSpecError("trace spec must be a mapping")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise TraceSpecError(f"unknown trace spec keys: {sorted(unknown)}")
    for key in ("size", "total"):
        if key not in doc:
            raise TraceSpecError(f"trace spec lacks {key!r}")
    kwargs = {"size": doc["size"], "total": doc["total"]}
    if "events" in doc:
        if not isinstance(doc["events"], dict) or not doc["events"]:
            raise TraceSpecError("'events' must be a non-empty mapping of label to template")
        kwargs["event_patterns"] = {str(k): str(v) for k, v in doc["events"].items()}
    if "order" in doc:
        rels = []
        for item in doc["order"] or []:
            if not isinstance(item, (list, tuple)) or len(item) not in (2, 3):
                raise TraceSpecError(f"bad order relation {item!r}")
            join = item[2] if len(item) == 3 else "value"
            rels.append(OrderRelation(str(item[0]), str(item[1]), None if join in (None, "none") else str(join)))
        kwargs["order_relations"] = rels
    if "value_pairs" in doc:
        pairs = []
        for item in doc["value_pairs"] or []:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise TraceSpecError(f"bad value pair {item!r}")
            pairs.append((str(item[0]), str(item[1])))
        kwargs["multiset_pairs"] = pairs
    if "counts" in doc:
        kwargs["expected_counts"] = {str(k): int(v) for k, v in doc["counts"].items()}
    return TraceSpec(**kwargs)


def load_trace_spec(path: str | Path) -> TraceSpec:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise TraceSpecError(f"invalid YAML in {path}: {exc}") from None
    return trace_spec_from_dict(doc)


def _kind(label: str) -> EventKind:
    if label == PRODUCTION:
        return EventKind.Production
    if label == CONSUMPTION:
        return EventKind.Consumption
    return EventKind.Generic


def parse_trace(output: str, spec: TraceSpec) -> list[TraceEvent]:
    """Turn captured stdout into events; lines fitting no template are ignored.

    A line that starts like a template but whose slots do not parse raises
    :class:`MalformedEvent`.
    """
    events = []
    for line_no, raw in enumerate(output.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        for tpl in spec._templates:
            m = tpl.regex.fullmatch(line)
            if m is None:
                if tpl.prefix and line.startswith(tpl.prefix):
                    raise MalformedEvent(f"line does not follow the {tpl.label!r} template", line_no, raw)
                continue
            fields = {}
            for name, typ in tpl.slots.items():
                text = m.group(name)
                if typ == "int":
                    try:
                        fields[name] = int(text)
                    except ValueError:
                        raise MalformedEvent(f"slot {name!r} is not an integer", line_no, raw) from None
                else:
                    fields[name] = text
            events.append(
                TraceEvent(
                    _kind(tpl.label),
                    tpl.label,
                    fields.get("pid"),
                    fields.get("value"),
                    fields.get("position"),
                    line_no,
                    raw,
                )
            )
            break
    return events


def evaluate_prod_cons(events: list[TraceEvent], spec: TraceSpec) -> TraceVerdict:
    """Replay productions and consumptions over the ring buffer.

    Each production must land at the current tail and each consumption at the
    current head, both advancing modulo ``spec.size``.  At the end both counts
    must equal ``spec.total`` and the value multisets must agree.
    """
    verdict = TraceVerdict()
    produced: Counter = Counter()
    consumed: Counter = Counter()
    head = tail = 0
    n_prod = n_cons = 0
    for ev in events:
        if ev.kind is EventKind.Production:
            if ev.position != tail:
                verdict.add("production-location", MSG_PROD_LOCATION, ev.line_no)
            produced[ev.value] += 1
            n_prod += 1
            tail = (tail + 1) % spec.size
        elif ev.kind is EventKind.Consumption:
            if ev.position != head:
                verdict.add("consumption-location", MSG_CONS_LOCATION, ev.line_no)
            consumed[ev.value] += 1
            n_cons += 1
            head = (head + 1) % spec.size
    if n_prod != spec.total or n_cons != spec.total:
        verdict.add("missing-events", MSG_MISSING)
    if produced != consumed:
        verdict.add("value-mismatch", MSG_VALUES)
    return verdict


def _is_prod_cons_pair(a: str, b: str) -> bool:
    return {a, b} == {PRODUCTION, CONSUMPTION}


def check_progress(events: list[TraceEvent], spec: TraceSpec) -> TraceVerdict:
    verdict = TraceVerdict()
    seen = Counter(ev.label for ev in events)
    expected = spec.counts()
    prodcons_short = any(seen[label] != n for label, n in expected.items() if label in (PRODUCTION, CONSUMPTION))
    if prodcons_short:
        verdict.add("missing-events", MSG_MISSING)
    for label, n in expected.items():
        if label in (PRODUCTION, CONSUMPTION):
            continue
        if seen[label] != n:
            verdict.add("missing-events", f"Expected {n} {label!r} events, found {seen[label]}")
    return verdict


def check_values(events: list[TraceEvent], spec: TraceSpec) -> TraceVerdict:
    verdict = TraceVerdict()
    for a, b in spec.multiset_pairs:
        left = Counter(ev.value for ev in events if ev.label == a)
        right = Counter(ev.value for ev in events if ev.label == b)
        if left != right:
            message = MSG_VALUES if _is_prod_cons_pair(a, b) else f"Values of {a!r} and {b!r} events do not match"
            verdict.add("value-mismatch", message)
    return verdict


def check_order(events: list[TraceEvent], spec: TraceSpec) -> TraceVerdict:
    """Every later-label event must consume one earlier, still-unused event."""
    verdict = TraceVerdict()
    for rel in spec.order_relations:
        available: Counter = Counter()
        for ev in events:
            if ev.label == rel.earlier:
                available[ev.value if rel.join_key == "value" else None] += 1
            elif ev.label == rel.later:
                key = ev.value if rel.join_key == "value" else None
                if available[key] > 0:
                    available[key] -= 1
                    continue
                if rel.join_key == "value":
                    message = f"{rel.later.capitalize()} of value {ev.value} before its {rel.earlier}"
                else:
                    message = f"{rel.later.capitalize()} before any {rel.earlier}"
                verdict.add("order-violation", message, ev.line_no)
    return verdict


def check_trace(events: list[TraceEvent], spec: TraceSpec) -> TraceVerdict:
    """All applicable checks, duplicates merged."""
    verdict = TraceVerdict()
    if spec.is_prod_cons:
        verdict.merge(evaluate_prod_cons(events, spec))
    return verdict.merge(check_progress(events, spec), check_values(events, spec), check_order(events, spec))
