"""Rule packs: YAML documents of tailored checks with embedded C patterns.

The field names (``rules``, ``id``, ``message``, ``patterns``, ``pattern``,
``pattern-not``, ``metavariable-pattern``) follow the Semgrep rule syntax so
existing rule files load unchanged.  ``require_match`` is our extension.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .cfront import CSyntaxError, Kind, Node, parse_fragment, tokenize

METAVAR_RE = re.compile(r"^\$[A-Z_][A-Z0-9_]*$")

_RULE_KEYS = {"id", "message", "patterns", "require_match"}
_CLAUSE_KEYS = {"pattern", "pattern-not", "metavariable-pattern"}


class RuleError(Exception):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.message = message
        self.line = line


class SchemaError(RuleError):
    pass


class PatternSyntaxError(RuleError):
    pass


class ClauseKind(str, enum.Enum):
    Pattern = "pattern"
    PatternNot = "pattern-not"
    MetavarPattern = "metavariable-pattern"


@dataclass(frozen=True)
class PatternAst:
    """A compiled snippet.

    ``form`` is ``"expr"`` (one expression), ``"seq"`` (statement run) or
    ``"function"`` (a single FunctionDef).  Equality goes by snippet text.
    """

    form: str
    nodes: tuple[Node, ...] = field(compare=False)
    snippet: str

    @property
    def root(self) -> Node:
        return self.nodes[0]

    def metavariables(self) -> set[str]:
        return {n.text for root in self.nodes for n in root.walk() if n.kind is Kind.Metavar}


@dataclass(frozen=True)
class PatternClause:
    kind: ClauseKind
    pattern: PatternAst | None = None
    metavariable: str | None = None
    clauses: tuple["PatternClause", ...] = ()
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Rule:
    id: str
    message: str
    clauses: tuple[PatternClause, ...]
    require_match: bool = False
    line: int | None = field(default=None, compare=False)

    @property
    def positives(self) -> list[PatternClause]:
        return [c for c in self.clauses if c.kind is ClauseKind.Pattern]


@dataclass(frozen=True)
class RulePack:
    rules: tuple[Rule, ...]
    source_path: str = field(default="<string>", compare=False)

    def __len__(self) -> int:
        return len(self.rules)

    def __getitem__(self, rule_id: str) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.rules]


def parse_pattern(snippet: str, line: int | None = None) -> PatternAst:
    """Compile a C snippet possibly containing ``$NAME`` holes and ``...``."""
    try:
        tokens = tokenize(snippet, "<pattern>", pattern=True)
        form, nodes = parse_fragment(tokens)
    except CSyntaxError as exc:
        where = None if line is None else line + exc.span.start_line - 1
        raise PatternSyntaxError(f"cannot parse pattern {snippet.strip()!r}: {exc.message}", where) from None
    for root in nodes:
        _check_holes(root, snippet, line)
    if form == "seq":
        _check_no_double_ellipsis(nodes, snippet, line)
    return PatternAst(form, tuple(nodes), snippet)


def _check_holes(root: Node, snippet: str, line: int | None) -> None:
    for node in root.walk():
        if node.children:
            _check_no_double_ellipsis(node.children, snippet, line)


def _check_no_double_ellipsis(nodes, snippet: str, line: int | None) -> None:
    for a, b in zip(nodes, nodes[1:]):
        if a.kind is Kind.Ellipsis and b.kind is Kind.Ellipsis:
            raise PatternSyntaxError(f"consecutive '...' in pattern {snippet.strip()!r}", line)


# -- loading ---------------------------------------------------------------


def _line(node: yaml.Node) -> int:
    return node.start_mark.line + 1


def _scalar(node: yaml.Node, what: str) -> str:
    if not isinstance(node, yaml.ScalarNode):
        raise SchemaError(f"{what} must be a string", _line(node))
    return node.value


def _mapping(node: yaml.Node, what: str, allowed: set[str]) -> dict[str, tuple[yaml.Node, yaml.Node]]:
    if not isinstance(node, yaml.MappingNode):
        raise SchemaError(f"{what} must be a mapping", _line(node))
    out = {}
    for key_node, value_node in node.value:
        key = _scalar(key_node, "key")
        if key not in allowed:
            raise SchemaError(f"unknown key {key!r} in {what}", _line(key_node))
        if key in out:
            raise SchemaError(f"duplicate key {key!r} in {what}", _line(key_node))
        out[key] = (key_node, value_node)
    return out


def _sequence(node: yaml.Node, what: str) -> list[yaml.Node]:
    if not isinstance(node, yaml.SequenceNode):
        raise SchemaError(f"{what} must be a list", _line(node))
    return node.value


def _snippet_line(node: yaml.ScalarNode) -> int:
    # block scalars start on the line after the indicator
    return _line(node) + (1 if node.style in ("|", ">") else 0)


def _clauses(seq_node: yaml.Node, what: str) -> tuple[PatternClause, ...]:
    items = _sequence(seq_node, what)
    if not items:
        raise SchemaError(f"{what} must not be empty", _line(seq_node))
    clauses = []
    for item in items:
        entry = _mapping(item, "pattern clause", _CLAUSE_KEYS)
        if len(entry) != 1:
            raise SchemaError("each pattern clause needs exactly one operator", _line(item))
        (key, (key_node, value)), = entry.items()
        line = _line(key_node)
        if key == "metavariable-pattern":
            body = _mapping(value, "metavariable-pattern", {"metavariable", "patterns"})
            for required in ("metavariable", "patterns"):
                if required not in body:
                    raise SchemaError(f"metavariable-pattern lacks {required!r}", line)
            name = _scalar(body["metavariable"][1], "metavariable")
            if not METAVAR_RE.match(name):
                raise SchemaError(f"bad metavariable name {name!r}", _line(body["metavariable"][1]))
            inner = _clauses(body["patterns"][1], "metavariable-pattern patterns")
            mv_line = _line(body["metavariable"][1])
            clauses.append(PatternClause(ClauseKind.MetavarPattern, metavariable=name, clauses=inner, line=mv_line))
        else:
            text = _scalar(value, key)
            pattern = parse_pattern(text, _snippet_line(value))
            clauses.append(PatternClause(ClauseKind(key), pattern=pattern, line=line))
    return tuple(clauses)


def _check_metavars(rule_id: str, clauses: tuple[PatternClause, ...], bound: set[str], line: int) -> None:
    for clause in clauses:
        if clause.kind is ClauseKind.MetavarPattern:
            if clause.metavariable not in bound:
                raise SchemaError(
                    f"rule {rule_id!r}: metavariable {clause.metavariable} is not bound by any pattern",
                    clause.line or line,
                )
            inner_bound = bound | {
                v for c in clause.clauses if c.kind is ClauseKind.Pattern for v in c.pattern.metavariables()
            }
            _check_metavars(rule_id, clause.clauses, inner_bound, line)


def _rule(node: yaml.Node) -> Rule:
    entry = _mapping(node, "rule", _RULE_KEYS)
    line = _line(node)
    for required in ("id", "message", "patterns"):
        if required not in entry:
            raise SchemaError(f"rule lacks {required!r}", line)
    rule_id = _scalar(entry["id"][1], "id").strip()
    if not rule_id:
        raise SchemaError("rule id must not be empty", line)
    message = _scalar(entry["message"][1], "message")
    if not message.strip():
        raise SchemaError(f"rule {rule_id!r} has an empty message", line)
    require_match = False
    if "require_match" in entry:
        value = entry["require_match"][1]
        if not isinstance(value, yaml.ScalarNode) or value.value.lower() not in ("true", "false"):
            raise SchemaError("require_match must be a boolean", _line(value))
        require_match = value.value.lower() == "true"
    clauses = _clauses(entry["patterns"][1], f"patterns of rule {rule_id!r}")
    positives = [c for c in clauses if c.kind is ClauseKind.Pattern]
    if not positives:
        raise SchemaError(f"rule {rule_id!r} needs at least one positive 'pattern'", line)
    bound = {v for c in positives for v in c.pattern.metavariables()}
    _check_metavars(rule_id, clauses, bound, line)
    return Rule(rule_id, message, clauses, require_match, line)


def load_rule_pack(document: str, source_path: str = "<string>") -> RulePack:
    """Parse and compile a rule-pack document.

    Raises :class:`SchemaError` or :class:`PatternSyntaxError`, both with the
    offending document line.
    """
    try:
        root = yaml.compose(document)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SchemaError(f"invalid YAML: {exc}", mark.line + 1 if mark else None) from None
    if root is None:
        raise SchemaError("empty rule document", 1)
    top = _mapping(root, "rule document", {"rules"})
    if "rules" not in top:
        raise SchemaError("missing top-level 'rules'", _line(root))
    rules = []
    seen: dict[str, int] = {}
    for item in _sequence(top["rules"][1], "rules"):
        rule = _rule(item)
        if rule.id in seen:
            raise SchemaError(f"duplicate rule id {rule.id!r} (first defined on line {seen[rule.id]})", rule.line)
        seen[rule.id] = rule.line
        rules.append(rule)
    return RulePack(tuple(rules), source_path)


def load_rule_file(path: str | Path) -> RulePack:
    path = Path(path)
    return load_rule_pack(path.read_text(encoding="utf-8"), str(path))


# -- rendering -------------------------------------------------------------


class _Dumper(yaml.SafeDumper):
    pass


def _str_representer(dumper: yaml.SafeDumper, data: str):
    if "\n" in data:
        return dumper.represent_scalar("tag:yaml.org,2002:str", data, style="|")
    return dumper.represent_scalar("tag:yaml.org,2002:str", data, style='"' if data[:1] in "$\"'" else None)


_Dumper.add_representer(str, _str_representer)


def _clause_doc(clause: PatternClause) -> dict:
    if clause.kind is ClauseKind.MetavarPattern:
        return {
            "metavariable-pattern": {
                "metavariable": clause.metavariable,
                "patterns": [_clause_doc(c) for c in clause.clauses],
            }
        }
    return {clause.kind.value: clause.pattern.snippet}


def render_rule_pack(pack: RulePack) -> str:
    """Serialise a pack back to the YAML rule format."""
    rules = []
    for rule in pack.rules:
        doc = {"id": rule.id, "message": rule.message}
        if rule.require_match:
            doc["require_match"] = True
        doc["patterns"] = [_clause_doc(c) for c in rule.clauses]
        rules.append(doc)
    return yaml.dump({"rules": rules}, Dumper=_Dumper, sort_keys=False, allow_unicode=True, width=10_000)
