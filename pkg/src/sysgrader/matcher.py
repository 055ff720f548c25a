"""Structural matching of compiled patterns against parsed submissions.

Matching is purely syntactic: metavariables unify by structural equality,
``...`` absorbs zero or more statements or arguments (shortest first), and
an ellipsis never crosses out of the Block it sits in.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .cfront import Kind, Node, Span
from .rules import ClauseKind, PatternAst, PatternClause, Rule, RulePack

Binding = dict[str, Node]


class Match(NamedTuple):
    span: Span
    bindings: Binding


@dataclass(frozen=True)
class Finding:
    rule_id: str
    message: str
    span: Span
    bindings: Binding = field(default_factory=dict, compare=False)
    stage: str = "static"

    @property
    def file(self) -> str:
        return self.span.file

    @property
    def line(self) -> int:
        return self.span.start_line

    def binding_text(self) -> dict[str, str]:
        return {name: node.source or node.text for name, node in self.bindings.items()}


# -- node matching -----------------------------------------------------------


def _match(p: Node, n: Node, b: Binding) -> Iterator[Binding]:
    if p.kind is Kind.Metavar:
        bound = b.get(p.text)
        if bound is None:
            yield {**b, p.text: n}
        elif bound.key() == n.key():
            yield b
        return
    if p.kind is Kind.Ellipsis:
        yield b
        return
    if p.kind is not n.kind:
        # `x = e;` also matches the declaration `T x = e;`
        if (
            p.kind is Kind.ExprStmt
            and n.kind is Kind.DeclStmt
            and len(n.children) == 1
            and n.children[0].kind is Kind.Assign
            and p.children[0].kind is Kind.Assign
            and p.children[0].text == "="
        ):
            yield from _seq(p.children[0].children, 0, n.children[0].children, 0, b)
        return
    if p.kind is Kind.IntLiteral:
        if p.key() == n.key():
            yield b
        return
    if p.kind is not Kind.FunctionDef and p.text != n.text:
        return
    yield from _seq(p.children, 0, n.children, 0, b)


def _seq(ps, pi: int, ns, ni: int, b: Binding) -> Iterator[Binding]:
    """Match ``ps[pi:]`` against all of ``ns[ni:]``."""
    if pi == len(ps):
        if ni == len(ns):
            yield b
        return
    p = ps[pi]
    if p.kind is Kind.Ellipsis:
        for k in range(ni, len(ns) + 1):
            yield from _seq(ps, pi + 1, ns, k, b)
        return
    if ni == len(ns):
        return
    for b2 in _match(p, ns[ni], b):
        yield from _seq(ps, pi + 1, ns, ni + 1, b2)


def _seq_prefix(ps, pi: int, ns, ni: int, b: Binding) -> Iterator[tuple[Binding, int]]:
    """Match ``ps[pi:]`` against a prefix of ``ns[ni:]``; yields the end index too."""
    if pi == len(ps):
        yield b, ni
        return
    p = ps[pi]
    if p.kind is Kind.Ellipsis:
        for k in range(ni, len(ns) + 1):
            yield from _seq_prefix(ps, pi + 1, ns, k, b)
        return
    if ni == len(ns):
        return
    for b2 in _match(p, ns[ni], b):
        yield from _seq_prefix(ps, pi + 1, ns, ni + 1, b2)


def _signature(m: Match) -> tuple:
    return (m.span, tuple(sorted((k, v.span, v.first_tok) for k, v in m.bindings.items())))


def _dedupe(matches: Iterable[Match]) -> list[Match]:
    seen = set()
    out = []
    for m in matches:
        sig = _signature(m)
        if sig not in seen:
            seen.add(sig)
            out.append(m)
    return out


def _containers(scope: Node) -> Iterator[tuple[Node, ...]]:
    for node in scope.walk():
        if node.kind in (Kind.Block, Kind.TranslationUnit) and node.children:
            yield node.children


def match_pattern(pattern: PatternAst, scope: Node) -> list[Match]:
    """Every match of ``pattern`` inside ``scope``, outermost-first in source order."""
    found: list[Match] = []
    if pattern.form == "function":
        root = pattern.root
        for node in scope.walk():
            if node.kind is Kind.FunctionDef:
                found.extend(Match(node.span, b) for b in _match(root, node, {}))
    elif pattern.form == "expr":
        root = pattern.root
        for node in scope.walk():
            if node.expr:
                found.extend(Match(node.span, b) for b in _match(root, node, {}))
    else:
        stmts = list(pattern.nodes)
        while stmts and stmts[0].kind is Kind.Ellipsis:
            stmts.pop(0)
        while stmts and stmts[-1].kind is Kind.Ellipsis:
            stmts.pop()
        if not stmts:
            found.extend(Match(node.span, {}) for node in scope.walk() if node.kind is Kind.Block)
        elif len(stmts) == 1:
            root = stmts[0]
            for node in scope.walk():
                if node.kind not in (Kind.TranslationUnit, Kind.FunctionDef):
                    found.extend(Match(node.span, b) for b in _match(root, node, {}))
        else:
            for children in _containers(scope):
                for i in range(len(children)):
                    # non-greedy: only the shortest run starting at i is reported
                    first = next(_seq_prefix(stmts, 0, children, i, {}), None)
                    if first is not None:
                        b, end = first
                        found.append(Match(children[i].span.cover(children[end - 1].span), b))
    found = _dedupe(found)
    found.sort(key=lambda m: (m.span.start_line, m.span.start_col, -m.span.end_line, -m.span.end_col))
    return found


# -- rule evaluation -----------------------------------------------------------


def _consistent(a: Binding, b: Binding) -> bool:
    return all(a[k].key() == b[k].key() for k in a.keys() & b.keys())


def _conjunction(positives: list[PatternClause], scope: Node) -> list[Match]:
    matches = match_pattern(positives[0].pattern, scope)
    for clause in positives[1:]:
        others = match_pattern(clause.pattern, scope)
        merged = []
        for m in matches:
            for o in others:
                if (m.span.contains(o.span) or o.span.contains(m.span)) and _consistent(m.bindings, o.bindings):
                    merged.append(Match(m.span, {**o.bindings, **m.bindings}))
        matches = _dedupe(merged)
    return matches


def _filter(clauses: tuple[PatternClause, ...], matches: list[Match], scope: Node) -> list[Match]:
    """Apply pattern-not and metavariable-pattern clauses to candidate matches."""
    for clause in clauses:
        if clause.kind is ClauseKind.PatternNot:
            excluded = {m.span for m in match_pattern(clause.pattern, scope)}
            matches = [m for m in matches if m.span not in excluded]
        elif clause.kind is ClauseKind.MetavarPattern:
            matches = [
                m
                for m in matches
                if clause.metavariable in m.bindings and _inner_holds(clause.clauses, m.bindings[clause.metavariable])
            ]
    return matches


def _inner_holds(clauses: tuple[PatternClause, ...], node: Node) -> bool:
    positives = [c for c in clauses if c.kind is ClauseKind.Pattern]
    if positives:
        candidates = _conjunction(positives, node)
    else:
        # no positive clause: the whole bound node is the candidate
        candidates = [Match(node.span, {})]
    return bool(_filter(clauses, candidates, node))


def _evaluate(rule: Rule, ast: Node) -> tuple[list[Finding], bool]:
    positives = _conjunction(rule.positives, ast)
    survivors = _filter(rule.clauses, positives, ast)
    focus = [c.metavariable for c in rule.clauses if c.kind is ClauseKind.MetavarPattern]
    findings = []
    for m in survivors:
        span = m.span
        if focus and focus[0] in m.bindings:
            # point at the offending value rather than the whole enclosing match
            span = m.bindings[focus[0]].span
        findings.append(Finding(rule.id, rule.message, span, dict(m.bindings)))
    return findings, bool(positives)


def _whole_file(ast: Node) -> Span:
    return Span(ast.span.file, 1, 1, max(ast.span.end_line, 1), ast.span.end_col)


def evaluate_rule(rule: Rule, ast: Node) -> list[Finding]:
    """Findings of one rule on one TranslationUnit."""
    findings, matched = _evaluate(rule, ast)
    if rule.require_match and not matched:
        findings.append(Finding(rule.id, rule.message, _whole_file(ast)))
    return _sorted(findings)


def _sorted(findings: Iterable[Finding]) -> list[Finding]:
    unique = {}
    for f in findings:
        unique.setdefault((f.rule_id, f.span), f)
    return sorted(
        unique.values(),
        key=lambda f: (f.span.file, f.span.start_line, f.rule_id, f.span.start_col, f.span.end_line, f.span.end_col),
    )


def _home_file(rule: Rule, files: list[Node]) -> Node:
    wanted = {
        n.text for c in rule.positives for root in c.pattern.nodes for n in root.walk() if n.kind is Kind.Identifier
    }

    def score(ast: Node) -> tuple[int, str]:
        hits = sum(1 for n in ast.walk() if n.kind is Kind.Identifier and n.text in wanted)
        return (-hits, ast.span.file)

    return min(files, key=score)


def run_rules(pack: RulePack, files: list[Node]) -> list[Finding]:
    """Evaluate every rule on every file.

    ``require_match`` is judged over the whole submission: one finding,
    when no file contains a positive match, placed on the file that shares
    the most identifiers with the rule's patterns (the file the construct
    most likely belonged in).
    """
    findings = []
    for rule in pack.rules:
        matched_any = False
        for ast in files:
            found, matched = _evaluate(rule, ast)
            findings.extend(found)
            matched_any = matched_any or matched
        if rule.require_match and not matched_any and files:
            home = _home_file(rule, files)
            findings.append(Finding(rule.id, rule.message, _whole_file(home)))
    return _sorted(findings)
