from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

from .lexer import Span


class Kind(str, enum.Enum):
    TranslationUnit = "TranslationUnit"
    FunctionDef = "FunctionDef"
    Block = "Block"
    DeclStmt = "DeclStmt"
    ExprStmt = "ExprStmt"
    If = "If"
    While = "While"
    For = "For"
    Return = "Return"
    Call = "Call"
    Assign = "Assign"
    Identifier = "Identifier"
    IntLiteral = "IntLiteral"
    StringLiteral = "StringLiteral"
    BinaryOp = "BinaryOp"
    UnaryOp = "UnaryOp"
    Member = "Member"
    Index = "Index"
    Other = "Other"
    # pattern holes; never produced when parsing ordinary source
    Metavar = "Metavar"
    Ellipsis = "Ellipsis"


EXPR_KINDS = frozenset(
    {
        Kind.Call,
        Kind.Assign,
        Kind.Identifier,
        Kind.IntLiteral,
        Kind.StringLiteral,
        Kind.BinaryOp,
        Kind.UnaryOp,
        Kind.Member,
        Kind.Index,
    }
)
STMT_KINDS = frozenset(
    {Kind.Block, Kind.DeclStmt, Kind.ExprStmt, Kind.If, Kind.While, Kind.For, Kind.Return}
)


def int_value(text: str) -> int | None:
    digits = text.rstrip("uUlL")
    try:
        if digits[:2] in ("0x", "0X"):
            return int(digits, 16)
        if digits[:2] in ("0b", "0B"):
            return int(digits[2:], 2)
        if len(digits) > 1 and digits.startswith("0"):
            return int(digits, 8)
        return int(digits)
    except ValueError:
        return None


@dataclass(frozen=True, eq=False)
class Node:
    """A spanned syntax-tree node.

    ``text`` holds the token text for leaves and the operator, type or tag for
    interior nodes; ``source`` is the whitespace-normalised token text of the
    whole span.  ``expr`` marks nodes produced in expression position.
    Equality is identity; use :meth:`key` for structural comparison.
    """

    kind: Kind
    children: tuple["Node", ...]
    text: str
    span: Span
    source: str = ""
    expr: bool = False
    first_tok: int = field(default=0, repr=False)
    last_tok: int = field(default=-1, repr=False)

    @property
    def name(self) -> str:
        if self.kind is Kind.FunctionDef:
            return self.children[1].text
        if self.kind in (Kind.Identifier, Kind.Metavar):
            return self.text
        raise AttributeError(f"{self.kind.value} has no name")

    @property
    def params(self) -> tuple["Node", ...]:
        if self.kind is not Kind.FunctionDef:
            raise AttributeError(f"{self.kind.value} has no params")
        return self.children[2].children

    @property
    def body(self) -> "Node":
        if self.kind is not Kind.FunctionDef:
            raise AttributeError(f"{self.kind.value} has no body")
        return self.children[3]

    @property
    def callee(self) -> "Node":
        if self.kind is not Kind.Call:
            raise AttributeError(f"{self.kind.value} has no callee")
        return self.children[0]

    @property
    def args(self) -> tuple["Node", ...]:
        if self.kind is not Kind.Call:
            raise AttributeError(f"{self.kind.value} has no args")
        return self.children[1:]

    def key(self) -> tuple:
        """Structural identity: kind, normalised text and children, spans ignored."""
        if self.kind is Kind.IntLiteral:
            value = int_value(self.text)
            return (self.kind.value, value if value is not None else self.text)
        return (self.kind.value, self.text, tuple(c.key() for c in self.children))

    def walk(self) -> Iterator["Node"]:
        """Pre-order traversal, so outer nodes come before the nodes they contain."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> Iterator["Node"]:
        for node in self.walk():
            if not node.children:
                yield node

    def dump(self, indent: int = 0) -> str:
        pad = "  " * indent
        head = f"{pad}{self.kind.value}"
        if self.text:
            head += f" {self.text!r}"
        head += f" @{self.span.start_line}:{self.span.start_col}-{self.span.end_line}:{self.span.end_col}"
        return "\n".join([head] + [c.dump(indent + 1) for c in self.children])

    def __repr__(self) -> str:
        return f"Node({self.kind.value}, {self.source or self.text!r}, line {self.span.start_line})"
