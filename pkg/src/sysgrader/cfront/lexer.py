"""Tokenizer for the C subset used by exercise templates.

Comments are dropped, preprocessor lines survive as single ``directive``
tokens, and every token carries a :class:`Span`.  In pattern mode ``$NAME``
becomes a ``metavar`` token.
"""
from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Span:
    """Source region; lines and columns are 1-based, the end is exclusive."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def contains(self, other: "Span") -> bool:
        return (
            self.file == other.file
            and (self.start_line, self.start_col) <= (other.start_line, other.start_col)
            and (other.end_line, other.end_col) <= (self.end_line, self.end_col)
        )

    def cover(self, other: "Span") -> "Span":
        return Span(self.file, self.start_line, self.start_col, other.end_line, other.end_col)

    def location(self) -> str:
        return f"{self.file}:{self.start_line}"

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "start_line": self.start_line,
            "start_col": self.start_col,
            "end_line": self.end_line,
            "end_col": self.end_col,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Span":
        return cls(
            data["file"], data["start_line"], data["start_col"], data["end_line"], data["end_col"]
        )


class CSyntaxError(Exception):
    """Base for lexing and parsing failures; always carries a span."""

    def __init__(self, message: str, span: Span):
        super().__init__(f"{span.location()}:{span.start_col}: {message}")
        self.message = message
        self.span = span


class UnterminatedString(CSyntaxError):
    pass


class UnterminatedComment(CSyntaxError):
    pass


class LexError(CSyntaxError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, float, char, string, punct, directive, metavar
    text: str
    span: Span
    offset: int
    end: int

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.span.start_line}:{self.span.start_col})"


KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern float for
    goto if inline int long register restrict return short signed sizeof static struct
    switch typedef union unsigned void volatile while _Bool _Complex _Noreturn
    _Static_assert _Alignas _Alignof _Thread_local""".split()
)

# longest first so that maximal munch falls out of alternation order
PUNCTUATORS = sorted(
    """... <<= >>= -> ++ -- << >> <= >= == != && || *= /= %= += -= &= ^= |= ##
    [ ] ( ) { } . & * + - ~ ! / % < > ^ | ? : ; = , #""".split(),
    key=len,
    reverse=True,
)

_INT_RE = re.compile(r"(0[xX][0-9a-fA-F]+|0[bB][01]+|[0-9]+)([uUlL]*)(?![\w.])")
_FLOAT_RE = re.compile(
    r"((?:[0-9]+\.[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?|[0-9]+[eE][+-]?[0-9]+|0[xX][0-9a-fA-F.]+[pP][+-]?[0-9]+)[fFlL]?"
)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_METAVAR_RE = re.compile(r"\$[A-Z_][A-Z0-9_]*")
_PUNCT_RE = re.compile("|".join(re.escape(p) for p in PUNCTUATORS))
_SPACE_RE = re.compile(r"[ \t\r\f\v]+")
_JUNK_NUMBER_RE = re.compile(r"[0-9A-Za-z_.]+")
_DIGITS = frozenset("0123456789")


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


class _Lexer:
    def __init__(self, source: str, file: str, pattern: bool):
        self.src = source
        self.file = file
        self.pattern = pattern
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.at_line_start = True

    def _advance(self, n: int) -> None:
        chunk = self.src[self.pos : self.pos + n]
        newlines = chunk.count("\n")
        if newlines:
            self.line += newlines
            self.col = len(chunk) - chunk.rfind("\n")
        else:
            self.col += n
        self.pos += n

    def _span_from(self, line: int, col: int) -> Span:
        return Span(self.file, line, col, self.line, self.col)

    def _emit(self, kind: str, length: int, text: str | None = None) -> None:
        start, line, col = self.pos, self.line, self.col
        raw = self.src[start : start + length]
        self._advance(length)
        self.tokens.append(Token(kind, raw if text is None else text, self._span_from(line, col), start, self.pos))
        self.at_line_start = False

    def run(self) -> list[Token]:
        src = self.src
        n = len(src)
        while self.pos < n:
            c = src[self.pos]
            if c == "\n":
                self._advance(1)
                self.at_line_start = True
                continue
            m = _SPACE_RE.match(src, self.pos)
            if m:
                self._advance(m.end() - self.pos)
                continue
            if c == "\\" and src.startswith("\n", self.pos + 1):
                self._advance(2)
                continue
            if src.startswith("//", self.pos):
                end = src.find("\n", self.pos)
                self._advance((n if end < 0 else end) - self.pos)
                continue
            if src.startswith("/*", self.pos):
                end = src.find("*/", self.pos + 2)
                if end < 0:
                    raise UnterminatedComment("unterminated comment", self._span_from(self.line, self.col))
                self._advance(end + 2 - self.pos)
                continue
            if c == "#" and self.at_line_start:
                self._directive()
                continue
            if c in "\"'":
                self._quoted(c)
                continue
            if c == "L" and self.pos + 1 < n and src[self.pos + 1] in "\"'":
                self._quoted(src[self.pos + 1], prefix=1)
                continue
            if c == "$" and self.pattern:
                m = _METAVAR_RE.match(src, self.pos)
                if m:
                    self._emit("metavar", m.end() - self.pos)
                    continue
            if c in _DIGITS or (c == "." and self.pos + 1 < n and src[self.pos + 1] in _DIGITS):
                m = _INT_RE.match(src, self.pos)
                if m:
                    self._emit("int", m.end() - self.pos)
                    continue
                m = _FLOAT_RE.match(src, self.pos)
                if m:
                    self._emit("float", m.end() - self.pos)
                    continue
                # malformed number such as 08x: take the alnum run as an opaque token
                m = _JUNK_NUMBER_RE.match(src, self.pos)
                self._emit("float", m.end() - self.pos)
                continue
            m = _IDENT_RE.match(src, self.pos)
            if m:
                word = m.group()
                self._emit("keyword" if word in KEYWORDS else "ident", len(word))
                continue
            m = _PUNCT_RE.match(src, self.pos)
            if m:
                self._emit("punct", m.end() - self.pos)
                continue
            raise LexError(f"unexpected character {c!r}", Span(self.file, self.line, self.col, self.line, self.col + 1))
        return self.tokens

    def _directive(self) -> None:
        # runs to end of line, honouring backslash continuations and block comments
        src = self.src
        i = self.pos
        n = len(src)
        while i < n and src[i] != "\n":
            if src[i] == "\\" and i + 1 < n and src[i + 1] == "\n":
                i += 2
                continue
            if src.startswith("/*", i):
                end = src.find("*/", i + 2)
                if end < 0:
                    raise UnterminatedComment("unterminated comment", Span(self.file, self.line, self.col, self.line, self.col))
                i = end + 2
                continue
            if src.startswith("//", i):
                end = src.find("\n", i)
                i = n if end < 0 else end
                break
            i += 1
        raw = src[self.pos : i]
        text = re.sub(r"/\*.*?\*/|//.*", " ", raw.replace("\\\n", " "), flags=re.S)
        self._emit("directive", len(raw), normalize_ws(text))

    def _quoted(self, quote: str, prefix: int = 0) -> None:
        src = self.src
        i = self.pos + prefix + 1
        n = len(src)
        while i < n:
            ch = src[i]
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                self._emit("string" if quote == '"' else "char", i + 1 - self.pos)
                return
            if ch == "\n":
                break
            i += 1
        what = "string" if quote == '"' else "character constant"
        raise UnterminatedString(f"unterminated {what}", Span(self.file, self.line, self.col, self.line, self.col + 1))


def tokenize(source: str, file: str = "<input>", *, pattern: bool = False) -> list[Token]:
    """Split C source into tokens.

    Raises :class:`UnterminatedString`, :class:`UnterminatedComment` or
    :class:`LexError`, each carrying the offending span.
    """
    return _Lexer(source, file, pattern).run()
