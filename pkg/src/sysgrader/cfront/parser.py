"""Recursive-descent parser for a pragmatic C subset.

Anything outside the subset is kept as an ``Other`` node with a correct span
so that ellipsis patterns can skip over it.  Only structural breakage such as
unbalanced braces is reported as :class:`ParseError`.
"""
from __future__ import annotations

from .lexer import CSyntaxError, Span, Token, tokenize
from .nodes import Kind, Node

TYPE_KEYWORDS = frozenset(
    """void char short int long float double signed unsigned _Bool _Complex struct union
    enum const volatile restrict static extern register auto typedef inline _Noreturn
    _Thread_local _Alignas""".split()
)
GNU_EXTENSIONS = frozenset(
    {"__attribute__", "__attribute", "__extension__", "__asm__", "__asm", "asm", "__declspec",
     "__inline", "__inline__", "__restrict", "__restrict__", "__volatile__", "__const"}
)
COMMON_TYPEDEFS = frozenset(
    """size_t ssize_t pid_t key_t off_t time_t uid_t gid_t mode_t FILE DIR va_list
    pthread_t pthread_mutex_t pthread_cond_t pthread_attr_t pthread_mutexattr_t
    pthread_condattr_t sem_t bool int8_t int16_t int32_t int64_t uint8_t uint16_t uint32_t
    uint64_t intptr_t uintptr_t ptrdiff_t""".split()
)
ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>=".split())
BINARY_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6, "<": 7, ">": 7, "<=": 7, ">=": 7,
    "<<": 8, ">>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
PREFIX_OPS = frozenset("++ -- & * + - ! ~".split())
OPENERS = {"(": ")", "[": "]", "{": "}"}
CLOSERS = {v: k for k, v in OPENERS.items()}


class ParseError(CSyntaxError):
    """Unrecoverable syntax error; ``expected`` is a hint for the reader."""

    def __init__(self, message: str, span: Span, expected: str | None = None):
        super().__init__(message, span)
        self.expected = expected


def _is_attribute(tok: Token) -> bool:
    return tok.kind == "ident" and tok.text in GNU_EXTENSIONS


class Parser:
    def __init__(self, tokens: list[Token], file: str = "<input>", *, pattern: bool = False, strict: bool = False):
        self.toks = tokens
        self.file = tokens[0].span.file if tokens else file
        self.pattern = pattern
        # strict: no recovery into Other nodes (used for rule patterns)
        self.strict = strict
        self.i = 0
        self.typedefs = set(COMMON_TYPEDEFS) | _scan_typedefs(tokens)

    # -- token helpers -------------------------------------------------

    def peek(self, k: int = 0) -> Token | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at(self, text: str, k: int = 0) -> bool:
        tok = self.peek(k)
        return tok is not None and tok.text == text and tok.kind in ("punct", "keyword")

    def at_eof(self) -> bool:
        return self.i >= len(self.toks)

    def advance(self) -> Token:
        if self.i >= len(self.toks):
            raise self.error("unexpected end of input")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def here(self) -> Span:
        tok = self.peek()
        if tok is not None:
            return tok.span
        if self.toks:
            last = self.toks[-1].span
            return Span(last.file, last.end_line, last.end_col, last.end_line, last.end_col)
        return Span(self.file, 1, 1, 1, 1)

    def error(self, message: str, expected: str | None = None) -> ParseError:
        tok = self.peek()
        found = "end of input" if tok is None else repr(tok.text)
        return ParseError(f"{message}, found {found}", self.here(), expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}", expected=text)
        return self.advance()

    def make(self, kind: Kind, children, text: str, first: int, last: int, *, expr: bool = False) -> Node:
        if last < first:
            span = self._empty_span(first)
            source = ""
        else:
            span = self.toks[first].span.cover(self.toks[last].span)
            source = " ".join(t.text for t in self.toks[first : last + 1])
        return Node(kind, tuple(children), text, span, source, expr, first, last)

    def _empty_span(self, index: int) -> Span:
        if index < len(self.toks):
            s = self.toks[index].span
            return Span(s.file, s.start_line, s.start_col, s.start_line, s.start_col)
        if self.toks:
            s = self.toks[-1].span
            return Span(s.file, s.end_line, s.end_col, s.end_line, s.end_col)
        return Span(self.file, 1, 1, 1, 1)

    def leaf(self, kind: Kind, *, expr: bool = False, text: str | None = None) -> Node:
        tok = self.advance()
        return self.make(kind, (), tok.text if text is None else text, self.i - 1, self.i - 1, expr=expr)

    def matching(self, index: int) -> int:
        """Index of the bracket closing the one at ``index``."""
        stack = []
        for j in range(index, len(self.toks)):
            tok = self.toks[j]
            if tok.kind != "punct":
                continue
            if tok.text in OPENERS:
                stack.append(OPENERS[tok.text])
            elif tok.text in CLOSERS:
                if not stack or stack[-1] != tok.text:
                    raise ParseError(f"unbalanced {tok.text!r}", tok.span, stack[-1] if stack else None)
                stack.pop()
                if not stack:
                    return j
        raise ParseError(
            f"unclosed {self.toks[index].text!r}", self.toks[index].span, stack[-1] if stack else None
        )

    def skip_attribute(self) -> int:
        """Consume a GNU extension keyword plus its parenthesised argument."""
        first = self.i
        self.advance()
        while self.at("("):
            self.i = self.matching(self.i) + 1
        return first

    # -- top level -----------------------------------------------------

    def parse_translation_unit(self) -> Node:
        items = []
        while not self.at_eof():
            items.append(self.parse_external())
        return self.make(Kind.TranslationUnit, items, "", 0, len(self.toks) - 1)

    def parse_external(self) -> Node:
        tok = self.peek()
        if tok.kind == "directive":
            return self.leaf(Kind.Other)
        if self.at(";"):
            return self.leaf(Kind.Other)
        if tok.kind == "punct" and tok.text in CLOSERS:
            raise ParseError(f"unbalanced {tok.text!r}", tok.span)
        end, brace = self._header_extent(self.i)
        if brace is not None:
            fn = self._try_function(self.i, brace)
            if fn is not None:
                return fn
        return self._statement_or_other(self.parse_declaration)

    def _header_extent(self, start: int) -> tuple[int, int | None]:
        """Scan to the first depth-0 ``;`` or ``{``; returns (index, brace index or None)."""
        j = start
        while j < len(self.toks):
            tok = self.toks[j]
            if tok.kind == "punct":
                if tok.text == ";":
                    return j, None
                if tok.text == "{":
                    return j, j
                if tok.text in ("(", "["):
                    j = self.matching(j)
                elif tok.text in CLOSERS:
                    raise ParseError(f"unbalanced {tok.text!r}", tok.span)
            j += 1
        raise ParseError("expected ';' or '{'", self.here() if start >= len(self.toks) else self.toks[-1].span, ";")

    def _try_function(self, start: int, brace: int) -> Node | None:
        if brace == start or self.toks[brace - 1].text != ")":
            return None
        close = brace - 1
        depth = 0
        open_ = None
        for j in range(close, start - 1, -1):
            t = self.toks[j].text
            if self.toks[j].kind != "punct":
                continue
            if t == ")":
                depth += 1
            elif t == "(":
                depth -= 1
                if depth == 0:
                    open_ = j
                    break
        if open_ is None or open_ == start:
            return None
        name_tok = self.toks[open_ - 1]
        if name_tok.kind not in ("ident", "metavar") or name_tok.text in GNU_EXTENSIONS:
            return None
        # reject things like `struct s {` or `= {` that merely happen to end in ')'
        for t in self.toks[start : open_ - 1]:
            if t.kind == "punct" and t.text not in ("*", "(", ")", ","):
                return None
            if t.text in ("=",):
                return None
        ret_first, ret_last = start, open_ - 2
        if self.pattern and ret_first == ret_last and self.toks[ret_first].kind == "metavar":
            ret = self.make(Kind.Metavar, (), self.toks[ret_first].text, ret_first, ret_last)
        else:
            text = " ".join(t.text for t in self.toks[ret_first : ret_last + 1])
            ret = self.make(Kind.Other, (), text, ret_first, ret_last)
        if name_tok.kind == "metavar":
            name = self.make(Kind.Metavar, (), name_tok.text, open_ - 1, open_ - 1)
        else:
            name = self.make(Kind.Identifier, (), name_tok.text, open_ - 1, open_ - 1)
        params = self._params(open_, close)
        self.i = brace
        body = self.parse_block()
        return self.make(Kind.FunctionDef, (ret, name, params, body), name_tok.text, start, self.i - 1)

    def _params(self, open_: int, close: int) -> Node:
        items = []
        seg_start = open_ + 1
        depth = 0
        for j in range(open_ + 1, close + 1):
            t = self.toks[j]
            if t.kind == "punct" and t.text in OPENERS:
                depth += 1
            elif t.kind == "punct" and t.text in CLOSERS and j != close:
                depth -= 1
            if (j == close or (depth == 0 and t.text == "," and t.kind == "punct")) and j > seg_start:
                items.append(self._param(seg_start, j - 1))
                seg_start = j + 1
            elif j == close or (depth == 0 and t.text == ","):
                seg_start = j + 1
        return self.make(Kind.Other, items, "()", open_, close)

    def _param(self, first: int, last: int) -> Node:
        toks = self.toks[first : last + 1]
        if self.pattern and len(toks) == 1:
            if toks[0].text == "...":
                return self.make(Kind.Ellipsis, (), "...", first, last)
            if toks[0].kind == "metavar":
                return self.make(Kind.Metavar, (), toks[0].text, first, last)
        return self.make(Kind.Other, (), " ".join(t.text for t in toks), first, last)

    # -- statements ----------------------------------------------------

    def parse_block(self) -> Node:
        first = self.i
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.at_eof():
                raise ParseError("expected '}' before end of input", self.toks[first].span, "}")
            stmts.append(self.parse_statement())
        self.advance()
        return self.make(Kind.Block, stmts, "", first, self.i - 1)

    def _statement_or_other(self, parse) -> Node:
        start = self.i
        try:
            return parse()
        except RecursionError:
            raise ParseError("nesting too deep", self.here())
        except ParseError:
            if self.strict:
                raise
            self.i = start
            return self._recover(start)

    def _recover(self, start: int) -> Node:
        """Wrap the tokens up to the next depth-0 ';' (or block end) as an Other node."""
        j = start
        while j < len(self.toks):
            tok = self.toks[j]
            if tok.kind == "punct":
                if tok.text == ";":
                    break
                if tok.text in OPENERS:
                    close = self.matching(j)
                    if tok.text == "{" and j > start:
                        j = close
                        break
                    j = close
                elif tok.text in CLOSERS:
                    if tok.text == "}" and j > start:
                        j -= 1
                        break
                    raise ParseError(f"unbalanced {tok.text!r}", tok.span)
            j += 1
        else:
            raise ParseError("expected ';' before end of input", self.toks[start].span, ";")
        self.i = j + 1
        text = " ".join(t.text for t in self.toks[start : j + 1])
        return self.make(Kind.Other, (), text, start, j)

    def parse_statement(self) -> Node:
        return self._statement_or_other(self._statement)

    def _statement(self) -> Node:
        tok = self.peek()
        first = self.i
        if tok is None:
            raise self.error("expected a statement", "statement")
        if tok.kind == "directive":
            return self.leaf(Kind.Other)
        text = tok.text
        if tok.kind == "punct":
            if text == "{":
                return self.parse_block()
            if text == ";":
                return self.leaf(Kind.Other)
            if text == "..." and self.pattern:
                self.advance()
                if self.at(";"):
                    self.advance()
                return self.make(Kind.Ellipsis, (), "...", first, self.i - 1)
        if tok.kind == "keyword":
            if text == "if":
                self.advance()
                cond = self._paren_expr()
                then = self.parse_statement()
                children = [cond, then]
                if self.at("else"):
                    self.advance()
                    children.append(self.parse_statement())
                return self.make(Kind.If, children, "", first, self.i - 1)
            if text == "while":
                self.advance()
                cond = self._paren_expr()
                body = self.parse_statement()
                return self.make(Kind.While, (cond, body), "", first, self.i - 1)
            if text == "do":
                self.advance()
                body = self.parse_statement()
                self.expect("while")
                cond = self._paren_expr()
                self.expect(";")
                return self.make(Kind.Other, (body, cond), "do-while", first, self.i - 1)
            if text == "for":
                return self._for()
            if text == "return":
                self.advance()
                children = [] if self.at(";") else [self.parse_expression()]
                self.expect(";")
                return self.make(Kind.Return, children, "", first, self.i - 1)
            if text == "switch":
                self.advance()
                cond = self._paren_expr()
                body = self.parse_statement()
                return self.make(Kind.Other, (cond, body), "switch", first, self.i - 1)
            if text == "case":
                self.advance()
                value = self._conditional()
                self.expect(":")
                return self.make(Kind.Other, (value,), "case", first, self.i - 1)
            if text == "default":
                self.advance()
                self.expect(":")
                return self.make(Kind.Other, (), "default :", first, self.i - 1)
            if text in ("break", "continue"):
                self.advance()
                self.expect(";")
                return self.make(Kind.Other, (), f"{text} ;", first, self.i - 1)
            if text == "goto":
                self.advance()
                self.advance()
                self.expect(";")
                return self.make(Kind.Other, (), " ".join(t.text for t in self.toks[first : self.i]), first, self.i - 1)
        if tok.kind == "ident" and self.at(":", 1) and not self.at(":", 2):
            self.advance()
            self.advance()
            return self.make(Kind.Other, (), f"{text} :", first, self.i - 1)
        if self._is_declaration_start():
            return self.parse_declaration()
        expr = self.parse_expression()
        self.expect(";")
        return self.make(Kind.ExprStmt, (expr,), "", first, self.i - 1)

    def _paren_expr(self) -> Node:
        self.expect("(")
        expr = self.parse_expression()
        self.expect(")")
        return expr

    def _for(self) -> Node:
        first = self.i
        self.advance()
        self.expect("(")
        if self.at(";"):
            init = self.make(Kind.Other, (), "", self.i, self.i - 1)
            self.advance()
        elif self._is_declaration_start():
            init = self.parse_declaration()
        else:
            init = self.parse_expression()
            self.expect(";")
        if self.at(";"):
            cond = self.make(Kind.Other, (), "", self.i, self.i - 1)
        else:
            cond = self.parse_expression()
        self.expect(";")
        if self.at(")"):
            step = self.make(Kind.Other, (), "", self.i, self.i - 1)
        else:
            step = self.parse_expression()
        self.expect(")")
        body = self.parse_statement()
        return self.make(Kind.For, (init, cond, step, body), "", first, self.i - 1)

    # -- declarations ----------------------------------------------------

    def _is_type_start(self, tok: Token | None) -> bool:
        if tok is None:
            return False
        if tok.kind == "keyword":
            return tok.text in TYPE_KEYWORDS
        return tok.kind == "ident" and (tok.text in self.typedefs or _is_attribute(tok))

    def _is_declaration_start(self) -> bool:
        tok = self.peek()
        if self._is_type_start(tok):
            return True
        if tok is None or tok.kind not in ("ident", "metavar"):
            return False
        nxt = self.peek(1)
        if nxt is None:
            return False
        if nxt.kind in ("ident", "metavar"):
            return True
        if nxt.text == "*":
            k = 1
            while self.at("*", k):
                k += 1
            name = self.peek(k)
            after = self.peek(k + 1)
            return (
                name is not None
                and name.kind == "ident"
                and after is not None
                and after.text in ("=", ";", ",", "[")
            )
        return False

    def parse_declaration(self) -> Node:
        first = self.i
        spec_first = self.i
        extras = []
        seen_type = False
        while not self.at_eof():
            tok = self.peek()
            if _is_attribute(tok):
                a = self.skip_attribute()
                extras.append(self.make(Kind.Other, (), " ".join(t.text for t in self.toks[a : self.i]), a, self.i - 1))
                continue
            if tok.kind == "keyword" and tok.text in ("struct", "union", "enum"):
                self.advance()
                if self.peek() is not None and self.peek().kind == "ident":
                    self.advance()
                if self.at("{"):
                    self.i = self.matching(self.i) + 1
                seen_type = True
                continue
            if tok.kind == "keyword" and tok.text in TYPE_KEYWORDS:
                self.advance()
                if tok.text not in ("const", "volatile", "static", "extern", "register", "auto",
                                    "typedef", "inline", "restrict", "_Noreturn", "_Thread_local"):
                    seen_type = True
                continue
            if tok.kind in ("ident", "metavar") and not seen_type:
                self.advance()
                seen_type = True
                continue
            break
        type_text = _strip_attributes(self.toks[spec_first : self.i])
        declarators = list(extras)
        if not self.at(";"):
            while True:
                declarators.append(self._init_declarator())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(";")
        return self.make(Kind.DeclStmt, declarators, type_text, first, self.i - 1)

    def _init_declarator(self) -> Node:
        first = self.i
        decl = self._declarator()
        if self.at("="):
            self.advance()
            if self.at("{"):
                init = self._initializer_list()
            else:
                init = self._assignment()
            return self.make(Kind.Assign, (decl, init), "=", first, self.i - 1)
        return decl

    def _declarator(self) -> Node:
        first = self.i
        name = None
        extras = []
        while self.at("*") or (self.peek() is not None and self.peek().text in ("const", "volatile", "restrict")):
            self.advance()
        if self.at("("):
            # function pointer or parenthesised declarator
            close = self.matching(self.i)
            for j in range(self.i, close):
                if self.toks[j].kind in ("ident", "metavar") and name is None:
                    name = self.make(Kind.Identifier if self.toks[j].kind == "ident" else Kind.Metavar,
                                     (), self.toks[j].text, j, j)
            self.i = close + 1
        elif self.peek() is not None and self.peek().kind in ("ident", "metavar") and not _is_attribute(self.peek()):
            tok = self.advance()
            kind = Kind.Metavar if tok.kind == "metavar" else Kind.Identifier
            name = self.make(kind, (), tok.text, self.i - 1, self.i - 1)
        while not self.at_eof():
            if self.at("[") or self.at("("):
                self.i = self.matching(self.i) + 1
            elif _is_attribute(self.peek()):
                a = self.skip_attribute()
                extras.append(self.make(Kind.Other, (), " ".join(t.text for t in self.toks[a : self.i]), a, self.i - 1))
            else:
                break
        if name is None:
            raise self.error("expected declarator", expected="identifier")
        if self.i - first == 1:
            return name
        text = _strip_attributes(self.toks[first : self.i])
        return self.make(Kind.Other, [name, *extras], text, first, self.i - 1)

    def _initializer_list(self) -> Node:
        first = self.i
        close = self.matching(self.i)
        self.advance()
        items = []
        while self.i < close:
            if self.at(","):
                self.advance()
                continue
            if self.at("{"):
                items.append(self._initializer_list())
            elif self.at(".") or self.at("["):
                # designated initializer: keep the designator opaque
                start = self.i
                while self.i < close and not self.at("="):
                    if self.at("["):
                        self.i = self.matching(self.i) + 1
                    else:
                        self.advance()
                self.expect("=")
                value = self._initializer_list() if self.at("{") else self._assignment()
                items.append(self.make(Kind.Other, (value,), "designated", start, self.i - 1))
            else:
                items.append(self._assignment())
        self.i = close + 1
        return self.make(Kind.Other, items, "{}", first, close, expr=True)

    # -- expressions -----------------------------------------------------

    def parse_expression(self) -> Node:
        first = self.i
        left = self._assignment()
        while self.at(","):
            self.advance()
            right = self._assignment()
            left = self.make(Kind.BinaryOp, (left, right), ",", first, self.i - 1, expr=True)
        return left

    def _assignment(self) -> Node:
        first = self.i
        left = self._conditional()
        tok = self.peek()
        if tok is not None and tok.kind == "punct" and tok.text in ASSIGN_OPS:
            self.advance()
            right = self._assignment()
            return self.make(Kind.Assign, (left, right), tok.text, first, self.i - 1, expr=True)
        return left

    def _conditional(self) -> Node:
        first = self.i
        cond = self._binary(1)
        if self.at("?"):
            self.advance()
            a = self.parse_expression()
            self.expect(":")
            b = self._conditional()
            return self.make(Kind.Other, (cond, a, b), "?:", first, self.i - 1, expr=True)
        return cond

    def _binary(self, min_prec: int) -> Node:
        first = self.i
        left = self._unary()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "punct":
                return left
            prec = BINARY_PREC.get(tok.text)
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self._binary(prec + 1)
            left = self.make(Kind.BinaryOp, (left, right), tok.text, first, self.i - 1, expr=True)

    def _unary(self) -> Node:
        first = self.i
        tok = self.peek()
        if tok is None:
            raise self.error("expected expression", expected="expression")
        if tok.kind == "punct" and tok.text in PREFIX_OPS:
            self.advance()
            operand = self._unary()
            return self.make(Kind.UnaryOp, (operand,), tok.text, first, self.i - 1, expr=True)
        if tok.kind == "keyword" and tok.text in ("sizeof", "_Alignof"):
            self.advance()
            if self.at("(") and self._is_type_name(self.i + 1):
                close = self.matching(self.i)
                inner = self.make(Kind.Other, (), " ".join(t.text for t in self.toks[self.i + 1 : close]),
                                  self.i + 1, close - 1)
                self.i = close + 1
                return self.make(Kind.UnaryOp, (inner,), tok.text, first, self.i - 1, expr=True)
            operand = self._unary()
            return self.make(Kind.UnaryOp, (operand,), tok.text, first, self.i - 1, expr=True)
        if self.at("(") and self._is_type_name(self.i + 1):
            close = self.matching(self.i)
            type_text = " ".join(t.text for t in self.toks[self.i + 1 : close])
            self.i = close + 1
            if self.at("{"):
                init = self._initializer_list()
                return self.make(Kind.Other, (init,), f"( {type_text} )", first, self.i - 1, expr=True)
            operand = self._unary()
            return self.make(Kind.Other, (operand,), f"( {type_text} )", first, self.i - 1, expr=True)
        return self._postfix()

    def _is_type_name(self, j: int) -> bool:
        if j >= len(self.toks):
            return False
        tok = self.toks[j]
        if not self._is_type_start(tok):
            # `(name *)` and `(name **)` read as casts even for unknown typedef names
            if tok.kind != "ident":
                return False
            k = j + 1
            if k >= len(self.toks) or self.toks[k].text != "*":
                return False
            while k < len(self.toks) and self.toks[k].text == "*":
                k += 1
            return k < len(self.toks) and self.toks[k].text == ")"
        k = j
        while k < len(self.toks) and self.toks[k].text != ")":
            t = self.toks[k]
            if t.kind == "punct" and t.text not in ("*", "[", "]", "(", ")"):
                return False
            if t.kind in ("string", "char", "float"):
                return False
            k += 1
        return k < len(self.toks)

    def _postfix(self) -> Node:
        first = self.i
        node = self._primary()
        while True:
            if self.at("("):
                self.advance()
                args = []
                while not self.at(")"):
                    if self.pattern and self.at("...") and (self.at(",", 1) or self.at(")", 1)):
                        args.append(self.leaf(Kind.Ellipsis))
                    else:
                        args.append(self._assignment())
                    if self.at(","):
                        self.advance()
                    elif not self.at(")"):
                        raise self.error("expected ',' or ')' in argument list", expected=")")
                self.advance()
                node = self.make(Kind.Call, (node, *args), "", first, self.i - 1, expr=True)
            elif self.at("["):
                self.advance()
                index = self.parse_expression()
                self.expect("]")
                node = self.make(Kind.Index, (node, index), "", first, self.i - 1, expr=True)
            elif self.at(".") or self.at("->"):
                op = self.advance().text
                tok = self.peek()
                if tok is None or tok.kind not in ("ident", "metavar"):
                    raise self.error("expected member name", expected="identifier")
                field = self.leaf(Kind.Metavar if tok.kind == "metavar" else Kind.Identifier)
                node = self.make(Kind.Member, (node, field), op, first, self.i - 1, expr=True)
            elif self.at("++") or self.at("--"):
                op = self.advance().text
                node = self.make(Kind.UnaryOp, (node,), "post" + op, first, self.i - 1, expr=True)
            else:
                return node

    def _primary(self) -> Node:
        tok = self.peek()
        if tok is None:
            raise self.error("expected expression", expected="expression")
        if tok.kind == "ident":
            if _is_attribute(tok):
                first = self.skip_attribute()
                return self.make(Kind.Other, (), " ".join(t.text for t in self.toks[first : self.i]),
                                 first, self.i - 1, expr=True)
            return self.leaf(Kind.Identifier, expr=True)
        if tok.kind == "int":
            return self.leaf(Kind.IntLiteral, expr=True)
        if tok.kind in ("float", "char"):
            return self.leaf(Kind.Other, expr=True)
        if tok.kind == "string":
            first = self.i
            while self.peek() is not None and self.peek().kind == "string":
                self.advance()
            text = " ".join(t.text for t in self.toks[first : self.i])
            return self.make(Kind.StringLiteral, (), text, first, self.i - 1, expr=True)
        if tok.kind == "metavar":
            return self.leaf(Kind.Metavar, expr=True)
        if self.pattern and self.at("..."):
            return self.leaf(Kind.Ellipsis, expr=True)
        if self.at("("):
            self.advance()
            if self.at("{"):
                # GNU statement expression
                first = self.i - 1
                block = self.parse_block()
                self.expect(")")
                return self.make(Kind.Other, (block,), "({})", first, self.i - 1, expr=True)
            inner = self.parse_expression()
            self.expect(")")
            return inner
        raise self.error("expected expression", expected="expression")


def _strip_attributes(toks: list[Token]) -> str:
    out = []
    j = 0
    while j < len(toks):
        if _is_attribute(toks[j]):
            j += 1
            depth = 0
            while j < len(toks) and (depth > 0 or toks[j].text == "("):
                if toks[j].text == "(":
                    depth += 1
                elif toks[j].text == ")":
                    depth -= 1
                j += 1
            continue
        out.append(toks[j].text)
        j += 1
    return " ".join(out)


def _scan_typedefs(tokens: list[Token]) -> set[str]:
    names = set()
    j = 0
    n = len(tokens)
    while j < n:
        if tokens[j].kind == "keyword" and tokens[j].text == "typedef":
            depth = 0
            last_ident = None
            fnptr = None
            k = j + 1
            while k < n:
                t = tokens[k]
                if t.kind == "punct":
                    if t.text in "({[":
                        if t.text == "(" and k + 2 < n and tokens[k + 1].text == "*" and tokens[k + 2].kind == "ident":
                            fnptr = fnptr or tokens[k + 2].text
                        depth += 1
                    elif t.text in ")}]":
                        depth -= 1
                    elif t.text in ";," and depth <= 0:
                        name = fnptr or last_ident
                        if name:
                            names.add(name)
                        last_ident = fnptr = None
                        if t.text == ";":
                            break
                elif t.kind == "ident" and depth == 0:
                    last_ident = t.text
                k += 1
            j = k
        j += 1
    return names


def parse(tokens: list[Token], file: str = "<input>") -> Node:
    """Build a TranslationUnit from ``tokens``; raises :class:`ParseError`."""
    parser = Parser(tokens, file)
    try:
        return parser.parse_translation_unit()
    except RecursionError:
        raise ParseError("nesting too deep", parser.here()) from None


def parse_source(source: str, file: str = "<input>") -> Node:
    return parse(tokenize(source, file), file)


def find_functions(ast: Node, name: str) -> list[Node]:
    """Definitions of ``name`` among the top-level items, in source order."""
    return [n for n in ast.children if n.kind is Kind.FunctionDef and n.name == name]


def parse_fragment(tokens: list[Token]) -> tuple[str, list[Node]]:
    """Parse a pattern snippet.

    Returns ``("function", [FunctionDef])``, ``("expr", [node])`` or
    ``("seq", statements)``.  Errors propagate as :class:`ParseError`.
    """
    if not tokens:
        raise ParseError("empty pattern", Span("<pattern>", 1, 1, 1, 1), "pattern")
    if len(tokens) == 1 and tokens[0].text == "...":
        return "seq", [Parser(tokens, pattern=True).make(Kind.Ellipsis, (), "...", 0, 0)]

    p = Parser(tokens, pattern=True, strict=True)
    try:
        end, brace = p._header_extent(0)
    except ParseError:
        brace = None
    if brace is not None:
        try:
            fn = p._try_function(0, brace)
        except RecursionError:
            raise ParseError("nesting too deep", p.here()) from None
        if fn is not None and p.at_eof():
            return "function", [fn]

    p = Parser(tokens, pattern=True, strict=True)
    try:
        expr = p.parse_expression()
        if p.at_eof():
            return "expr", [expr]
    except ParseError:
        pass
    except RecursionError:
        raise ParseError("nesting too deep", p.here()) from None

    p = Parser(tokens, pattern=True, strict=True)
    stmts = []
    try:
        while not p.at_eof():
            stmts.append(p.parse_statement())
    except RecursionError:
        raise ParseError("nesting too deep", p.here()) from None
    return "seq", stmts
