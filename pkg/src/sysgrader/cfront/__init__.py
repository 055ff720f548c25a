"""Spanned lexer and parser for the C subset found in exercise templates."""
from .lexer import (
    CSyntaxError,
    LexError,
    Span,
    Token,
    UnterminatedComment,
    UnterminatedString,
    tokenize,
)
from .nodes import Kind, Node
from .parser import ParseError, find_functions, parse, parse_fragment, parse_source

__all__ = [
    "CSyntaxError",
    "Kind",
    "LexError",
    "Node",
    "ParseError",
    "Span",
    "Token",
    "UnterminatedComment",
    "UnterminatedString",
    "find_functions",
    "parse",
    "parse_fragment",
    "parse_source",
    "tokenize",
]
