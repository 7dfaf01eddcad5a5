"""Lossless tokenizer for the C-like subset.

Whitespace and comments are ordinary tokens, so concatenating the text of
every token reproduces the input byte for byte.  The only lexical errors are
unterminated string and char literals; everything else becomes some token.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ParseError

KEYWORD = "keyword"
IDENTIFIER = "identifier"
INTEGER = "integer-literal"
FLOAT = "float-literal"
CHAR = "char-literal"
STRING = "string-literal"
OPERATOR = "operator"
PUNCTUATION = "punctuation"
COMMENT = "comment"
WHITESPACE = "whitespace"

C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile
    while""".split()
)

TYPE_KEYWORDS = frozenset(
    {"char", "const", "double", "float", "int", "long", "short", "signed", "unsigned", "void"}
)

_OPERATORS_3 = ("<<=", ">>=")
_OPERATORS_2 = (
    "++", "--", "->", "<=", ">=", "==", "!=", "&&", "||",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
)
_OPERATORS_1 = set("+-*/%<>=!&|^~?:.#")
_PUNCTUATION = set("(){}[];,")

_WS = set(" \t\r\n\f\v")
_DIGITS = set("0123456789")
_HEX_DIGITS = set("0123456789abcdefABCDEF")
_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | _DIGITS
_INT_SUFFIX = set("uUlL")


@dataclass(frozen=True)
class Token:
    """One lexical unit.  Position is informational and ignored by equality."""

    kind: str
    text: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


def tokenize(source: str) -> list[Token]:
    """Split source into tokens whose texts concatenate back to source."""
    tokens: list[Token] = []
    pos = 0
    line = 1
    column = 1
    n = len(source)

    def emit(kind: str, end: int) -> None:
        nonlocal pos, line, column
        text = source[pos:end]
        tokens.append(Token(kind, text, line, column))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            column = len(text) - text.rfind("\n")
        else:
            column += len(text)
        pos = end

    while pos < n:
        ch = source[pos]

        if ch in _WS:
            end = pos + 1
            while end < n and source[end] in _WS:
                end += 1
            emit(WHITESPACE, end)
            continue

        if ch == "/" and pos + 1 < n and source[pos + 1] == "/":
            end = source.find("\n", pos)
            emit(COMMENT, n if end < 0 else end)
            continue

        if ch == "/" and pos + 1 < n and source[pos + 1] == "*":
            end = source.find("*/", pos + 2)
            emit(COMMENT, n if end < 0 else end + 2)
            continue

        if ch in _IDENT_START:
            end = pos + 1
            while end < n and source[end] in _IDENT_CONT:
                end += 1
            word = source[pos:end]
            emit(KEYWORD if word in C_KEYWORDS else IDENTIFIER, end)
            continue

        if ch in _DIGITS or (ch == "." and pos + 1 < n and source[pos + 1] in _DIGITS):
            emit(*_scan_number(source, pos))
            continue

        if ch == '"' or ch == "'":
            emit(*_scan_quoted(source, pos, line, column))
            continue

        three = source[pos : pos + 3]
        if three in _OPERATORS_3:
            emit(OPERATOR, pos + 3)
            continue
        two = source[pos : pos + 2]
        if two in _OPERATORS_2:
            emit(OPERATOR, pos + 2)
            continue
        if ch in _PUNCTUATION:
            emit(PUNCTUATION, pos + 1)
            continue
        # Any other byte becomes a one-character operator token so the
        # stream stays lossless.
        emit(OPERATOR, pos + 1)

    return tokens


def _scan_number(source: str, pos: int) -> tuple[str, int]:
    n = len(source)
    end = pos
    is_float = False

    if source.startswith(("0x", "0X"), pos):
        end = pos + 2
        while end < n and source[end] in _HEX_DIGITS:
            end += 1
        while end < n and source[end] in _INT_SUFFIX:
            end += 1
        return INTEGER, end

    while end < n and source[end] in _DIGITS:
        end += 1
    if end < n and source[end] == ".":
        is_float = True
        end += 1
        while end < n and source[end] in _DIGITS:
            end += 1
    if end < n and source[end] in "eE":
        look = end + 1
        if look < n and source[look] in "+-":
            look += 1
        if look < n and source[look] in _DIGITS:
            is_float = True
            end = look + 1
            while end < n and source[end] in _DIGITS:
                end += 1
    if is_float:
        if end < n and source[end] in "fFlL":
            end += 1
        return FLOAT, end
    while end < n and source[end] in _INT_SUFFIX:
        end += 1
    return INTEGER, end


def _scan_quoted(source: str, pos: int, line: int, column: int) -> tuple[str, int]:
    quote = source[pos]
    kind = STRING if quote == '"' else CHAR
    n = len(source)
    end = pos + 1
    while end < n:
        ch = source[end]
        if ch == "\\" and end + 1 < n:
            end += 2
            continue
        if ch == quote:
            return kind, end + 1
        if ch == "\n":
            break
        end += 1
    name = "string" if kind == STRING else "char"
    raise ParseError(f"unterminated {name} literal at line {line}, column {column}")
