"""Identifier utilities: collection, masking, and token-level renaming.

Identifier classification is purely lexical: a token is a user-defined
identifier when its kind is identifier and its text is not on the builtin
allowlist.  Working on the printed token stream keeps structured code and
Opaque regions on one code path and makes masking invariant under renaming.
"""

from __future__ import annotations

from typing import Sequence

from .lexer import COMMENT, IDENTIFIER, WHITESPACE, Token, tokenize
from .nodes import SourceUnit
from .parser import parse
from .printer import print_source

DEFAULT_ALLOWLIST = frozenset(
    {
        "main",
        "printf",
        "scanf",
        "puts",
        "gets",
        "getchar",
        "putchar",
        "malloc",
        "calloc",
        "realloc",
        "free",
        "strlen",
        "strcpy",
        "strncpy",
        "strcmp",
        "strcat",
        "memset",
        "memcpy",
        "abs",
        "exit",
        # Intrinsics understood by the mini interpreter.
        "read",
        "emit",
    }
)


def unit_tokens(unit: SourceUnit) -> list[Token]:
    """All tokens of the unit's printed form, including whitespace."""
    return tokenize(print_source(unit))


def collect_identifiers(
    unit: SourceUnit, allowlist: frozenset[str] = DEFAULT_ALLOWLIST
) -> list[str]:
    """User-defined identifiers in first-occurrence order, deduplicated.

    Identifiers inside Opaque regions are included via the token-kind scan.
    """
    seen: set[str] = set()
    ordered: list[str] = []
    for tok in unit_tokens(unit):
        if tok.kind == IDENTIFIER and tok.text not in allowlist and tok.text not in seen:
            seen.add(tok.text)
            ordered.append(tok.text)
    return ordered


def mask_identifiers(
    unit: SourceUnit,
    placeholder: str = "<unk>",
    allowlist: frozenset[str] = DEFAULT_ALLOWLIST,
) -> list[str]:
    """Significant token texts with user identifiers replaced by placeholder."""
    out: list[str] = []
    for tok in unit_tokens(unit):
        if tok.kind in (WHITESPACE, COMMENT):
            continue
        if tok.kind == IDENTIFIER and tok.text not in allowlist:
            out.append(placeholder)
        else:
            out.append(tok.text)
    return out


def masked_token_texts(code: str, placeholder: str = "<unk>") -> list[str]:
    """Identifier-masked significant tokens of a source string.

    Falls back to whitespace splitting when the code cannot be parsed, so
    arbitrary corpus snippets always embed to something.
    """
    from ..errors import ParseError

    try:
        unit = parse(code)
    except ParseError:
        return code.split()
    return mask_identifiers(unit, placeholder)


def identifier_occurs(unit: SourceUnit, name: str) -> bool:
    """True when name appears as an identifier token anywhere in the unit."""
    return any(t.kind == IDENTIFIER and t.text == name for t in unit_tokens(unit))


def all_identifier_texts(unit: SourceUnit) -> set[str]:
    return {t.text for t in unit_tokens(unit) if t.kind == IDENTIFIER}


def rename_identifier(unit: SourceUnit, old: str, new: str) -> SourceUnit:
    """Replace every identifier token old with new and re-parse.

    Purely token-level, so declaration sites, uses, and Opaque regions all
    rename consistently.
    """
    pieces = [
        new if (tok.kind == IDENTIFIER and tok.text == old) else tok.text
        for tok in unit_tokens(unit)
    ]
    return parse("".join(pieces))


def count_identifier(tokens: Sequence[Token], name: str) -> int:
    return sum(1 for t in tokens if t.kind == IDENTIFIER and t.text == name)
