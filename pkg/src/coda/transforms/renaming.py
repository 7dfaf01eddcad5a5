"""Identifier renaming guided by embedding similarity.

Pairs every user identifier of the current code with every reference
identifier absent from it, ranked by embedding cosine.  Renames are applied
one pair at a time; a pair whose source is already consumed or whose
replacement is already present is skipped without touching the model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..embedding import cosine, embed_identifier
from ..errors import ParseError
from ..minicode.identifiers import (
    DEFAULT_ALLOWLIST,
    all_identifier_texts,
    collect_identifiers,
    identifier_occurs,
    rename_identifier,
)
from ..minicode.lexer import C_KEYWORDS
from ..minicode.nodes import SourceUnit
from ..minicode.parser import parse

SKIP_DUPLICATE = "duplicate"
SKIP_MISSING_SOURCE = "missing-source"
SKIP_RESERVED = "reserved"


@dataclass(frozen=True)
class RenamePair:
    source: str
    replacement: str
    similarity: float


@dataclass(frozen=True)
class RenamePlan:
    pairs: tuple[RenamePair, ...]
    cursor: int = 0


@dataclass(frozen=True)
class RenameOutcome:
    unit: SourceUnit | None
    skipped: str | None

    @property
    def applied(self) -> bool:
        return self.unit is not None


def snippet_identifiers(code: str) -> list[str]:
    """User identifiers of a source string; empty when unreadable."""
    try:
        return collect_identifiers(parse(code))
    except ParseError:
        return []


def build_rename_plan(
    current: SourceUnit,
    reference_codes: Sequence[str],
    provider,
    vector_cache: dict | None = None,
) -> RenamePlan:
    """All (target identifier, absent reference identifier) pairs, ranked.

    Order is similarity descending, ties by (source, replacement)
    lexicographic, so plans are total orders independent of dict layout.
    """
    sources = collect_identifiers(current)
    present = all_identifier_texts(current)
    candidates: set[str] = set()
    for code in reference_codes:
        candidates.update(snippet_identifiers(code))
    replacements = sorted(candidates - present)
    if not sources or not replacements:
        return RenamePlan(())
    vectors = vector_cache if vector_cache is not None else {}
    for name in set(sources) | set(replacements):
        if name not in vectors:
            vectors[name] = embed_identifier(name, provider)
    pairs = [
        RenamePair(src, rep, cosine(vectors[src], vectors[rep]))
        for src in sources
        for rep in replacements
    ]
    pairs.sort(key=lambda p: (-p.similarity, p.source, p.replacement))
    return RenamePlan(tuple(pairs))


def apply_rename(
    current: SourceUnit,
    source: str,
    replacement: str,
    allowlist: frozenset[str] = DEFAULT_ALLOWLIST,
) -> RenameOutcome:
    """Rename source to replacement everywhere, or report why not.

    Token-level replacement keeps declarations, uses, and opaque regions
    consistent; the result is re-parsed so downstream passes get a tree.
    """
    if replacement in C_KEYWORDS or replacement in allowlist:
        return RenameOutcome(None, SKIP_RESERVED)
    if replacement == source or identifier_occurs(current, replacement):
        return RenameOutcome(None, SKIP_DUPLICATE)
    if not identifier_occurs(current, source):
        return RenameOutcome(None, SKIP_MISSING_SOURCE)
    return RenameOutcome(rename_identifier(current, source, replacement), None)
