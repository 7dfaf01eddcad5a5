"""Labeled snippet corpora in JSON-lines form.

Each line is {"id": str, "code": str, "label": int, "split": "train"|"test"}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import DatasetError

SPLITS = ("train", "test")


@dataclass(frozen=True)
class LabeledSnippet:
    id: str
    code: str
    label: int
    split: str


def load_dataset(path: str | Path) -> list[LabeledSnippet]:
    """Read a JSONL corpus, validating every row.

    DatasetError carries the 1-based line number of the first bad row.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    snippets: list[LabeledSnippet] = []
    seen_ids: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"invalid JSON: {exc.msg}", lineno) from exc
        if not isinstance(row, dict):
            raise DatasetError("row is not an object", lineno)
        snippet_id = row.get("id")
        code = row.get("code")
        label = row.get("label")
        split = row.get("split")
        if not isinstance(snippet_id, str) or not snippet_id:
            raise DatasetError("missing or empty 'id'", lineno)
        if snippet_id in seen_ids:
            raise DatasetError(f"duplicate id {snippet_id!r}", lineno)
        if not isinstance(code, str) or not code:
            raise DatasetError("missing or empty 'code'", lineno)
        if not isinstance(label, int) or isinstance(label, bool) or label < 0:
            raise DatasetError("'label' must be a non-negative integer", lineno)
        if split not in SPLITS:
            raise DatasetError("'split' must be 'train' or 'test'", lineno)
        seen_ids.add(snippet_id)
        snippets.append(LabeledSnippet(snippet_id, code, label, split))
    return snippets


def save_dataset(path: str | Path, snippets: Iterable[LabeledSnippet]) -> None:
    lines = [
        json.dumps(
            {"id": s.id, "code": s.code, "label": s.label, "split": s.split},
            sort_keys=True,
        )
        for s in snippets
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def num_classes(snippets: Iterable[LabeledSnippet]) -> int:
    labels = {s.label for s in snippets}
    if not labels:
        raise DatasetError("empty corpus")
    return max(labels) + 1


def split_corpus(
    snippets: Iterable[LabeledSnippet],
) -> tuple[list[LabeledSnippet], list[LabeledSnippet]]:
    train = [s for s in snippets if s.split == "train"]
    test = [s for s in snippets if s.split == "test"]
    return train, test
