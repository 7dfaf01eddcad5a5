"""Stable seed derivation.

Python's builtin hash() is salted per process, so every derived seed in the
pipeline goes through SHA-256 instead.  Identical inputs give identical seeds
across runs, platforms, and processes.
"""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Collapse an arbitrary tuple of values into a 63-bit RNG seed."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)
