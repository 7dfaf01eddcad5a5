"""Deterministic embeddings for snippets and identifiers.

The builtin snippet backend hashes token n-grams (n in {1,2,3}) into a
fixed-dimension count vector and L2-normalizes it.  The builtin identifier
backend hashes character n-grams (n in {3,4,5}) plus a whole-word bucket, so
related names like len/length share subword mass.  Buckets come from 64-bit
FNV-1a reduced modulo the dimension; no randomness anywhere, so embeddings
are reproducible across processes.

Alternative backends: a word2vec-text-format file for identifiers (with the
char-n-gram fallback for out-of-vocabulary names) and an HTTP service
speaking POST /embed {"texts": [...]} -> {"vectors": [[...], ...]}.
"""

from __future__ import annotations

import math
import time
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .errors import DimensionMismatch, MalformedVectorFile, ProviderUnavailable

SNIPPET_DIMENSION = 512
IDENTIFIER_DIMENSION = 128

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; either vector being all-zero yields 0.0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare shapes {a.shape} and {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def _bucket(gram: str, dimension: int) -> int:
    # Fold the high bits in before reducing: the raw low bits of FNV-1a
    # cluster badly for short inputs at small dimensions.
    h = fnv1a64(gram.encode("utf-8"))
    return (h ^ (h >> 32) ^ (h >> 16) ^ (h >> 8)) % dimension


def _hashed_counts(grams: Sequence[str], dimension: int,
                   scale: str = "linear") -> np.ndarray:
    vec = np.zeros(dimension, dtype=np.float64)
    for gram in grams:
        vec[_bucket(gram, dimension)] += 1.0
    if scale == "log":
        vec = np.log1p(vec)
    return _normalize(vec)


class HashedNgramProvider:
    """Builtin hashing backend; works for both snippets and identifiers."""

    kind = "builtin-ngram"

    def __init__(
        self,
        dimension: int = SNIPPET_DIMENSION,
        token_ngrams: tuple[int, ...] = (1, 2, 3),
        char_ngrams: tuple[int, ...] = (3, 4, 5),
        scale: str = "linear",
    ):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        if scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        self.dimension = dimension
        self.token_ngrams = token_ngrams
        self.char_ngrams = char_ngrams
        self.scale = scale

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        grams: list[str] = []
        for n in self.token_ngrams:
            if n == 1:
                grams.extend(tokens)
            else:
                for i in range(len(tokens) - n + 1):
                    grams.append("\x1f".join(tokens[i : i + n]))
        return _hashed_counts(grams, self.dimension, self.scale)

    def embed_identifier(self, name: str) -> np.ndarray:
        if not name:
            raise ValueError("empty identifier")
        # Boundary markers give short names several grams instead of one,
        # which keeps full hash collisions between distinct names unlikely.
        padded = f"\x02{name}\x03"
        grams = [padded]  # whole-word bucket
        for n in self.char_ngrams:
            for i in range(len(padded) - n + 1):
                grams.append(padded[i : i + n])
        return _hashed_counts(grams, self.dimension)


class PretrainedVectorProvider:
    """Identifier vectors from a word2vec-text-format file.

    Names missing from the file fall back to the builtin character-n-gram
    embedding at the file's dimension.
    """

    kind = "pretrained-file"

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.vectors, self.dimension = _load_word2vec_text(self.path)
        self._fallback = HashedNgramProvider(dimension=self.dimension)

    def embed_identifier(self, name: str) -> np.ndarray:
        if not name:
            raise ValueError("empty identifier")
        vec = self.vectors.get(name)
        if vec is not None:
            return vec
        return self._fallback.embed_identifier(name)


class HttpEmbeddingProvider:
    """External embedding service over HTTP POST /embed."""

    kind = "external-service"

    def __init__(
        self,
        url: str,
        dimension: int,
        retries: int = 2,
        timeout: float = 10.0,
        batch_size: int = 32,
        session: requests.Session | None = None,
    ):
        self.url = url.rstrip("/")
        self.dimension = dimension
        self.retries = retries
        self.timeout = timeout
        self.batch_size = batch_size
        self._session = session or requests.Session()

    def embed_texts(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            out.extend(self._post(list(texts[start : start + self.batch_size])))
        return out

    def embed_tokens(self, tokens: Sequence[str]) -> np.ndarray:
        return self.embed_texts([" ".join(tokens)])[0]

    def embed_identifier(self, name: str) -> np.ndarray:
        if not name:
            raise ValueError("empty identifier")
        return self.embed_texts([name])[0]

    def _post(self, texts: list[str]) -> list[np.ndarray]:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(
                    f"{self.url}/embed", json={"texts": texts}, timeout=self.timeout
                )
                if resp.status_code != 200:
                    raise ProviderUnavailable(f"embed service returned {resp.status_code}")
                payload = resp.json()
                vectors = payload.get("vectors")
                if not isinstance(vectors, list) or len(vectors) != len(texts):
                    raise ProviderUnavailable("embed service returned wrong vector count")
                out = []
                for row in vectors:
                    vec = np.asarray(row, dtype=np.float64)
                    if vec.shape != (self.dimension,) or not np.all(np.isfinite(vec)):
                        raise ProviderUnavailable("embed service vector violates contract")
                    out.append(vec)
                return out
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.05 * (attempt + 1))
        raise ProviderUnavailable(f"embed service unreachable: {last_error}")


def embed_snippet(tokens: Sequence[str], provider) -> np.ndarray:
    """Embed a masked token stream with the given provider."""
    vec = provider.embed_tokens(tokens)
    if vec.shape != (provider.dimension,):
        raise DimensionMismatch(
            f"provider produced shape {vec.shape}, declared {provider.dimension}"
        )
    return vec


def embed_identifier(name: str, provider) -> np.ndarray:
    """Embed a single identifier name with the given provider."""
    vec = provider.embed_identifier(name)
    if vec.shape != (provider.dimension,):
        raise DimensionMismatch(
            f"provider produced shape {vec.shape}, declared {provider.dimension}"
        )
    return vec


def _load_word2vec_text(path: Path) -> tuple[dict[str, np.ndarray], int]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise MalformedVectorFile(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise MalformedVectorFile("empty vector file")
    header = lines[0].split()
    if len(header) != 2:
        raise MalformedVectorFile("header must be '<count> <dimension>'")
    try:
        count, dimension = int(header[0]), int(header[1])
    except ValueError as exc:
        raise MalformedVectorFile("header must be '<count> <dimension>'") from exc
    if count < 0 or dimension < 1:
        raise MalformedVectorFile("header values out of range")
    body = [line for line in lines[1:] if line.strip()]
    if len(body) != count:
        raise MalformedVectorFile(f"header claims {count} rows, file has {len(body)}")
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(body, start=2):
        fields = line.split()
        if len(fields) != dimension + 1:
            raise MalformedVectorFile(f"line {lineno}: expected {dimension + 1} fields")
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise MalformedVectorFile(f"line {lineno}: non-numeric component") from exc
        if not np.all(np.isfinite(vec)):
            raise MalformedVectorFile(f"line {lineno}: non-finite component")
        vectors[fields[0]] = vec
    return vectors, dimension


def mean_cosine(vec: np.ndarray, others: Sequence[np.ndarray]) -> float:
    if not others:
        return 0.0
    return float(math.fsum(cosine(vec, o) for o in others) / len(others))
