"""Victim model access: prediction vectors, backends, caching, accounting.

Every snippet prediction flows through ModelClient, which deduplicates by
exact code string, persists to an optional on-disk cache, and charges
invocations to the target being attacked (or to campaign setup when no
target is given).  Backends: an in-process nearest-centroid surrogate, an
HTTP service (POST /predict {"snippets": [...]} -> {"probabilities":
[[...], ...]}), and a line-delimited JSON subprocess speaking the same
request/response objects over stdio.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .embedding import HashedNgramProvider
from .errors import MalformedResponse, MissingClass, ModelUnavailable
from .dataset import LabeledSnippet
from .minicode.lexer import COMMENT, WHITESPACE, tokenize

_PROB_SUM_TOLERANCE = 1e-6
SURROGATE_DIMENSION = 512
SURROGATE_TEMPERATURE = 0.05


@dataclass(frozen=True)
class PredictionVector:
    """Class probabilities; validated on construction."""

    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.probs) < 1:
            raise MalformedResponse("empty probability vector")
        total = 0.0
        for p in self.probs:
            if not isinstance(p, (int, float)) or not (-1e-9 <= p <= 1.0 + 1e-9):
                raise MalformedResponse(f"probability out of range: {p!r}")
            total += p
        if abs(total - 1.0) > _PROB_SUM_TOLERANCE:
            raise MalformedResponse(f"probabilities sum to {total}, expected 1")

    def argmax(self) -> int:
        """Predicted class; ties break toward the lower index."""
        best = 0
        for i in range(1, len(self.probs)):
            if self.probs[i] > self.probs[best]:
                best = i
        return best

    def confidence(self, label: int) -> float:
        return self.probs[label]

    def __len__(self) -> int:
        return len(self.probs)


def _code_tokens(code: str) -> list[str]:
    try:
        return [
            t.text for t in tokenize(code) if t.kind not in (WHITESPACE, COMMENT)
        ]
    except Exception:
        return code.split()


class SurrogateModel:
    """Nearest-centroid classifier over hashed token-frequency vectors."""

    def __init__(self, centroids: np.ndarray, temperature: float, dimension: int):
        self.centroids = centroids
        self.temperature = temperature
        self.dimension = dimension
        self._provider = HashedNgramProvider(dimension=dimension, token_ngrams=(1,))

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]

    def vectorize(self, code: str) -> np.ndarray:
        return self._provider.embed_tokens(_code_tokens(code))

    def predict_one(self, code: str) -> PredictionVector:
        vec = self.vectorize(code)
        distances = np.linalg.norm(self.centroids - vec, axis=1)
        scores = -distances / self.temperature
        scores -= scores.max()
        weights = np.exp(scores)
        probs = weights / weights.sum()
        return PredictionVector(tuple(float(p) for p in probs))

    def predict(self, codes: Sequence[str]) -> list[PredictionVector]:
        return [self.predict_one(c) for c in codes]


def train_surrogate(
    corpus: Sequence[LabeledSnippet],
    num_classes: int,
    dimension: int = SURROGATE_DIMENSION,
    temperature: float = SURROGATE_TEMPERATURE,
) -> SurrogateModel:
    """Per-class mean of normalized token-frequency vectors.

    Deterministic: no initialization randomness, order-independent sums.
    """
    if num_classes < 2:
        raise MissingClass("need at least two classes")
    provider = HashedNgramProvider(dimension=dimension, token_ngrams=(1,), scale="log")
    sums = np.zeros((num_classes, dimension), dtype=np.float64)
    counts = np.zeros(num_classes, dtype=np.int64)
    for snippet in corpus:
        if snippet.label >= num_classes:
            raise MissingClass(
                f"label {snippet.label} out of range for {num_classes} classes"
            )
        sums[snippet.label] += provider.embed_tokens(_code_tokens(snippet.code))
        counts[snippet.label] += 1
    missing = [c for c in range(num_classes) if counts[c] == 0]
    if missing:
        raise MissingClass(f"no training snippets for classes {missing}")
    centroids = sums / counts[:, None]
    return SurrogateModel(centroids, temperature, dimension)


class SurrogateBackend:
    """In-process backend wrapping a trained surrogate."""

    kind = "builtin-surrogate"

    def __init__(self, model: SurrogateModel):
        self.model = model

    def predict_batch(self, codes: list[str]) -> list[list[float]]:
        return [list(pv.probs) for pv in self.model.predict(codes)]

    def close(self) -> None:
        pass


class HttpModelBackend:
    """HTTP victim service."""

    kind = "http"

    def __init__(
        self,
        url: str,
        retries: int = 2,
        timeout: float = 30.0,
        batch_size: int = 32,
        session: requests.Session | None = None,
    ):
        self.url = url.rstrip("/")
        self.retries = retries
        self.timeout = timeout
        self.batch_size = batch_size
        self._session = session or requests.Session()

    def predict_batch(self, codes: list[str]) -> list[list[float]]:
        out: list[list[float]] = []
        for start in range(0, len(codes), self.batch_size):
            out.extend(self._post(codes[start : start + self.batch_size]))
        return out

    def _post(self, codes: list[str]) -> list[list[float]]:
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(
                    f"{self.url}/predict",
                    json={"snippets": codes},
                    timeout=self.timeout,
                )
                if resp.status_code != 200:
                    raise ModelUnavailable(f"model service returned {resp.status_code}")
                try:
                    payload = resp.json()
                except ValueError as exc:
                    raise MalformedResponse(f"non-JSON response: {exc}") from exc
                return _extract_probabilities(payload, len(codes))
            except (requests.RequestException, ModelUnavailable) as exc:
                last_error = exc
                if attempt < self.retries:
                    time.sleep(0.05 * (attempt + 1))
        raise ModelUnavailable(f"model service unreachable: {last_error}")

    def close(self) -> None:
        self._session.close()


class StdioModelBackend:
    """Victim model subprocess speaking one JSON object per line."""

    kind = "stdio"

    def __init__(self, command: str | Sequence[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ModelUnavailable(f"cannot start model process: {exc}") from exc
        self._lock = threading.Lock()

    def predict_batch(self, codes: list[str]) -> list[list[float]]:
        request = json.dumps({"snippets": codes}) + "\n"
        with self._lock:
            if self._proc.poll() is not None:
                raise ModelUnavailable("model process exited")
            try:
                self._proc.stdin.write(request)
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (OSError, ValueError) as exc:
                raise ModelUnavailable(f"model process pipe failed: {exc}") from exc
        if not line:
            raise ModelUnavailable("model process closed its output")
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"non-JSON response line: {exc.msg}") from exc
        return _extract_probabilities(payload, len(codes))

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


def _extract_probabilities(payload: object, expected: int) -> list[list[float]]:
    if not isinstance(payload, dict) or "probabilities" not in payload:
        raise MalformedResponse("response lacks 'probabilities'")
    rows = payload["probabilities"]
    if not isinstance(rows, list) or len(rows) != expected:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise MalformedResponse(f"expected {expected} probability rows, got {got}")
    return rows


class InvocationCounter:
    """Model invocation accounting, per target plus campaign setup."""

    def __init__(self):
        self.per_target: dict[str, int] = {}
        self.setup_count = 0
        self._lock = threading.Lock()

    def record(self, target_id: str | None, count: int) -> None:
        if count == 0:
            return
        with self._lock:
            if target_id is None:
                self.setup_count += count
            else:
                self.per_target[target_id] = self.per_target.get(target_id, 0) + count

    def target_total(self, target_id: str) -> int:
        return self.per_target.get(target_id, 0)

    @property
    def campaign_total(self) -> int:
        return sum(self.per_target.values()) + self.setup_count


def _content_key(code: str) -> str:
    return hashlib.sha256(code.encode("utf-8")).hexdigest()


class ModelClient:
    """Caching, counting front door for every model backend."""

    def __init__(
        self,
        backend,
        cache_dir: str | Path | None = None,
        expect_classes: int | None = None,
    ):
        self.backend = backend
        self.counter = InvocationCounter()
        self.expect_classes = expect_classes
        self._memory: dict[str, PredictionVector] = {}
        self._disk: dict[str, PredictionVector] = {}
        self._lock = threading.Lock()
        self._cache_path: Path | None = None
        if cache_dir is not None:
            cache_dir = Path(cache_dir)
            cache_dir.mkdir(parents=True, exist_ok=True)
            self._cache_path = cache_dir / "predictions.jsonl"
            self._load_disk_cache()

    def _load_disk_cache(self) -> None:
        if self._cache_path is None or not self._cache_path.exists():
            return
        for line in self._cache_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                self._disk[row["id"]] = PredictionVector(tuple(float(p) for p in row["probs"]))
            except (json.JSONDecodeError, KeyError, TypeError, MalformedResponse):
                continue  # a corrupt cache row is ignorable, not fatal

    def _append_disk(self, key: str, pv: PredictionVector) -> None:
        if self._cache_path is None:
            return
        with self._cache_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps({"id": key, "probs": list(pv.probs)}) + "\n")

    def _cached(self, code: str) -> PredictionVector | None:
        pv = self._memory.get(code)
        if pv is not None:
            return pv
        pv = self._disk.get(_content_key(code))
        if pv is not None:
            self._memory[code] = pv
        return pv

    def predict(
        self, snippets: Sequence[str], target_id: str | None = None
    ) -> list[PredictionVector]:
        """Predict class probabilities for each snippet, in order.

        Only snippets missing from the cache reach the backend; each unique
        miss counts as one invocation charged to target_id (campaign setup
        when None).
        """
        with self._lock:
            misses: list[str] = []
            seen: set[str] = set()
            for code in snippets:
                if self._cached(code) is None and code not in seen:
                    seen.add(code)
                    misses.append(code)
            if misses:
                rows = self.backend.predict_batch(misses)
                if len(rows) != len(misses):
                    raise MalformedResponse(
                        f"expected {len(misses)} rows, got {len(rows)}"
                    )
                for code, row in zip(misses, rows):
                    if not isinstance(row, list):
                        raise MalformedResponse("probability row is not a list")
                    pv = PredictionVector(tuple(float(p) for p in row))
                    if self.expect_classes is not None and len(pv) != self.expect_classes:
                        raise MalformedResponse(
                            f"expected {self.expect_classes} classes, got {len(pv)}"
                        )
                    self._memory[code] = pv
                    self._append_disk(_content_key(code), pv)
                self.counter.record(target_id, len(misses))
            return [self._memory[code] for code in snippets]

    def close(self) -> None:
        self.backend.close()
