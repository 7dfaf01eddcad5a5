"""Reference input selection.

Given the model's prediction on the target, take the second most probable
class, gather the correctly predicted training snippets of that class,
seed-sample a bounded pool, and keep the references whose identifier-masked
embeddings are closest to the target's.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .dataset import LabeledSnippet
from .embedding import cosine, embed_snippet
from .errors import EmptyPool
from .minicode.identifiers import masked_token_texts
from .model import ModelClient, PredictionVector
from .seeding import derive_seed

DEFAULT_SAMPLE_SIZE = 256
DEFAULT_REFERENCE_COUNT = 64


@dataclass(frozen=True)
class ReferenceSet:
    """References chosen for one target, most similar first."""

    target_id: str
    second_class: int
    members: tuple[LabeledSnippet, ...]


def second_class(prediction: PredictionVector) -> int:
    """Index of the second-largest probability; ties go to the lower index."""
    order = sorted(range(len(prediction)), key=lambda i: (-prediction.probs[i], i))
    return order[1]


def build_candidate_pool(
    train: Sequence[LabeledSnippet],
    wanted_label: int,
    client: ModelClient,
    target_id: str | None = None,
) -> list[LabeledSnippet]:
    """Training snippets of wanted_label that the model classifies correctly.

    Prediction costs are charged to campaign setup by default; the
    train-set predictions are shared across targets through the cache.
    """
    of_label = [s for s in train if s.label == wanted_label]
    if not of_label:
        raise EmptyPool(f"no training snippets labeled {wanted_label}")
    predictions = client.predict([s.code for s in of_label], target_id=target_id)
    pool = [s for s, pv in zip(of_label, predictions) if pv.argmax() == s.label]
    if not pool:
        raise EmptyPool(
            f"no correctly predicted training snippets labeled {wanted_label}"
        )
    return pool


def select_references(
    target: LabeledSnippet,
    pool: Sequence[LabeledSnippet],
    wanted_label: int,
    provider,
    campaign_seed: int,
    sample_size: int = DEFAULT_SAMPLE_SIZE,
    reference_count: int = DEFAULT_REFERENCE_COUNT,
    vector_cache: dict | None = None,
) -> ReferenceSet:
    """Rank a seeded sample of the pool by masked-embedding similarity.

    The sample is drawn from the pool sorted by snippet id so membership
    does not depend on corpus file order; ranking ties break by snippet id.
    vector_cache, keyed by snippet id, lets a campaign reuse embeddings of
    pool members across targets.
    """
    ordered = sorted(pool, key=lambda s: s.id)
    rng = random.Random(derive_seed("ris", campaign_seed, target.id))
    if len(ordered) > sample_size:
        sampled = rng.sample(ordered, sample_size)
    else:
        sampled = list(ordered)
    target_vec = embed_snippet(masked_token_texts(target.code), provider)
    scored = []
    for snippet in sampled:
        if vector_cache is not None and snippet.id in vector_cache:
            vec = vector_cache[snippet.id]
        else:
            vec = embed_snippet(masked_token_texts(snippet.code), provider)
            if vector_cache is not None:
                vector_cache[snippet.id] = vec
        scored.append((cosine(target_vec, vec), snippet))
    scored.sort(key=lambda pair: (-pair[0], pair[1].id))
    members = tuple(snippet for _, snippet in scored[:reference_count])
    return ReferenceSet(target_id=target.id, second_class=wanted_label, members=members)
