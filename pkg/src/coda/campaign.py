"""Attack orchestration: per-target pipeline, strategies, metrics, reports.

One campaign = one dataset, one strategy, one seed.  Every test-split
snippet is attacked independently; training-set predictions are charged to
campaign setup and shared through the prediction cache.  Reports are
deterministic for a fixed config and seed apart from wallClockSeconds.
"""

from __future__ import annotations

import csv
import json
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .dataset import LabeledSnippet, load_dataset, num_classes
from .embedding import (
    IDENTIFIER_DIMENSION,
    SNIPPET_DIMENSION,
    HashedNgramProvider,
    PretrainedVectorProvider,
)
from .errors import DatasetError, ModelUnavailable, ParseError
from .minicode import all_identifier_texts, collect_identifiers, parse, print_source
from .model import (
    HttpModelBackend,
    ModelClient,
    StdioModelBackend,
    SurrogateBackend,
    train_surrogate,
)
from .references import second_class, select_references
from .seeding import derive_seed
from .transforms.est import apply_est_detailed, census, uniform_census
from .transforms.renaming import RenamePair, apply_rename, build_rename_plan, snippet_identifiers

STRATEGIES = ("coda", "no-ris", "no-est", "no-cdg", "no-irt", "random-baseline")

STATUS_FAULT = "fault-revealed"
STATUS_EXHAUSTED = "exhausted"
STATUS_SKIPPED = "skipped-mispredicted"
STATUS_NO_REFERENCES = "no-references"
STATUS_ERROR = "error"

DEFAULT_SAMPLE_SIZE = 256
DEFAULT_REFERENCE_COUNT = 64
DEFAULT_VARIANT_COUNT = 64
DEFAULT_TEMPERATURE = 0.05


@dataclass(frozen=True)
class CampaignConfig:
    dataset: Path
    strategy: str = "coda"
    seed: int = 0
    sample_size: int = DEFAULT_SAMPLE_SIZE
    reference_count: int = DEFAULT_REFERENCE_COUNT
    variant_count: int = DEFAULT_VARIANT_COUNT
    backend: str = "surrogate"
    backend_arg: str | None = None
    out: Path | None = None
    irt_revert: bool = False
    parallelism: int = 1
    cache_dir: Path | None = None
    fallback_second_class: bool = False
    temperature: float = DEFAULT_TEMPERATURE
    identifier_vectors: Path | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy: {self.strategy}")
        if not (self.sample_size >= self.reference_count >= 1):
            raise ValueError("need sample_size >= reference_count >= 1")
        if self.variant_count < 1:
            raise ValueError("need variant_count >= 1")
        if self.parallelism < 1:
            raise ValueError("need parallelism >= 1")


@dataclass(frozen=True)
class AttackResult:
    target_id: str
    status: str
    adversarial_code: str | None
    pcd: float
    invocations: int
    applied_rules: tuple[str, ...]
    applied_renames: tuple[tuple[str, str], ...]
    checks: int
    cache_hits: int
    min_confidence_code: str | None
    error: str | None = None

    def as_row(self) -> dict:
        return {
            "targetId": self.target_id,
            "status": self.status,
            "adversarialCode": self.adversarial_code,
            "pcd": self.pcd,
            "invocations": self.invocations,
            "appliedRules": list(self.applied_rules),
            "appliedRenames": [list(pair) for pair in self.applied_renames],
            "checks": self.checks,
            "cacheHits": self.cache_hits,
            "minConfidenceCode": self.min_confidence_code,
            "error": self.error,
        }


@dataclass(frozen=True)
class CampaignReport:
    rfr: float | None
    mean_pcd: float | None
    mean_invocations: float | None
    per_target: tuple[AttackResult, ...]
    wall_clock_seconds: float
    config: dict
    setup_invocations: int

    def as_dict(self) -> dict:
        statuses: dict[str, int] = {}
        for result in self.per_target:
            statuses[result.status] = statuses.get(result.status, 0) + 1
        correct = _correct_results(self.per_target)
        return {
            "aggregates": {
                "rfr": self.rfr,
                "meanPcd": self.mean_pcd,
                "meanInvocations": self.mean_invocations,
                "targets": len(self.per_target),
                "correctTargets": len(correct),
                "faultsRevealed": statuses.get(STATUS_FAULT, 0),
                "statusCounts": statuses,
                "setupInvocations": self.setup_invocations,
                "totalInvocations": self.setup_invocations
                + sum(r.invocations for r in self.per_target),
            },
            "config": self.config,
            "perTarget": [result.as_row() for result in self.per_target],
            "wallClockSeconds": self.wall_clock_seconds,
        }


class _SharedState:
    """Read-only campaign context shared by every attack."""

    def __init__(self, train: Sequence[LabeledSnippet], config: CampaignConfig,
                 snippet_provider, identifier_provider):
        self.train = list(train)
        self.config = config
        self.snippet_provider = snippet_provider
        self.identifier_provider = identifier_provider
        self.correct_by_label: dict[int, list[LabeledSnippet]] = {}
        self.snippet_vectors: dict[str, object] = {}
        self.identifier_vectors: dict[str, object] = {}
        self._train_identifiers: tuple[str, ...] | None = None

    def train_identifiers(self) -> tuple[str, ...]:
        if self._train_identifiers is None:
            names: set[str] = set()
            for snippet in self.train:
                names.update(snippet_identifiers(snippet.code))
            self._train_identifiers = tuple(sorted(names))
        return self._train_identifiers


def _correct_results(results: Sequence[AttackResult]) -> list[AttackResult]:
    """Targets that count toward RFR: correctly predicted, no error."""
    return [r for r in results
            if r.status in (STATUS_FAULT, STATUS_EXHAUSTED, STATUS_NO_REFERENCES)]


def _select_strategy_references(target: LabeledSnippet, wanted: int,
                                state: _SharedState) -> list[str] | None:
    """Reference snippet codes per strategy; None means an empty result."""
    config = state.config
    if config.strategy == "no-ris":
        ordered = sorted(state.train, key=lambda s: s.id)
        if not ordered:
            return None
        rng = random.Random(derive_seed("noris", config.seed, target.id))
        take = min(config.reference_count, len(ordered))
        return [s.code for s in rng.sample(ordered, take)]
    pool = state.correct_by_label.get(wanted, [])
    if not pool:
        return None
    refs = select_references(
        target, pool, wanted, state.snippet_provider, config.seed,
        sample_size=config.sample_size, reference_count=config.reference_count,
        vector_cache=state.snippet_vectors,
    )
    return [member.code for member in refs.members]


def _random_baseline_plan(unit, state: _SharedState, target_id: str) -> list[RenamePair]:
    """One uniformly drawn train-wide replacement per target identifier."""
    candidates = state.train_identifiers()
    if not candidates:
        return []
    rng = random.Random(derive_seed("rand", state.config.seed, target_id))
    return [RenamePair(source, rng.choice(candidates), 0.0)
            for source in collect_identifiers(unit)]


def attack_target(target: LabeledSnippet, config: CampaignConfig,
                  client: ModelClient, state: _SharedState) -> AttackResult:
    checks = 0
    min_conf: float | None = None
    min_code: str | None = None

    def check(code: str):
        nonlocal checks
        checks += 1
        return client.predict([code], target_id=target.id)[0]

    def note(code: str, prediction) -> None:
        nonlocal min_conf, min_code
        conf = prediction.probs[target.label]
        if min_conf is None or conf < min_conf:
            min_conf = conf
            min_code = code

    def done(status: str, adversarial: str | None, conf0: float,
             applied_rules: tuple[str, ...] = (),
             applied_renames: tuple[tuple[str, str], ...] = (),
             error: str | None = None) -> AttackResult:
        invocations = client.counter.per_target.get(target.id, 0)
        pcd = 0.0 if min_conf is None else max(0.0, conf0 - min_conf)
        return AttackResult(
            target_id=target.id, status=status, adversarial_code=adversarial,
            pcd=pcd, invocations=invocations, applied_rules=applied_rules,
            applied_renames=applied_renames, checks=checks,
            cache_hits=checks - invocations, min_confidence_code=min_code,
            error=error,
        )

    try:
        initial = check(target.code)
    except ModelUnavailable as exc:
        return done(STATUS_ERROR, None, 0.0, error=str(exc))
    if initial.argmax() != target.label:
        return done(STATUS_SKIPPED, None, 0.0)
    conf0 = initial.probs[target.label]

    try:
        target_unit = parse(target.code)
    except ParseError as exc:
        return done(STATUS_ERROR, None, conf0, error=f"target does not parse: {exc}")

    try:
        if config.strategy == "random-baseline":
            reference_codes: list[str] | None = []
        else:
            wanted = second_class(initial)
            reference_codes = _select_strategy_references(target, wanted, state)
            if reference_codes is None and config.fallback_second_class:
                order = sorted(range(len(initial.probs)),
                               key=lambda i: (-initial.probs[i], i))
                for cls in order:
                    if cls in (target.label, wanted):
                        continue
                    reference_codes = _select_strategy_references(target, cls, state)
                    if reference_codes is not None:
                        break
            if reference_codes is None:
                return done(STATUS_NO_REFERENCES, None, conf0)

        current_unit = target_unit
        applied_rules: tuple[str, ...] = ()
        if config.strategy not in ("no-est", "random-baseline"):
            census_data = (uniform_census() if config.strategy == "no-cdg"
                           else census(reference_codes))
            outcome = apply_est_detailed(
                target_unit, census_data, config.variant_count,
                derive_seed("est", config.seed, target.id),
                reference_codes, state.snippet_provider,
            )
            current_unit = outcome.unit
            applied_rules = outcome.applied_rules
            est_code = print_source(current_unit)
            prediction = check(est_code)
            note(est_code, prediction)
            if prediction.argmax() != target.label:
                return done(STATUS_FAULT, est_code, conf0, applied_rules)

        if config.strategy == "no-irt":
            return done(STATUS_EXHAUSTED, None, conf0, applied_rules)

        if config.strategy == "random-baseline":
            pairs: Sequence[RenamePair] = _random_baseline_plan(
                current_unit, state, target.id)
        else:
            pairs = build_rename_plan(
                current_unit, reference_codes, state.identifier_provider,
                vector_cache=state.identifier_vectors,
            ).pairs

        base_unit = current_unit
        present = set(all_identifier_texts(current_unit))
        applied: list[tuple[str, str]] = []
        for pair in pairs:
            if (pair.source not in present or pair.replacement in present
                    or pair.replacement == pair.source):
                continue
            source_unit = base_unit if config.irt_revert else current_unit
            outcome = apply_rename(source_unit, pair.source, pair.replacement)
            if outcome.unit is None:
                continue
            code = print_source(outcome.unit)
            prediction = check(code)
            note(code, prediction)
            renamed = applied + [(pair.source, pair.replacement)]
            if prediction.argmax() != target.label:
                return done(STATUS_FAULT, code, conf0, applied_rules, tuple(renamed))
            if not config.irt_revert:
                current_unit = outcome.unit
                present.discard(pair.source)
                present.add(pair.replacement)
                applied = renamed
        final_renames = () if config.irt_revert else tuple(applied)
        return done(STATUS_EXHAUSTED, None, conf0, applied_rules, final_renames)
    except ModelUnavailable as exc:
        return done(STATUS_ERROR, None, conf0, error=str(exc))


def _build_backend(config: CampaignConfig, train: Sequence[LabeledSnippet],
                   classes: int):
    if config.backend == "surrogate":
        return SurrogateBackend(train_surrogate(train, classes,
                                                temperature=config.temperature))
    if config.backend == "http":
        if not config.backend_arg:
            raise ValueError("http backend needs a URL")
        return HttpModelBackend(config.backend_arg)
    if config.backend == "stdio":
        if not config.backend_arg:
            raise ValueError("stdio backend needs a command")
        return StdioModelBackend(config.backend_arg)
    raise ValueError(f"unknown backend: {config.backend}")


def _resolve_cache_dir(config: CampaignConfig) -> Path | None:
    if config.cache_dir is not None:
        return Path(config.cache_dir)
    env = os.environ.get("CODA_CACHE_DIR")
    return Path(env) if env else None


def _config_snapshot(config: CampaignConfig, classes: int) -> dict:
    return {
        "dataset": str(config.dataset),
        "strategy": config.strategy,
        "seed": config.seed,
        "sampleSize": config.sample_size,
        "referenceCount": config.reference_count,
        "variantCount": config.variant_count,
        "backend": config.backend,
        "backendArg": config.backend_arg,
        "irtRevert": config.irt_revert,
        "parallelism": config.parallelism,
        "fallbackSecondClass": config.fallback_second_class,
        "temperature": config.temperature,
        "identifierVectors": (None if config.identifier_vectors is None
                              else str(config.identifier_vectors)),
        "numClasses": classes,
    }


def run_campaign(config: CampaignConfig) -> CampaignReport:
    started = time.monotonic()
    corpus = load_dataset(config.dataset)
    train = [s for s in corpus if s.split == "train"]
    targets = [s for s in corpus if s.split == "test"]
    classes = num_classes(corpus)

    backend = _build_backend(config, train, classes)
    client = ModelClient(backend, cache_dir=_resolve_cache_dir(config),
                         expect_classes=classes)
    snippet_provider = HashedNgramProvider(SNIPPET_DIMENSION)
    if config.identifier_vectors is not None:
        identifier_provider = PretrainedVectorProvider(config.identifier_vectors)
    else:
        identifier_provider = HashedNgramProvider(IDENTIFIER_DIMENSION)
    state = _SharedState(train, config, snippet_provider, identifier_provider)

    try:
        # Setup predictions: the correctly-predicted pool per label, shared
        # across targets and charged to setup rather than any target.
        if train:
            predictions = client.predict([s.code for s in train], target_id=None)
            for snippet, prediction in zip(train, predictions):
                if prediction.argmax() == snippet.label:
                    state.correct_by_label.setdefault(snippet.label, []).append(snippet)

        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                results = tuple(pool.map(
                    lambda t: attack_target(t, config, client, state), targets))
        else:
            results = tuple(attack_target(t, config, client, state)
                            for t in targets)
    finally:
        client.close()

    correct = _correct_results(results)
    faults = sum(1 for r in correct if r.status == STATUS_FAULT)
    if correct:
        rfr: float | None = faults / len(correct)
        mean_pcd: float | None = sum(r.pcd for r in correct) / len(correct)
        mean_inv: float | None = sum(r.invocations for r in correct) / len(correct)
    else:
        rfr = mean_pcd = mean_inv = None
    return CampaignReport(
        rfr=rfr, mean_pcd=mean_pcd, mean_invocations=mean_inv,
        per_target=results, wall_clock_seconds=time.monotonic() - started,
        config=_config_snapshot(config, classes),
        setup_invocations=client.counter.setup_count,
    )


def write_report(report: CampaignReport, out: Path | str) -> Path:
    """JSON report plus a one-line CSV summary next to it."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = report.as_dict()
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    summary = out.with_suffix(".csv")
    aggregates = payload["aggregates"]
    with summary.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "seed", "targets", "correctTargets",
                         "faultsRevealed", "rfr", "meanPcd", "meanInvocations",
                         "setupInvocations", "wallClockSeconds"])
        writer.writerow([
            payload["config"]["strategy"], payload["config"]["seed"],
            aggregates["targets"], aggregates["correctTargets"],
            aggregates["faultsRevealed"], aggregates["rfr"],
            aggregates["meanPcd"], aggregates["meanInvocations"],
            aggregates["setupInvocations"], payload["wallClockSeconds"],
        ])
    return out


def export_augmented(report: Mapping | CampaignReport | Path | str,
                     dataset: Path | str, out: Path | str) -> Path:
    """Training rows plus one adversarial row per attacked target.

    Each target contributes its fault-revealing example when one exists,
    otherwise the checked variant with the lowest confidence in the true
    label; targets with no checked variants contribute nothing.
    """
    if isinstance(report, CampaignReport):
        payload = report.as_dict()
    elif isinstance(report, (str, Path)):
        payload = json.loads(Path(report).read_text(encoding="utf-8"))
    else:
        payload = dict(report)
    corpus = load_dataset(dataset)
    labels = {s.id: s.label for s in corpus}
    lines = [json.dumps({"id": s.id, "code": s.code, "label": s.label,
                         "split": "train"}, sort_keys=True)
             for s in corpus if s.split == "train"]
    for row in payload["perTarget"]:
        code = row["adversarialCode"] or row["minConfidenceCode"]
        if code is None:
            continue
        target_id = row["targetId"]
        if target_id not in labels:
            raise DatasetError(f"report target {target_id} not in dataset")
        lines.append(json.dumps({
            "id": f"{target_id}-adv", "code": code,
            "label": labels[target_id], "split": "train",
        }, sort_keys=True))
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out
