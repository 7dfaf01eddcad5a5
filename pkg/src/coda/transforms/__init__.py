"""Semantic-preserving transformation engines: structure rewrites and renaming."""

from .est import (
    DEFAULT_VARIANT_COUNT,
    EstOutcome,
    StructureCensus,
    application_probability,
    apply_est,
    apply_est_detailed,
    census,
    census_units,
    generate_variant,
    uniform_census,
)
from .renaming import (
    RenameOutcome,
    RenamePair,
    RenamePlan,
    apply_rename,
    build_rename_plan,
    snippet_identifiers,
)
from .rules import RULES, RULES_BY_ID, RULE_IDS, TransformRule, catalog, count_unit

__all__ = [
    "DEFAULT_VARIANT_COUNT",
    "EstOutcome",
    "StructureCensus",
    "application_probability",
    "apply_est",
    "apply_est_detailed",
    "census",
    "census_units",
    "generate_variant",
    "uniform_census",
    "RenameOutcome",
    "RenamePair",
    "RenamePlan",
    "apply_rename",
    "build_rename_plan",
    "snippet_identifiers",
    "RULES",
    "RULES_BY_ID",
    "RULE_IDS",
    "TransformRule",
    "catalog",
    "count_unit",
]
