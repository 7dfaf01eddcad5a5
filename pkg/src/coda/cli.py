"""Command-line entry points: attack, export-augmented, rules, bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    DEFAULT_TEST_PER_CLASS,
    DEFAULT_TRAIN_PER_CLASS,
    generate_benchmark,
    write_benchmark,
)
from .campaign import (
    DEFAULT_REFERENCE_COUNT,
    DEFAULT_SAMPLE_SIZE,
    DEFAULT_TEMPERATURE,
    DEFAULT_VARIANT_COUNT,
    STRATEGIES,
    CampaignConfig,
    export_augmented,
    run_campaign,
    write_report,
)
from .errors import CodaError
from .transforms.rules import catalog


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coda",
        description="Code-difference-guided adversarial example generation "
                    "for code classification models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    attack = sub.add_parser("attack", help="run an attack campaign")
    attack.add_argument("--dataset", type=Path, required=True,
                        help="JSONL corpus with train and test splits")
    attack.add_argument("--strategy", choices=STRATEGIES, default="coda")
    attack.add_argument("--seed", type=int, default=0)
    attack.add_argument("--backend", nargs="+", default=["surrogate"],
                        metavar=("KIND", "ARG"),
                        help="surrogate | http URL | stdio CMD")
    attack.add_argument("--out", type=Path, required=True,
                        help="report path (.json; a .csv summary lands next to it)")
    attack.add_argument("--u", dest="sample_size", type=int,
                        default=DEFAULT_SAMPLE_SIZE,
                        help="candidate sample size per target")
    attack.add_argument("--n", dest="reference_count", type=int,
                        default=DEFAULT_REFERENCE_COUNT,
                        help="reference snippets kept per target")
    attack.add_argument("--m", dest="variant_count", type=int,
                        default=DEFAULT_VARIANT_COUNT,
                        help="structure variants generated per target")
    attack.add_argument("--irt-revert", action="store_true",
                        help="try each rename from the structure-transformed "
                             "code instead of accumulating renames")
    attack.add_argument("--parallelism", type=int, default=1)
    attack.add_argument("--cache-dir", type=Path, default=None,
                        help="prediction cache directory (or CODA_CACHE_DIR)")
    attack.add_argument("--fallback-second-class", action="store_true",
                        help="when the preferred class has no usable pool, "
                             "try the remaining classes by confidence")
    attack.add_argument("--temperature", type=float, default=DEFAULT_TEMPERATURE,
                        help="softmax temperature of the builtin surrogate")
    attack.add_argument("--identifier-vectors", type=Path, default=None,
                        help="word2vec-format text file for identifier vectors")

    export = sub.add_parser("export-augmented",
                            help="merge attack outputs into a training set")
    export.add_argument("--report", type=Path, required=True)
    export.add_argument("--dataset", type=Path, required=True)
    export.add_argument("--out", type=Path, required=True)

    rules = sub.add_parser("rules", help="inspect the transformation catalog")
    rules.add_argument("--dump", action="store_true",
                       help="print the catalog as JSON")

    bench = sub.add_parser("bench", help="generate the synthetic benchmark")
    bench.add_argument("--generate", type=Path, required=True, metavar="DIR",
                       help="directory to write synthetic.jsonl into")
    bench.add_argument("--per-class-train", type=int,
                       default=DEFAULT_TRAIN_PER_CLASS)
    bench.add_argument("--per-class-test", type=int,
                       default=DEFAULT_TEST_PER_CLASS)
    bench.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_attack(args: argparse.Namespace) -> int:
    backend = args.backend[0]
    backend_arg = " ".join(args.backend[1:]) if len(args.backend) > 1 else None
    config = CampaignConfig(
        dataset=args.dataset, strategy=args.strategy, seed=args.seed,
        sample_size=args.sample_size, reference_count=args.reference_count,
        variant_count=args.variant_count, backend=backend,
        backend_arg=backend_arg, out=args.out, irt_revert=args.irt_revert,
        parallelism=args.parallelism, cache_dir=args.cache_dir,
        fallback_second_class=args.fallback_second_class,
        temperature=args.temperature,
        identifier_vectors=args.identifier_vectors,
    )
    report = run_campaign(config)
    write_report(report, args.out)
    aggregates = report.as_dict()["aggregates"]
    print(f"wrote {args.out}")
    print(f"targets={aggregates['targets']} correct={aggregates['correctTargets']} "
          f"faults={aggregates['faultsRevealed']} rfr={aggregates['rfr']} "
          f"meanPcd={aggregates['meanPcd']} "
          f"meanInvocations={aggregates['meanInvocations']}")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    out = export_augmented(args.report, args.dataset, args.out)
    print(f"wrote {out}")
    return 0


def _cmd_rules(args: argparse.Namespace) -> int:
    entries = catalog()
    if args.dump:
        print(json.dumps(entries, indent=2, sort_keys=True))
    else:
        for entry in entries:
            print(f"{entry['ruleId']}  {entry['category']:<14} {entry['description']}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    rows = generate_benchmark(per_class_train=args.per_class_train,
                              per_class_test=args.per_class_test,
                              seed=args.seed)
    out_dir = args.generate
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "synthetic.jsonl"
    write_benchmark(rows, path)
    print(f"wrote {path} ({len(rows)} rows)")
    return 0


_COMMANDS = {
    "attack": _cmd_attack,
    "export-augmented": _cmd_export,
    "rules": _cmd_rules,
    "bench": _cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CodaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
