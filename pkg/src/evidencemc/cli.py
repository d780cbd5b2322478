"""Command-line interface for the replication harness.

Subcommands: ``run`` executes a config file or packaged preset,
``summarize`` prints boxplot-ready statistics of a results CSV,
``references regenerate`` rebuilds the reference-constants file, and
``presets list`` shows the shipped experiment presets.
"""

from __future__ import annotations

import argparse
import configparser
import sys

from . import harness

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evidencemc",
        description="Seeded replicate studies of evidence estimators, to CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser(
        "run", help="run a config file or packaged preset into a CSV"
    )
    run.add_argument("config", help="config file path or preset name")
    run.add_argument("--runs", type=int, help="override replicate count")
    run.add_argument("--seed", type=int, help="override base seed")
    run.add_argument("--workers", type=int, default=1, help="parallel replicates")
    run.add_argument("--output", help="override output CSV path")

    summ = sub.add_parser("summarize", help="summary statistics of a results CSV")
    summ.add_argument("csv", help="results CSV path")

    refs = sub.add_parser("references", help="reference-constant management")
    refs_sub = refs.add_subparsers(dest="references_command", required=True)
    regen = refs_sub.add_parser(
        "regenerate", help="recompute reference constants and rewrite the file"
    )
    regen.add_argument(
        "model",
        choices=(*harness.REFERENCE_SECTIONS, "all"),
        help="reference section to regenerate",
    )
    regen.add_argument("--seed", type=int, default=0, help="recorded creation seed")
    regen.add_argument("--output", help="override references file path")

    presets = sub.add_parser("presets", help="packaged experiment presets")
    presets_sub = presets.add_subparsers(dest="presets_command", required=True)
    presets_sub.add_parser("list", help="list packaged preset names")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            harness.run_config_file(
                args.config,
                runs=args.runs,
                base_seed=args.seed,
                output=args.output,
                workers=args.workers,
            )
        elif args.command == "summarize":
            print(harness.summarize(args.csv))
        elif args.command == "references":
            path = harness.regenerate_references(
                args.model, seed=args.seed, path=args.output
            )
            print(f"wrote {path}")
        elif args.command == "presets":
            for name in harness.list_presets():
                print(name)
    except (
        ValueError,
        LookupError,
        OSError,
        RuntimeError,
        configparser.Error,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
