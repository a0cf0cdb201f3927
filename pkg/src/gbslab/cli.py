"""Command-line experiment runner.

Verbs::

    gbslab distribution --config cfg.yaml --out results/
    gbslab validate     --config cfg.yaml --out results/
    gbslab maxhaf       --config cfg.yaml --graph graph.txt --out results/
    gbslab cost         --config cfg.yaml --out results/

Exit codes: 0 success, 2 configuration error, 3 numeric-guard failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import (
    ConfigError,
    DecompositionError,
    GuardError,
    KernelConsistencyError,
    UnphysicalStateError,
)
from .experiment import run_cost_report, run_distribution, run_maxhaf, run_validation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbslab",
        description="Simulate, sample and certify threshold-detection experiments "
        "on squeezed-light interferometers.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in [
        ("distribution", "exact vs sampled click distribution with metric report"),
        ("validate", "likelihood-ratio counters against classical hypotheses"),
        ("maxhaf", "sampling-driven max-|hafnian| subgraph search"),
        ("cost", "arithmetic operation counts of the sampler"),
    ]:
        p = sub.add_parser(verb, help=help_text)
        p.add_argument("--config", required=True, help="YAML config file or run manifest")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        if verb == "maxhaf":
            p.add_argument("--graph", required=True, help="edge-list graph file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = config.with_seed(args.seed)
        if args.verb == "distribution":
            out = run_distribution(config, args.out)
        elif args.verb == "validate":
            out = run_validation(config, args.out)
        elif args.verb == "maxhaf":
            out = run_maxhaf(config, args.graph, args.out)
        else:
            out = run_cost_report(config, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GuardError, UnphysicalStateError, KernelConsistencyError, DecompositionError) as exc:
        print(f"numeric guard failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {args.verb} outputs to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
