#!/usr/bin/env python3
"""Robustness sweep for the net migration rate series.

Reads a corpus (CSV or JSONL), then reports how the NMR series reacts to
random record exclusion at several proportions and to alternative
presence-padding windows.

    python3 scripts/sensitivity_sweep.py corpus.csv --focal RU --seed 0
"""
from __future__ import annotations

import argparse
from pathlib import Path

from scimigrate.records import parse_corpus
from scimigrate.sensitivity import ExclusionPlan, nmr_exclusion_study, padding_sweep


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("corpus", type=Path)
    parser.add_argument("--focal", default="RU")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--proportions",
        default="0.0,0.2,0.4,0.6,0.8",
        help="comma-separated exclusion proportions, ascending",
    )
    parser.add_argument("--runs", type=int, default=10, help="runs per proportion")
    parser.add_argument("--paddings", default="1,2,3,4,5", help="comma-separated padding windows")
    return parser.parse_args()


def main() -> int:
    args = parse_args()
    proportions = tuple(float(p) for p in args.proportions.split(","))
    paddings = tuple(int(p) for p in args.paddings.split(","))

    corpus, report = parse_corpus(args.corpus)
    print(f"corpus: {len(corpus.records)} records ({report.n_malformed} malformed rows skipped)")

    plan = ExclusionPlan(proportions=proportions, runs_per_proportion=args.runs, seed=args.seed)
    study = nmr_exclusion_study(corpus, plan, args.focal)
    print(f"\nexclusion study ({args.runs} runs per proportion, seed {args.seed}):")
    print(f"  {'proportion':>10}  {'nmr variance':>12}")
    for proportion in proportions:
        print(f"  {proportion:>10.1f}  {study.variance_by_proportion[proportion]:>12.4f}")

    sweep = padding_sweep(corpus, paddings, args.focal)
    print(f"\npadding sweep over {list(paddings)} (per-year max-min NMR spread):")
    worst = sorted(sweep.spread_by_year.items(), key=lambda kv: -kv[1])[:5]
    for year, spread in sorted(worst):
        print(f"  {year}: {spread:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
