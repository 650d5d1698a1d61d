"""Robustness protocols: random record exclusion for NMR and FNBD, and a
padding-parameter sweep.

Every run derives its RNG from (plan seed, proportion index, run index),
so a study is fully determined by its inputs and re-runs are independent
of execution order.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .metrics import (
    DEFAULT_MIN_SUPPORT,
    DEFAULT_PADDING,
    FnbdResult,
    NmrPoint,
    author_series,
    fnbd_from_corpus,
    nmr_from_series,
)
from .records import Corpus, with_records
from .taxonomy import AsjcTable, load_default_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExclusionPlan:
    proportions: tuple[float, ...]
    runs_per_proportion: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.proportions:
            raise ValueError("plan needs at least one proportion")
        for p in self.proportions:
            if not 0.0 <= p < 1.0:
                raise ValueError(f"proportion {p} outside [0, 1)")
        if list(self.proportions) != sorted(self.proportions):
            raise ValueError("proportions must be sorted ascending")
        if self.runs_per_proportion < 1:
            raise ValueError("runs_per_proportion must be >= 1")


def exclude_random(corpus: Corpus, proportion: float, seed) -> Corpus:
    """Drop ⌊proportion·N⌋ records uniformly without replacement.

    Survivors keep their original order; proportion 0 returns the corpus
    unchanged (same object, so downstream outputs are bit-identical).
    """
    if not 0.0 <= proportion < 1.0:
        raise ValueError(f"exclusion proportion {proportion} outside [0, 1)")
    n = len(corpus)
    k = math.floor(proportion * n)
    if k == 0:
        return corpus
    rng = np.random.default_rng(seed)
    dropped = set(rng.choice(n, size=k, replace=False).tolist())
    return with_records(corpus, (r for i, r in enumerate(corpus.records) if i not in dropped))


def _run_seed(plan: ExclusionPlan, prop_idx: int, run_idx: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((plan.seed, prop_idx, run_idx))


@dataclass(frozen=True)
class NmrRun:
    proportion: float
    run: int
    points: tuple[NmrPoint, ...]


@dataclass
class NmrStudyResult:
    runs: list[NmrRun] = field(default_factory=list)
    variance_by_proportion: dict[float, float] = field(default_factory=dict)


def _nmr_variance(runs: Sequence[NmrRun]) -> float:
    """Mean over years of the across-run variance of NMR.

    Years observed in fewer than two runs carry no variance information
    and are skipped.
    """
    by_year: dict[int, list[float]] = {}
    for r in runs:
        for pt in r.points:
            by_year.setdefault(pt.year, []).append(pt.nmr)
    variances = [
        float(np.var(values)) for values in by_year.values() if len(values) >= 2
    ]
    return float(np.mean(variances)) if variances else 0.0


def nmr_exclusion_study(
    corpus: Corpus,
    plan: ExclusionPlan,
    focal: str,
    padding: int = DEFAULT_PADDING,
) -> NmrStudyResult:
    """Recompute the NMR series on randomly thinned corpora.

    Reports every run's series plus, per proportion, the mean across-year
    variance of NMR over runs (the dispersion the thinning induces).
    """
    result = NmrStudyResult()
    for pi, proportion in enumerate(plan.proportions):
        prop_runs = []
        for ri in range(plan.runs_per_proportion):
            sub = exclude_random(corpus, proportion, _run_seed(plan, pi, ri))
            points = nmr_from_series(author_series(sub), focal, padding)
            prop_runs.append(NmrRun(proportion=proportion, run=ri, points=tuple(points)))
        result.runs.extend(prop_runs)
        result.variance_by_proportion[proportion] = _nmr_variance(prop_runs)
    return result


@dataclass(frozen=True)
class FnbdRun:
    proportion: float
    run: int
    values: Mapping[str, float | None]


@dataclass
class FnbdStudyResult:
    runs: list[FnbdRun] = field(default_factory=list)
    unstable_disciplines: dict[float, tuple[str, ...]] = field(default_factory=dict)


def fnbd_exclusion_study(
    corpus: Corpus,
    plan: ExclusionPlan,
    focal: str,
    table: AsjcTable | None = None,
    min_support: float = DEFAULT_MIN_SUPPORT,
) -> FnbdStudyResult:
    """Recompute per-discipline FNBD on randomly thinned corpora.

    A discipline is flagged unstable at a proportion when its sign flips
    across that proportion's runs.
    """
    table = table or load_default_table()
    result = FnbdStudyResult()
    for pi, proportion in enumerate(plan.proportions):
        prop_runs: list[FnbdRun] = []
        for ri in range(plan.runs_per_proportion):
            sub = exclude_random(corpus, proportion, _run_seed(plan, pi, ri))
            values = {
                r.discipline: r.fnbd for r in fnbd_from_corpus(sub, focal, table, min_support)
            }
            prop_runs.append(FnbdRun(proportion=proportion, run=ri, values=values))
        result.runs.extend(prop_runs)
        unstable = []
        for discipline in table.subfields:
            signs = {
                np.sign(r.values[discipline])
                for r in prop_runs
                if r.values.get(discipline) is not None
            }
            if 1.0 in signs and -1.0 in signs:
                unstable.append(discipline)
        result.unstable_disciplines[proportion] = tuple(unstable)
        if unstable:
            logger.info(
                "FNBD signs flip at exclusion %.2f for: %s", proportion, ", ".join(unstable)
            )
    return result


@dataclass
class PaddingSweepResult:
    series_by_padding: dict[int, tuple[NmrPoint, ...]] = field(default_factory=dict)
    spread_by_year: dict[int, float] = field(default_factory=dict)


def padding_sweep(
    corpus: Corpus, paddings: Sequence[int], focal: str
) -> PaddingSweepResult:
    """NMR series recomputed under alternative presence-padding values.

    The per-year spread (max − min NMR across paddings) summarizes how
    much the parameter rescales the series.
    """
    if not paddings:
        raise ValueError("padding sweep needs at least one padding value")
    for p in paddings:
        if p < 0:
            raise ValueError(f"padding {p} is negative")
    series = author_series(corpus)
    result = PaddingSweepResult()
    for p in paddings:
        result.series_by_padding[int(p)] = tuple(nmr_from_series(series, focal, int(p)))
    by_year: dict[int, list[float]] = {}
    for points in result.series_by_padding.values():
        for pt in points:
            by_year.setdefault(pt.year, []).append(pt.nmr)
    result.spread_by_year = {
        year: (max(vals) - min(vals)) for year, vals in sorted(by_year.items())
    }
    return result


# ------------------------------------------------------------------ CSV export

_LONG_HEADER = ["proportion", "run", "year_or_discipline", "value"]


def write_sensitivity_nmr_csv(result: NmrStudyResult, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_LONG_HEADER)
        for run in result.runs:
            for pt in run.points:
                writer.writerow([run.proportion, run.run, pt.year, repr(pt.nmr)])


def write_sensitivity_fnbd_csv(result: FnbdStudyResult, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_LONG_HEADER)
        for run in result.runs:
            for discipline in sorted(run.values):
                value = run.values[discipline]
                writer.writerow(
                    [run.proportion, run.run, discipline, "" if value is None else repr(value)]
                )


def write_padding_sweep_csv(result: PaddingSweepResult, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["padding", "year", "nmr"])
        for padding in sorted(result.series_by_padding):
            for pt in result.series_by_padding[padding]:
                writer.writerow([padding, pt.year, repr(pt.nmr)])
