"""Migration metrics: citation rates and classes, population estimates,
net migration rates, and field-based net brain drain.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .mobility import (
    MIGRANT_LABELS,
    MobilityLabel,
    MobilityProfile,
    YearCountrySeries,
    build_profile,
    build_series,
)
from .records import AuthorDossier, Corpus, group_by_author
from .taxonomy import (
    AsjcTable,
    DisciplineVector,
    NoSubjectData,
    normalized_contribution,
    normalized_count,
)

logger = logging.getLogger(__name__)

DEFAULT_PADDING = 2
DEFAULT_MIN_SUPPORT = 30.0

CITATION_CLASSES = ("low", "moderate", "high")


@dataclass(frozen=True)
class CitationSummary:
    """Citations aggregated once per distinct publication, per year of career."""

    total_citations: int
    academic_age: int
    annual_rate: float
    field_normalized_rate: float | None = None


@dataclass(frozen=True)
class CitationClassBoundaries:
    """Two 3-quantiles of migrants' field-normalized citation rates."""

    t1: float
    t2: float

    def __post_init__(self) -> None:
        if self.t1 > self.t2:
            raise ValueError(f"boundaries out of order: {self.t1} > {self.t2}")


def academic_age(dossier: AuthorDossier, snapshot_year: int) -> int:
    """Years since first publication, floored at 1."""
    first = dossier.first_year
    if snapshot_year < first:
        raise ValueError(
            f"snapshot year {snapshot_year} precedes first publication {first} "
            f"for author {dossier.author_id!r}"
        )
    return max(1, snapshot_year - first)


def annual_citation_rate(dossier: AuthorDossier, snapshot_year: int) -> CitationSummary:
    """Total citations (each publication counted once) per year of career."""
    seen: dict[str, int] = {}
    for rec in dossier.records:
        seen.setdefault(rec.pub_id, rec.citation_count)
    total = sum(seen.values())
    age = academic_age(dossier, snapshot_year)
    return CitationSummary(total_citations=total, academic_age=age, annual_rate=total / age)


def with_field_normalization(summary: CitationSummary, field_mean: float) -> CitationSummary:
    """Copy of ``summary`` with its rate divided by the field's mean rate."""
    if field_mean <= 0:
        raise ValueError(f"field mean rate must be positive, got {field_mean}")
    return replace(summary, field_normalized_rate=summary.annual_rate / field_mean)


def field_mean_rates(
    summaries_by_field: Mapping[str, Sequence[CitationSummary]],
    scope: str = "migrants",
) -> dict[str, float]:
    """Arithmetic mean annual rate per major field over the given population."""
    if scope not in ("migrants", "all"):
        raise ValueError(f"unknown scope {scope!r}")
    means: dict[str, float] = {}
    for major, summaries in summaries_by_field.items():
        if not summaries:
            logger.warning("no %s researchers in field %s; omitting its mean", scope, major)
            continue
        means[major] = sum(s.annual_rate for s in summaries) / len(summaries)
    return means


def fit_citation_boundaries(normalized_rates: Sequence[float]) -> CitationClassBoundaries:
    """Empirical 3-quantiles of field-normalized rates."""
    if len(normalized_rates) == 0:
        raise ValueError("cannot fit boundaries on an empty population")
    t1, t2 = np.quantile(np.asarray(normalized_rates, dtype=float), [1 / 3, 2 / 3])
    return CitationClassBoundaries(t1=float(t1), t2=float(t2))


def citation_class(summary: CitationSummary, boundaries: CitationClassBoundaries) -> str:
    """low / moderate / high by field-normalized rate against the tertiles.

    The moderate band is closed on both sides: a rate exactly at either
    boundary is moderate.
    """
    rate = summary.field_normalized_rate
    if rate is None:
        raise ValueError("summary has no field-normalized rate; normalize before classing")
    if rate < boundaries.t1:
        return "low"
    if rate > boundaries.t2:
        return "high"
    return "moderate"


@dataclass(frozen=True)
class PopulationSeries:
    """Estimated focal-population size per year, under a padding window."""

    by_year: Mapping[int, int]
    padding: int

    def __getitem__(self, year: int) -> int:
        return self.by_year.get(year, 0)


def _present_in_year(series: YearCountrySeries, focal: str, year: int, padding: int) -> bool:
    """Author counted at ``year`` iff the nearest focal-mode active year is
    within the padding window and no contrary active year (focal not a mode)
    is at least as close."""
    focal_dist = None
    contrary_dist = None
    for y in series.years:
        d = abs(year - y)
        if focal in series.mode_sets[y]:
            if focal_dist is None or d < focal_dist:
                focal_dist = d
        else:
            if contrary_dist is None or d < contrary_dist:
                contrary_dist = d
    if focal_dist is None or focal_dist > padding:
        return False
    return contrary_dist is None or contrary_dist > focal_dist


def author_series(corpus: Corpus) -> dict[str, YearCountrySeries]:
    """Per-author year/country series, keyed by author_id."""
    return {d.author_id: build_series(d) for d in group_by_author(corpus)}


def estimate_population(
    source: Corpus | Mapping[str, YearCountrySeries],
    focal: str,
    year: int,
    padding: int = DEFAULT_PADDING,
) -> int:
    """Number of authors estimated present in the focal country at ``year``."""
    if padding < 0:
        raise ValueError("padding must be non-negative")
    series_by_author = author_series(source) if isinstance(source, Corpus) else source
    return sum(
        1 for series in series_by_author.values() if _present_in_year(series, focal, year, padding)
    )


def population_series(
    series_by_author: Mapping[str, YearCountrySeries],
    focal: str,
    years: Iterable[int],
    padding: int = DEFAULT_PADDING,
) -> PopulationSeries:
    by_year = {
        y: estimate_population(series_by_author, focal, y, padding) for y in years
    }
    return PopulationSeries(by_year=by_year, padding=padding)


def count_transitions(
    series_by_author: Mapping[str, YearCountrySeries], focal: str
) -> tuple[Counter, Counter]:
    """Per-year arrival and departure counts at the focal country.

    A transition between consecutive active years counts as an arrival
    when the focal country enters the mode set, and as a departure when it
    leaves; both are attributed to the later year.
    """
    arrivals: Counter = Counter()
    departures: Counter = Counter()
    for series in series_by_author.values():
        for y1, y2 in zip(series.years, series.years[1:]):
            was = focal in series.mode_sets[y1]
            now = focal in series.mode_sets[y2]
            if now and not was:
                arrivals[y2] += 1
            elif was and not now:
                departures[y2] += 1
    return arrivals, departures


@dataclass(frozen=True)
class NmrPoint:
    year: int
    I: int
    E: int
    M: int
    in_rate: float
    out_rate: float
    nmr: float


def net_migration_rate(year: int, I: int, E: int, M: int) -> NmrPoint:
    """Arrivals minus departures per 1,000 of the estimated population."""
    if M <= 0:
        raise ValueError(f"population must be positive in {year}, got {M}")
    in_rate = 1000.0 * I / M
    out_rate = 1000.0 * E / M
    return NmrPoint(year=year, I=I, E=E, M=M, in_rate=in_rate, out_rate=out_rate, nmr=in_rate - out_rate)


def nmr_from_series(
    series_by_author: Mapping[str, YearCountrySeries],
    focal: str,
    padding: int = DEFAULT_PADDING,
) -> list[NmrPoint]:
    """One NMR point per year of the observed activity span.

    Years whose estimated population is zero are omitted with a warning.
    """
    series_by_author = {a: s for a, s in series_by_author.items() if s.years}
    if not series_by_author:
        return []
    lo = min(s.years[0] for s in series_by_author.values())
    hi = max(s.years[-1] for s in series_by_author.values())
    arrivals, departures = count_transitions(series_by_author, focal)
    points = []
    for year in range(lo, hi + 1):
        m = estimate_population(series_by_author, focal, year, padding)
        if m <= 0:
            logger.warning("year %d has zero estimated population; omitting NMR point", year)
            continue
        points.append(net_migration_rate(year, arrivals.get(year, 0), departures.get(year, 0), m))
    return points


def nmr_series(
    profiles: Iterable[MobilityProfile],
    focal: str,
    padding: int = DEFAULT_PADDING,
) -> list[NmrPoint]:
    return nmr_from_series({p.author_id: p.series for p in profiles}, focal, padding)


@dataclass(frozen=True)
class FnbdResult:
    """Net emigration propensity of one discipline's migrants, in [-1, 1]."""

    discipline: str
    P_d: float
    P_emi: float
    P_tra: float
    P_imm: float
    P_ret: float
    fnbd: float | None
    reliable: bool

    def describe(self) -> str:
        if self.fnbd is None:
            return f"{self.discipline}: no migrant activity"
        if self.fnbd > 0:
            return f"{self.discipline}: {self.fnbd * 100:.1f}% net drain"
        if self.fnbd < 0:
            return f"{self.discipline}: {-self.fnbd * 100:.1f}% net gain"
        return f"{self.discipline}: balanced"


def fnbd(
    vectors_by_label: Mapping[MobilityLabel, Sequence[DisciplineVector]],
    discipline: str,
    min_support: float = DEFAULT_MIN_SUPPORT,
) -> FnbdResult:
    """Share of a discipline's migrant mass that leaves minus the share that
    arrives: (P_emi + P_tra − P_imm − P_ret) / P_d.

    P terms are normalized counts over the four migrant labels. Results
    with P_d below ``min_support`` are marked unreliable; P_d = 0 yields
    no value at all.
    """
    p_emi = normalized_count(vectors_by_label.get(MobilityLabel.EMIGRANT, ()), discipline)
    p_tra = normalized_count(vectors_by_label.get(MobilityLabel.TRANSIENT, ()), discipline)
    p_imm = normalized_count(vectors_by_label.get(MobilityLabel.IMMIGRANT, ()), discipline)
    p_ret = normalized_count(vectors_by_label.get(MobilityLabel.RETURN_MIGRANT, ()), discipline)
    p_d = p_emi + p_tra + p_imm + p_ret
    if p_d == 0:
        return FnbdResult(
            discipline=discipline,
            P_d=0.0,
            P_emi=p_emi,
            P_tra=p_tra,
            P_imm=p_imm,
            P_ret=p_ret,
            fnbd=None,
            reliable=False,
        )
    value = (p_emi + p_tra - p_imm - p_ret) / p_d
    return FnbdResult(
        discipline=discipline,
        P_d=p_d,
        P_emi=p_emi,
        P_tra=p_tra,
        P_imm=p_imm,
        P_ret=p_ret,
        fnbd=value,
        reliable=p_d >= min_support,
    )


def fnbd_table(
    vectors_by_label: Mapping[MobilityLabel, Sequence[DisciplineVector]],
    disciplines: Iterable[str],
    min_support: float = DEFAULT_MIN_SUPPORT,
) -> list[FnbdResult]:
    return [fnbd(vectors_by_label, d, min_support) for d in disciplines]


def migrant_vectors(
    corpus: Corpus, focal: str, table: AsjcTable
) -> dict[MobilityLabel, list[DisciplineVector]]:
    """Discipline vectors of every migrant-labeled author, grouped by label.

    Migrants without any mapped subject code are skipped (they carry no
    discipline mass).
    """
    out: dict[MobilityLabel, list[DisciplineVector]] = {}
    for dossier in group_by_author(corpus):
        profile = build_profile(dossier, focal)
        if profile.label not in MIGRANT_LABELS:
            continue
        try:
            vector = normalized_contribution(dossier, table)
        except NoSubjectData:
            continue
        out.setdefault(profile.label, []).append(vector)
    return out


def fnbd_from_corpus(
    corpus: Corpus,
    focal: str,
    table: AsjcTable,
    min_support: float = DEFAULT_MIN_SUPPORT,
    disciplines: Sequence[str] | None = None,
) -> list[FnbdResult]:
    """Classify, vectorize, and compute FNBD for every subfield in one go."""
    vectors = migrant_vectors(corpus, focal, table)
    if disciplines is None:
        disciplines = table.subfields
    return fnbd_table(vectors, disciplines, min_support)
