"""Per-year mode countries, migration events, and mobility classification.

For every publication-active year an author has a multiset of affiliation
countries; the countries of maximal multiplicity form that year's mode
set. A migration event occurs between consecutive active years when a
previous mode country disappears from the new mode set. Labels are taken
relative to one focal country.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .records import AuthorDossier

logger = logging.getLogger(__name__)

UNDETERMINED = "UNDETERMINED"


class MobilityLabel(str, Enum):
    SINGLE_PAPER = "single_paper"
    NON_MOVER = "non_mover"
    IMMIGRANT = "immigrant"
    EMIGRANT = "emigrant"
    RETURN_MIGRANT = "return_migrant"
    TRANSIENT = "transient"
    NON_FOCAL = "non_focal"


MIGRANT_LABELS = frozenset(
    {
        MobilityLabel.IMMIGRANT,
        MobilityLabel.EMIGRANT,
        MobilityLabel.RETURN_MIGRANT,
        MobilityLabel.TRANSIENT,
    }
)


@dataclass(frozen=True)
class YearCountrySeries:
    """Sorted active years with per-year country multisets and mode sets.

    Years whose records all lack a known country are omitted entirely.
    """

    years: tuple[int, ...]
    counts: Mapping[int, Mapping[str, int]]
    mode_sets: Mapping[int, frozenset[str]]

    def mode_set(self, year: int) -> frozenset[str]:
        return self.mode_sets.get(year, frozenset())

    @property
    def all_mode_countries(self) -> frozenset[str]:
        out: set[str] = set()
        for year in self.years:
            out |= self.mode_sets[year]
        return frozenset(out)

    def ever_mode(self, country: str) -> bool:
        return any(country in self.mode_sets[y] for y in self.years)


@dataclass(frozen=True)
class MigrationEvent:
    from_year: int
    to_year: int
    from_modes: frozenset[str]
    to_modes: frozenset[str]
    vanished: str

    def __post_init__(self) -> None:
        if not self.from_year < self.to_year:
            raise ValueError(f"event years not increasing: {self.from_year} -> {self.to_year}")
        if self.vanished not in self.from_modes or self.vanished in self.to_modes:
            raise ValueError(f"vanished country {self.vanished!r} inconsistent with mode sets")


@dataclass(frozen=True)
class MobilityProfile:
    author_id: str
    label: MobilityLabel
    origin: str
    destination: str
    events: tuple[MigrationEvent, ...]
    series: YearCountrySeries
    first_year: int
    last_year: int

    @property
    def n_events(self) -> int:
        return len(self.events)


def build_series(dossier: AuthorDossier) -> YearCountrySeries:
    """Year-by-year country multisets over known-country records."""
    per_year: dict[int, Counter] = {}
    for rec in dossier.records:
        if rec.has_known_country:
            per_year.setdefault(rec.year, Counter())[rec.country] += 1
    years = tuple(sorted(per_year))
    mode_sets = {}
    for y in years:
        top = max(per_year[y].values())
        mode_sets[y] = frozenset(c for c, n in per_year[y].items() if n == top)
    return YearCountrySeries(
        years=years,
        counts={y: dict(per_year[y]) for y in years},
        mode_sets=mode_sets,
    )


def mode_countries(dossier: AuthorDossier, year: int) -> frozenset[str]:
    """Countries with maximal multiplicity among the year's records."""
    return build_series(dossier).mode_set(year)


def detect_events(series: YearCountrySeries) -> list[MigrationEvent]:
    """One event per mode country that disappears between consecutive
    active years; mode sets that merely grow produce nothing."""
    events = []
    for y1, y2 in zip(series.years, series.years[1:]):
        m1, m2 = series.mode_sets[y1], series.mode_sets[y2]
        for vanished in sorted(m1 - m2):
            events.append(
                MigrationEvent(from_year=y1, to_year=y2, from_modes=m1, to_modes=m2, vanished=vanished)
            )
    return events


def _resolve_endpoint(series: YearCountrySeries, order: Sequence[int]) -> str:
    """First year in ``order`` with a singleton mode set decides; ties fall
    through to the next year; exhausted → UNDETERMINED."""
    for y in order:
        modes = series.mode_sets[y]
        if len(modes) == 1:
            return next(iter(modes))
    return UNDETERMINED


def academic_origin(series: YearCountrySeries) -> str:
    """Mode country of the first active year (falling forward past ties)."""
    if not series.years:
        return UNDETERMINED
    return _resolve_endpoint(series, series.years)


def academic_destination(series: YearCountrySeries) -> str:
    """Mode country of the latest active year (falling backward past ties)."""
    if not series.years:
        return UNDETERMINED
    return _resolve_endpoint(series, tuple(reversed(series.years)))


def classify_mobility(dossier: AuthorDossier, series: YearCountrySeries, focal: str) -> MobilityLabel:
    """Assign one of the seven mobility labels relative to ``focal``.

    Authors whose mode sets never contain the focal country fall outside
    the focal population entirely, so that check comes first. Endpoint
    UNDETERMINED values compare as not-equal to focal and are logged.
    """
    if not series.ever_mode(focal):
        return MobilityLabel.NON_FOCAL
    if len(dossier.pub_ids) == 1:
        return MobilityLabel.SINGLE_PAPER
    events = detect_events(series)
    if not events:
        return MobilityLabel.NON_MOVER

    origin = academic_origin(series)
    destination = academic_destination(series)
    if UNDETERMINED in (origin, destination):
        logger.info(
            "author %s has undetermined endpoint (origin=%s, destination=%s)",
            dossier.author_id,
            origin,
            destination,
        )
    if origin != focal and destination == focal:
        return MobilityLabel.IMMIGRANT
    if origin == focal and destination != focal:
        return MobilityLabel.EMIGRANT
    if origin == focal and destination == focal:
        return MobilityLabel.RETURN_MIGRANT
    return MobilityLabel.TRANSIENT


def build_profile(dossier: AuthorDossier, focal: str) -> MobilityProfile:
    """Series, events, endpoints, and label for one author."""
    series = build_series(dossier)
    label = classify_mobility(dossier, series, focal)
    return MobilityProfile(
        author_id=dossier.author_id,
        label=label,
        origin=academic_origin(series),
        destination=academic_destination(series),
        events=tuple(detect_events(series)),
        series=series,
        first_year=dossier.first_year,
        last_year=dossier.last_year,
    )


def intermediate_countries(profile: MobilityProfile, focal: str) -> dict[str, float]:
    """Equal-weight frequency map of a return migrant's away countries.

    Weights are per distinct country, not per away year, and sum to 1.
    """
    if profile.label is not MobilityLabel.RETURN_MIGRANT:
        raise ValueError(f"author {profile.author_id!r} is {profile.label.value}, not a return migrant")
    away: set[str] = set()
    for y in profile.series.years:
        modes = profile.series.mode_sets[y]
        if focal not in modes:
            away |= modes
    if not away:
        return {}
    w = 1.0 / len(away)
    return {c: w for c in sorted(away)}


@dataclass(frozen=True)
class FlowEdge:
    origin: str
    destination: str
    weight: float
    major_field: str | None = None

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError("flow weight must be non-negative")


def build_flow_network(
    profiles: Iterable[MobilityProfile],
    focal: str,
    *,
    group_by_field: bool = False,
    fields: Mapping[str, str] | None = None,
    include_transients: bool = False,
    measure: str = "movers",
) -> list[FlowEdge]:
    """Aggregate migrant origin→destination flows into weighted edges.

    ``measure`` is "movers" (one unit per migrant) or "moves" (the
    migrant's event count). Immigrants, emigrants and return migrants put
    their weight on the origin→destination edge (return migrants form a
    focal self-loop); transients, when included, split theirs equally
    across the two passage edges (origin→focal, focal→destination).
    Profiles with an undetermined endpoint are skipped with a warning.
    """
    if measure not in ("movers", "moves"):
        raise ValueError(f"unknown flow measure {measure!r}")
    if group_by_field and fields is None:
        raise ValueError("group_by_field requires a fields mapping")

    weights: dict[tuple[str, str, str | None], float] = {}
    skipped = 0

    def add(origin: str, destination: str, major: str | None, w: float) -> None:
        key = (origin, destination, major)
        weights[key] = weights.get(key, 0.0) + w

    for p in profiles:
        if p.label not in MIGRANT_LABELS:
            continue
        if p.label is MobilityLabel.TRANSIENT and not include_transients:
            continue
        if UNDETERMINED in (p.origin, p.destination):
            skipped += 1
            continue
        major = fields.get(p.author_id) if group_by_field and fields else None
        unit = 1.0 if measure == "movers" else float(p.n_events)
        if p.label is MobilityLabel.TRANSIENT:
            add(p.origin, focal, major, unit / 2.0)
            add(focal, p.destination, major, unit / 2.0)
        else:
            add(p.origin, p.destination, major, unit)

    if skipped:
        logger.warning("flow network: skipped %d migrants with undetermined endpoints", skipped)
    return [
        FlowEdge(origin=o, destination=d, weight=w, major_field=m)
        for (o, d, m), w in sorted(weights.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or ""))
    ]
