"""Synthetic corpora with known ground truth.

Every pipeline stage gets an oracle: career patterns realize mobility
labels by construction, affiliation strings resolve through the packaged
gazetteer, merged author IDs concatenate two incompatible researchers,
and citation counts follow configured per-field means.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geoinfer import Gazetteer, load_default_gazetteer
from .mobility import MobilityLabel, MobilityProfile
from .records import UNKNOWN, AuthorshipRecord, Corpus
from .taxonomy import MAJOR_FIELDS, AsjcTable, load_default_table

logger = logging.getLogger(__name__)

DEFAULT_FIELD_CITATION_MEANS = {
    "physical": 6.5,
    "life": 4.3,
    "health": 1.9,
    "social": 0.6,
}

_PATTERN_LABELS = (
    MobilityLabel.SINGLE_PAPER,
    MobilityLabel.NON_MOVER,
    MobilityLabel.IMMIGRANT,
    MobilityLabel.EMIGRANT,
    MobilityLabel.RETURN_MIGRANT,
    MobilityLabel.TRANSIENT,
    MobilityLabel.NON_FOCAL,
)


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for one synthetic corpus; every knob is independent."""

    counts: Mapping[str, int]
    start_year: int = 1996
    end_year: int = 2020
    focal: str = "RU"
    partner_countries: tuple[str, ...] = ()
    field_citation_means: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_FIELD_CITATION_MEANS)
    )
    citation_sigma: float = 0.25
    suspicious_fraction: float = 0.0
    missing_country_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        known = {label.value for label in _PATTERN_LABELS}
        for key, n in self.counts.items():
            if key not in known:
                raise ValueError(f"unknown mobility label {key!r} in counts")
            if n < 0:
                raise ValueError(f"negative count for {key!r}")
        if self.end_year - self.start_year < 9:
            raise ValueError("year range must span at least 10 years")
        if not 0.0 <= self.suspicious_fraction < 1.0:
            raise ValueError("suspicious_fraction must be in [0, 1)")
        if not 0.0 <= self.missing_country_fraction < 1.0:
            raise ValueError("missing_country_fraction must be in [0, 1)")
        if self.citation_sigma < 0:
            raise ValueError("citation_sigma must be non-negative")
        missing = [m for m in MAJOR_FIELDS if m not in self.field_citation_means]
        if missing:
            raise ValueError(f"field_citation_means missing fields {missing}")

    def n_pattern_authors(self) -> int:
        return sum(self.counts.values())


@dataclass
class AuthorTruth:
    """What the generator knows about one emitted author ID."""

    author_id: str
    label: str | None
    origin: str | None
    destination: str | None
    major_field: str | None
    first_year: int
    last_year: int
    merged: dict[str, str] | None = None  # pub_id -> true researcher tag

    def as_dict(self) -> dict:
        out = {
            "author_id": self.author_id,
            "label": self.label,
            "origin": self.origin,
            "destination": self.destination,
            "major_field": self.major_field,
            "first_year": self.first_year,
            "last_year": self.last_year,
        }
        if self.merged is not None:
            out["merged"] = dict(sorted(self.merged.items()))
        return out


@dataclass
class GroundTruth:
    authors: dict[str, AuthorTruth] = field(default_factory=dict)
    text_countries: dict[str, str] = field(default_factory=dict)
    blanked_keys: set[tuple[str, str, str]] = field(default_factory=set)  # (author, pub, text)

    @property
    def pattern_authors(self) -> list[AuthorTruth]:
        return [t for t in self.authors.values() if t.label is not None]

    @property
    def merged_authors(self) -> list[AuthorTruth]:
        return [t for t in self.authors.values() if t.merged is not None]


class _TextBook:
    """Deterministic affiliation-text factory backed by the gazetteer."""

    def __init__(self, gazetteer: Gazetteer, table: AsjcTable):
        self.cities = gazetteer.cities_by_country()
        self.names = gazetteer.country_names()
        self.topics = list(table.subfields)

    def usable(self, country: str) -> bool:
        return country in self.cities and country in self.names

    def make(self, rng: np.random.Generator, country: str) -> str:
        city = str(rng.choice(self.cities[country])).title()
        topic = str(rng.choice(self.topics)).title()
        style = int(rng.integers(0, 3))
        if style == 0:
            return f"Department of {topic}, University of {city}, {city}, {self.names[country].title()}"
        if style == 1:
            return f"Institute of {topic}, {city}"
        return f"{city} Center for {topic}, {city}, {self.names[country].title()}"


@dataclass
class _Stint:
    country: str
    years: list[int]


def _career_years(rng: np.random.Generator, config: GeneratorConfig, n_stints: int) -> list[int]:
    """Consecutive active years long enough for ``n_stints`` segments."""
    total = int(rng.integers(max(2, n_stints + 1), 2 * n_stints + 6))
    total = min(total, config.end_year - config.start_year + 1)
    first = int(rng.integers(config.start_year, config.end_year - total + 2))
    return list(range(first, first + total))


def _split_stints(
    rng: np.random.Generator, years: list[int], countries: Sequence[str]
) -> list[_Stint]:
    """Partition consecutive years into one non-empty stint per country."""
    n = len(countries)
    cuts = sorted(rng.choice(np.arange(1, len(years)), size=n - 1, replace=False).tolist()) if n > 1 else []
    bounds = [0, *cuts, len(years)]
    return [
        _Stint(country=c, years=years[bounds[i] : bounds[i + 1]]) for i, c in enumerate(countries)
    ]


class _Generator:
    def __init__(self, config: GeneratorConfig, gazetteer: Gazetteer, table: AsjcTable):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.book = _TextBook(gazetteer, table)
        self.table = table
        self.codes_by_field: dict[str, list[int]] = {m: [] for m in MAJOR_FIELDS}
        for code in sorted(table.subfield_of):
            resolved = table.resolve(code)
            if resolved is not None:
                self.codes_by_field[resolved[1]].append(code)
        self.partners: tuple[str, ...] = config.partner_countries or tuple(
            sorted(c for c in gazetteer.countries if c != config.focal and self.book.usable(c))
        )
        self._validate_pool()
        self.pub_counter = 0
        self.records: list[dict] = []
        self.truth = GroundTruth()

    def _validate_pool(self) -> None:
        cfg = self.config
        if not self.book.usable(cfg.focal):
            raise ValueError(f"focal country {cfg.focal!r} has no gazetteer city coverage")
        for c in self.partners:
            if c == cfg.focal:
                raise ValueError("partner pool must not contain the focal country")
            if not self.book.usable(c):
                raise ValueError(f"partner country {c!r} has no gazetteer city coverage")
        needs_partner = sum(
            self.config.counts.get(lab.value, 0)
            for lab in (
                MobilityLabel.IMMIGRANT,
                MobilityLabel.EMIGRANT,
                MobilityLabel.RETURN_MIGRANT,
                MobilityLabel.TRANSIENT,
                MobilityLabel.NON_FOCAL,
            )
        )
        if needs_partner and not self.partners:
            raise ValueError("mover labels configured but the partner-country pool is empty")
        two_partner = self.config.counts.get(MobilityLabel.TRANSIENT.value, 0) + self.config.counts.get(
            MobilityLabel.NON_FOCAL.value, 0
        )
        if two_partner and len(self.partners) < 2:
            raise ValueError("transient/non_focal labels need at least two partner countries")

    # ------------------------------------------------------------------ helpers

    def _new_pub_id(self) -> str:
        self.pub_counter += 1
        return f"P{self.pub_counter:08d}"

    def _pick_partner(self, exclude: frozenset[str] = frozenset()) -> str:
        pool = [c for c in self.partners if c not in exclude]
        return str(self.rng.choice(pool))

    def _pick_field(self) -> str:
        return MAJOR_FIELDS[int(self.rng.integers(0, len(MAJOR_FIELDS)))]

    def _draw_codes(self, primary: str, purity: float) -> tuple[int, ...]:
        n = int(self.rng.integers(1, 4))
        out = []
        for _ in range(n):
            if self.rng.random() < purity:
                pool = self.codes_by_field[primary]
            else:
                other = [m for m in MAJOR_FIELDS if m != primary]
                pool = self.codes_by_field[other[int(self.rng.integers(0, len(other)))]]
            out.append(int(self.rng.choice(pool)))
        return tuple(sorted(set(out)))

    def _citation_split(self, major: str, first_year: int, n_pubs: int) -> list[int]:
        mean = self.config.field_citation_means[major]
        sigma = self.config.citation_sigma
        multiplier = (
            float(self.rng.lognormal(mean=-0.5 * sigma**2, sigma=sigma)) if sigma > 0 else 1.0
        )
        rate = mean * multiplier
        age = max(1, self.config.end_year - first_year)
        lam = rate * age / n_pubs
        return [int(self.rng.poisson(lam)) for _ in range(n_pubs)]

    def _emit_author(
        self,
        author_id: str,
        stints: list[_Stint],
        major: str,
        purity: float,
        max_pubs_per_year: int = 3,
    ) -> None:
        """Rows for one researcher: one affiliation text per stint, 1-3 pubs
        per active year, citations targeting the configured field mean."""
        pubs: list[dict] = []
        for stint in stints:
            text = self.book.make(self.rng, stint.country)
            self.truth.text_countries.setdefault(text, stint.country)
            for year in stint.years:
                for _ in range(int(self.rng.integers(1, max_pubs_per_year + 1))):
                    pubs.append(
                        {
                            "author_id": author_id,
                            "pub_id": self._new_pub_id(),
                            "year": year,
                            "affiliation_text": text,
                            "country": stint.country,
                            "asjc_codes": self._draw_codes(major, purity),
                        }
                    )
        first_year = min(p["year"] for p in pubs)
        for pub, cites in zip(pubs, self._citation_split(major, first_year, len(pubs))):
            pub["citation_count"] = cites
        self.records.extend(pubs)

    # ------------------------------------------------------------------ patterns

    def _stints_for_label(self, label: MobilityLabel) -> list[_Stint]:
        cfg = self.config
        if label is MobilityLabel.SINGLE_PAPER:
            year = int(self.rng.integers(cfg.start_year, cfg.end_year + 1))
            return [_Stint(country=cfg.focal, years=[year])]
        if label is MobilityLabel.NON_MOVER:
            return _split_stints(self.rng, _career_years(self.rng, cfg, 1), [cfg.focal])
        if label is MobilityLabel.IMMIGRANT:
            a = self._pick_partner()
            return _split_stints(self.rng, _career_years(self.rng, cfg, 2), [a, cfg.focal])
        if label is MobilityLabel.EMIGRANT:
            a = self._pick_partner()
            return _split_stints(self.rng, _career_years(self.rng, cfg, 2), [cfg.focal, a])
        if label is MobilityLabel.RETURN_MIGRANT:
            a = self._pick_partner()
            return _split_stints(self.rng, _career_years(self.rng, cfg, 3), [cfg.focal, a, cfg.focal])
        if label is MobilityLabel.TRANSIENT:
            a = self._pick_partner()
            b = self._pick_partner(exclude={a})
            return _split_stints(self.rng, _career_years(self.rng, cfg, 3), [a, cfg.focal, b])
        if label is MobilityLabel.NON_FOCAL:
            a = self._pick_partner()
            b = self._pick_partner(exclude={a})
            return _split_stints(self.rng, _career_years(self.rng, cfg, 2), [a, b])
        raise AssertionError(label)

    def _pattern_truth(self, author_id: str, label: MobilityLabel, stints: list[_Stint], major: str) -> AuthorTruth:
        if label is MobilityLabel.SINGLE_PAPER:
            origin = destination = self.config.focal
        else:
            origin = stints[0].country
            destination = stints[-1].country
        return AuthorTruth(
            author_id=author_id,
            label=label.value,
            origin=origin,
            destination=destination,
            major_field=major,
            first_year=min(s.years[0] for s in stints),
            last_year=max(s.years[-1] for s in stints),
        )

    def _generate_patterns(self) -> None:
        idx = 0
        for label in _PATTERN_LABELS:
            for _ in range(self.config.counts.get(label.value, 0)):
                author_id = f"A{idx:06d}"
                idx += 1
                stints = self._stints_for_label(label)
                major = self._pick_field()
                purity = float(self.rng.uniform(0.6, 0.95))
                cap = 1 if label is MobilityLabel.SINGLE_PAPER else 3
                self._emit_author(author_id, stints, major, purity, max_pubs_per_year=cap)
                self.truth.authors[author_id] = self._pattern_truth(author_id, label, stints, major)

    def _generate_merged(self) -> None:
        """Suspicious IDs: two mono-country researchers under one ID, with
        disjoint countries, disjoint fields, disjoint eras, enough combined
        publications to trip the volume threshold."""
        f = self.config.suspicious_fraction
        if f == 0:
            return
        n_base = self.config.n_pattern_authors()
        n_merged = int(round(f * n_base / (1.0 - f)))
        if n_merged == 0:
            return
        if len(self.partners) < 2:
            raise ValueError("merged-ID generation needs at least two partner countries")
        cfg = self.config
        span = cfg.end_year - cfg.start_year
        early = list(range(cfg.start_year, cfg.start_year + span // 2 - 2))
        late = list(range(cfg.end_year - span // 2 + 3, cfg.end_year + 1))
        for k in range(n_merged):
            author_id = f"S{k:06d}"
            c1 = self._pick_partner()
            c2 = self._pick_partner(exclude={c1})
            f1 = self._pick_field()
            f2 = [m for m in MAJOR_FIELDS if m != f1][int(self.rng.integers(0, 3))]
            merged: dict[str, str] = {}
            for tag, country, major, years in (
                ("#1", c1, f1, early),
                ("#2", c2, f2, late),
            ):
                text = self.book.make(self.rng, country)
                self.truth.text_countries.setdefault(text, country)
                n_pubs = int(self.rng.integers(147, 161))
                pub_years = [
                    int(y) for y in np.sort(self.rng.choice(years, size=n_pubs, replace=True))
                ]
                cites = self._citation_split(major, pub_years[0], n_pubs)
                for year, cite in zip(pub_years, cites):
                    pub_id = self._new_pub_id()
                    merged[pub_id] = f"{author_id}{tag}"
                    self.records.append(
                        {
                            "author_id": author_id,
                            "pub_id": pub_id,
                            "year": year,
                            "affiliation_text": text,
                            "country": country,
                            "asjc_codes": self._draw_codes(major, 1.0),
                            "citation_count": cite,
                        }
                    )
            self.truth.authors[author_id] = AuthorTruth(
                author_id=author_id,
                label=None,
                origin=None,
                destination=None,
                major_field=None,
                first_year=early[0],
                last_year=late[-1],
                merged=merged,
            )

    def _blank_countries(self) -> None:
        f = self.config.missing_country_fraction
        if f == 0:
            return
        n = len(self.records)
        k = int(f * n)
        if k == 0:
            return
        for idx in self.rng.choice(n, size=k, replace=False):
            row = self.records[int(idx)]
            self.truth.blanked_keys.add((row["author_id"], row["pub_id"], row["affiliation_text"]))
            row["country"] = UNKNOWN

    def run(self) -> tuple[Corpus, GroundTruth]:
        self._generate_patterns()
        self._generate_merged()
        self._blank_countries()
        records = tuple(
            AuthorshipRecord(
                author_id=r["author_id"],
                pub_id=r["pub_id"],
                year=r["year"],
                affiliation_text=r["affiliation_text"],
                country=r["country"],
                asjc_codes=r["asjc_codes"],
                citation_count=r["citation_count"],
            )
            for r in self.records
        )
        corpus = Corpus(records=records, snapshot_date=date(self.config.end_year, 12, 31))
        logger.info(
            "generated %d records for %d author IDs (%d merged)",
            len(records),
            len(self.truth.authors),
            len(self.truth.merged_authors),
        )
        return corpus, self.truth


def generate_corpus(
    config: GeneratorConfig,
    gazetteer: Gazetteer | None = None,
    table: AsjcTable | None = None,
) -> tuple[Corpus, GroundTruth]:
    """Build a corpus whose labels, countries, fields, partitions, and
    citation levels are all known by construction."""
    gazetteer = gazetteer or load_default_gazetteer()
    table = table or load_default_table()
    return _Generator(config, gazetteer, table).run()


def generate_labeled_affiliations(
    n: int, seed: int = 0, gazetteer: Gazetteer | None = None, table: AsjcTable | None = None
) -> list[tuple[str, str]]:
    """(affiliation_text, true_country) pairs, all gazetteer-resolvable."""
    gazetteer = gazetteer or load_default_gazetteer()
    table = table or load_default_table()
    book = _TextBook(gazetteer, table)
    rng = np.random.default_rng(seed)
    pool = sorted(c for c in gazetteer.countries if book.usable(c))
    out = []
    for _ in range(n):
        country = str(rng.choice(pool))
        out.append((book.make(rng, country), country))
    return out


# ---------------------------------------------------------------------- scoring


@dataclass
class ScoreReport:
    label_accuracy: float | None = None
    origin_accuracy: float | None = None
    destination_accuracy: float | None = None
    fill_accuracy: float | None = None
    pair_precision: float | None = None
    pair_recall: float | None = None
    pair_f1: float | None = None
    n_scored_labels: int = 0
    n_scored_fills: int = 0
    n_scored_pairs: int = 0

    def as_dict(self) -> dict:
        def r(x):
            return None if x is None else round(x, 6)

        return {
            "label_accuracy": r(self.label_accuracy),
            "origin_accuracy": r(self.origin_accuracy),
            "destination_accuracy": r(self.destination_accuracy),
            "fill_accuracy": r(self.fill_accuracy),
            "pair_precision": r(self.pair_precision),
            "pair_recall": r(self.pair_recall),
            "pair_f1": r(self.pair_f1),
            "n_scored_labels": self.n_scored_labels,
            "n_scored_fills": self.n_scored_fills,
            "n_scored_pairs": self.n_scored_pairs,
        }


def _score_labels(report: ScoreReport, truth: GroundTruth, profiles: Iterable[MobilityProfile]) -> None:
    by_id = {p.author_id: p for p in profiles}
    hits = origin_hits = dest_hits = n = 0
    for t in truth.pattern_authors:
        profile = by_id.get(t.author_id)
        if profile is None:
            continue
        n += 1
        hits += profile.label.value == t.label
        origin_hits += profile.origin == t.origin
        dest_hits += profile.destination == t.destination
    report.n_scored_labels = n
    if n:
        report.label_accuracy = hits / n
        report.origin_accuracy = origin_hits / n
        report.destination_accuracy = dest_hits / n


def _score_fill(
    report: ScoreReport, truth: GroundTruth, original: Corpus, filled: Corpus
) -> None:
    if len(original) != len(filled):
        raise ValueError("original and filled corpora differ in length")
    hits = n = 0
    for before, after in zip(original.records, filled.records):
        if before.has_known_country:
            continue
        expected = truth.text_countries.get(before.affiliation_text)
        if expected is None:
            continue
        n += 1
        hits += after.country == expected
    report.n_scored_fills = n
    if n:
        report.fill_accuracy = hits / n


def _score_pairs(report: ScoreReport, truth: GroundTruth, revised: Corpus) -> None:
    """Pairwise precision/recall over record pairs of each merged ID.

    Counted combinatorially from the (true component, revised ID)
    contingency table of each original ID rather than by enumerating
    pairs.
    """
    by_original: dict[str, list[AuthorshipRecord]] = {}
    for rec in revised.records:
        original = rec.author_id.split("::", 1)[0]
        if original in truth.authors and truth.authors[original].merged is not None:
            by_original.setdefault(original, []).append(rec)

    def pairs(n: int) -> int:
        return n * (n - 1) // 2

    tp = pred_pairs = true_pairs = n_pairs = 0
    for original, recs in by_original.items():
        component = truth.authors[original].merged
        cells: dict[tuple[str, str], int] = {}
        pred_sizes: dict[str, int] = {}
        true_sizes: dict[str, int] = {}
        for rec in recs:
            true_tag = component.get(rec.pub_id, "?")
            cells[(true_tag, rec.author_id)] = cells.get((true_tag, rec.author_id), 0) + 1
            pred_sizes[rec.author_id] = pred_sizes.get(rec.author_id, 0) + 1
            true_sizes[true_tag] = true_sizes.get(true_tag, 0) + 1
        tp += sum(pairs(n) for n in cells.values())
        pred_pairs += sum(pairs(n) for n in pred_sizes.values())
        true_pairs += sum(pairs(n) for n in true_sizes.values())
        n_pairs += pairs(len(recs))

    fp = pred_pairs - tp
    fn = true_pairs - tp
    report.n_scored_pairs = n_pairs
    if tp + fp:
        report.pair_precision = tp / (tp + fp)
    if tp + fn:
        report.pair_recall = tp / (tp + fn)
    if report.pair_precision is not None and report.pair_recall is not None:
        p, r = report.pair_precision, report.pair_recall
        report.pair_f1 = 2 * p * r / (p + r) if (p + r) else 0.0


def score_against_truth(
    truth: GroundTruth,
    *,
    profiles: Sequence[MobilityProfile] | None = None,
    original_corpus: Corpus | None = None,
    filled_corpus: Corpus | None = None,
    revised_corpus: Corpus | None = None,
) -> ScoreReport:
    """Compare pipeline outputs with generator ground truth.

    Each metric is computed only when its inputs are supplied: mobility
    labels and endpoints from ``profiles``, country-fill accuracy from the
    original/filled corpus pair, and disambiguation pair metrics from the
    revised corpus.
    """
    report = ScoreReport()
    if profiles is not None:
        _score_labels(report, truth, profiles)
    if filled_corpus is not None:
        if original_corpus is None:
            raise ValueError("fill scoring needs the original corpus too")
        _score_fill(report, truth, original_corpus, filled_corpus)
    if revised_corpus is not None:
        _score_pairs(report, truth, revised_corpus)
    return report


# ------------------------------------------------------------------ truth files


def write_truth_jsonl(truth: GroundTruth, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for author_id in sorted(truth.authors):
            fh.write(json.dumps(truth.authors[author_id].as_dict(), sort_keys=True) + "\n")
        meta = {
            "text_countries": dict(sorted(truth.text_countries.items())),
            "blanked_keys": sorted(list(k) for k in truth.blanked_keys),
        }
        fh.write(json.dumps({"__meta__": meta}, sort_keys=True) + "\n")


def read_truth_jsonl(path) -> GroundTruth:
    truth = GroundTruth()
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if "__meta__" in obj:
                meta = obj["__meta__"]
                truth.text_countries = dict(meta.get("text_countries", {}))
                truth.blanked_keys = {tuple(k) for k in meta.get("blanked_keys", [])}
                continue
            truth.authors[obj["author_id"]] = AuthorTruth(
                author_id=obj["author_id"],
                label=obj.get("label"),
                origin=obj.get("origin"),
                destination=obj.get("destination"),
                major_field=obj.get("major_field"),
                first_year=obj["first_year"],
                last_year=obj["last_year"],
                merged=obj.get("merged"),
            )
    return truth
