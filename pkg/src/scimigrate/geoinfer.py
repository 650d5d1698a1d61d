"""Country inference for affiliation strings via a priority gazetteer.

Entries carry a priority: 3 for country names, 2 for cities, 1 for
institutions. The highest-priority match decides; a tie between two
different countries at the winning priority yields UNKNOWN rather than a
guess.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .records import UNKNOWN, Corpus, with_records

logger = logging.getLogger(__name__)

PRIORITY_COUNTRY = 3
PRIORITY_CITY = 2
PRIORITY_INSTITUTION = 1

_NON_WORD = re.compile(r"[\W_]+", re.UNICODE)


def normalize(text: str) -> list[str]:
    """Lowercase, strip diacritics, collapse punctuation; return word tokens."""
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return _NON_WORD.sub(" ", stripped.lower()).split()


@dataclass
class Gazetteer:
    """Phrase -> (country, priority) lookup over normalized word n-grams."""

    entries: dict[tuple[str, ...], tuple[str, int]] = field(default_factory=dict)
    max_len: int = 1

    @classmethod
    def from_rows(cls, rows) -> "Gazetteer":
        entries: dict[tuple[str, ...], tuple[str, int]] = {}
        max_len = 1
        for row in rows:
            token = str(row["token"])
            country = str(row["country"]).strip().upper()
            priority = int(row["priority"])
            if priority not in (PRIORITY_INSTITUTION, PRIORITY_CITY, PRIORITY_COUNTRY):
                raise ValueError(f"gazetteer priority {priority} for {token!r} not in 1..3")
            if len(country) != 2 or not country.isalpha():
                raise ValueError(f"gazetteer country {country!r} for {token!r} not alpha-2")
            phrase = tuple(normalize(token))
            if not phrase:
                raise ValueError(f"gazetteer token {token!r} normalizes to nothing")
            if phrase in entries and entries[phrase] != (country, priority):
                raise ValueError(f"gazetteer token {token!r} mapped twice inconsistently")
            entries[phrase] = (country, priority)
            max_len = max(max_len, len(phrase))
        return cls(entries=entries, max_len=max_len)

    @classmethod
    def from_csv(cls, path) -> "Gazetteer":
        path = Path(path)
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            expected = {"token", "country", "priority"}
            if reader.fieldnames is None or set(reader.fieldnames) != expected:
                raise ValueError(
                    f"{path}: gazetteer header {reader.fieldnames} != {sorted(expected)}"
                )
            return cls.from_rows(reader)

    @property
    def countries(self) -> frozenset[str]:
        return frozenset(country for country, _ in self.entries.values())

    def cities_by_country(self) -> dict[str, list[str]]:
        """Priority-2 phrases grouped by country (used by corpus generators)."""
        out: dict[str, list[str]] = {}
        for phrase, (country, priority) in self.entries.items():
            if priority == PRIORITY_CITY:
                out.setdefault(country, []).append(" ".join(phrase))
        for country in out:
            out[country].sort()
        return out

    def country_names(self) -> dict[str, str]:
        """One priority-3 display phrase per country code (shortest, then alphabetical)."""
        out: dict[str, str] = {}
        for phrase, (country, priority) in sorted(self.entries.items()):
            if priority == PRIORITY_COUNTRY:
                name = " ".join(phrase)
                if country not in out or (len(name), name) < (len(out[country]), out[country]):
                    out[country] = name
        return out


def load_default_gazetteer() -> Gazetteer:
    ref = resources.files("scimigrate").joinpath("data/gazetteer.csv")
    with resources.as_file(ref) as path:
        return Gazetteer.from_csv(path)


@dataclass(frozen=True)
class InferenceResult:
    country: str
    confidence: float
    matched_token: str | None = None

    def __post_init__(self) -> None:
        if (self.country == UNKNOWN) != (self.confidence == 0.0):
            raise ValueError("UNKNOWN must pair with zero confidence and vice versa")


_NO_MATCH = InferenceResult(country=UNKNOWN, confidence=0.0, matched_token=None)


def _matches(words: list[str], gazetteer: Gazetteer) -> list[tuple[str, str, int]]:
    """All (phrase, country, priority) hits in the token stream, longest
    phrase first.

    Once a span matches, its words are consumed so that shorter phrases
    nested inside it cannot fire again ("santiago de compostela" must not
    also count as "santiago").
    """
    consumed = [False] * len(words)
    hits: list[tuple[str, str, int]] = []
    for n in range(min(gazetteer.max_len, len(words)), 0, -1):
        for start in range(len(words) - n + 1):
            span = range(start, start + n)
            if any(consumed[i] for i in span):
                continue
            phrase = tuple(words[start : start + n])
            entry = gazetteer.entries.get(phrase)
            if entry is not None:
                hits.append((" ".join(phrase), entry[0], entry[1]))
                for i in span:
                    consumed[i] = True
    return hits


def infer_country(affiliation_text: str, gazetteer: Gazetteer) -> InferenceResult:
    """Highest-priority gazetteer match for a free-text affiliation.

    A tie between different countries at the winning priority yields
    UNKNOWN. Confidence is priority/3 of the winning evidence.
    """
    words = normalize(affiliation_text)
    if not words:
        return _NO_MATCH
    hits = _matches(words, gazetteer)
    if not hits:
        return _NO_MATCH
    best = max(priority for _, _, priority in hits)
    winners = [(phrase, country) for phrase, country, priority in hits if priority == best]
    countries = {country for _, country in winners}
    if len(countries) != 1:
        return _NO_MATCH
    return InferenceResult(country=winners[0][1], confidence=best / 3.0, matched_token=winners[0][0])


@dataclass
class FillReport:
    """Outcome of one country-filling pass over a corpus."""

    n_records: int = 0
    n_considered: int = 0
    n_filled: int = 0
    n_still_unknown: int = 0
    filled_by_country: dict[str, int] = field(default_factory=dict)

    @property
    def fill_rate(self) -> float:
        return self.n_filled / self.n_considered if self.n_considered else 0.0

    def as_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_considered": self.n_considered,
            "n_filled": self.n_filled,
            "n_still_unknown": self.n_still_unknown,
            "fill_rate": round(self.fill_rate, 4),
            "filled_by_country": dict(sorted(self.filled_by_country.items())),
        }


def fill_missing_countries(corpus: Corpus, gazetteer: Gazetteer) -> tuple[Corpus, FillReport]:
    """Replace UNKNOWN record countries with gazetteer inferences.

    Records with a known country are passed through untouched; inference
    failures stay UNKNOWN and are counted, never guessed.
    """
    report = FillReport(n_records=len(corpus))
    out = []
    cache: dict[str, InferenceResult] = {}
    for rec in corpus.records:
        if rec.has_known_country:
            out.append(rec)
            continue
        report.n_considered += 1
        hit = cache.get(rec.affiliation_text)
        if hit is None:
            hit = infer_country(rec.affiliation_text, gazetteer)
            cache[rec.affiliation_text] = hit
        if hit.country == UNKNOWN:
            report.n_still_unknown += 1
            out.append(rec)
        else:
            report.n_filled += 1
            report.filled_by_country[hit.country] = report.filled_by_country.get(hit.country, 0) + 1
            out.append(dataclasses.replace(rec, country=hit.country))
    logger.info(
        "fill_missing_countries: filled %d of %d unknown records (%.1f%%)",
        report.n_filled,
        report.n_considered,
        100 * report.fill_rate,
    )
    return with_records(corpus, out), report


def evaluate_inference(labeled: Sequence[tuple[str, str]], gazetteer: Gazetteer) -> float:
    """Exact-match accuracy on (affiliation_text, true_country) pairs.

    UNKNOWN predictions count as misses.
    """
    if not labeled:
        raise ValueError("labeled evaluation set is empty")
    hits = sum(
        1 for text, expected in labeled if infer_country(text, gazetteer).country == expected
    )
    return hits / len(labeled)
