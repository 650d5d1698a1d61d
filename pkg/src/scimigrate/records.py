"""Authorship-record schema, corpus parsing/validation, and per-author grouping.

The atomic unit is one author-affiliation-publication linkage. A publication
with affiliations in several countries appears as one row per (affiliation,
country) pair, so that per-year country multisets are unambiguous downstream.
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

UNKNOWN = "UNKNOWN"
MIN_YEAR = 1900

CSV_COLUMNS = [
    "author_id",
    "pub_id",
    "year",
    "affiliation_text",
    "country",
    "asjc_codes",
    "citation_count",
]


class SchemaMismatchError(ValueError):
    """Input file header does not match, or too many rows are malformed."""


@dataclass(frozen=True)
class AuthorshipRecord:
    """One author-affiliation-publication linkage."""

    author_id: str
    pub_id: str
    year: int
    affiliation_text: str
    country: str  # ISO 3166-1 alpha-2, or UNKNOWN
    asjc_codes: tuple[int, ...]
    citation_count: int

    @property
    def has_known_country(self) -> bool:
        return self.country != UNKNOWN

    def dedup_key(self) -> tuple[str, str, str, str]:
        return (self.author_id, self.pub_id, self.affiliation_text, self.country)


@dataclass(frozen=True)
class Corpus:
    """An ordered, validated collection of authorship records."""

    records: tuple[AuthorshipRecord, ...]
    snapshot_date: date

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[AuthorshipRecord]:
        return iter(self.records)

    @property
    def snapshot_year(self) -> int:
        return self.snapshot_date.year


@dataclass(frozen=True)
class AuthorDossier:
    """All records that share one (possibly revised) author ID.

    Records are kept in a canonical sort order so that grouping is
    insensitive to input row order.
    """

    author_id: str
    records: tuple[AuthorshipRecord, ...]

    def __post_init__(self) -> None:
        if not self.records:
            raise ValueError(f"empty dossier for author {self.author_id!r}")

    @property
    def first_year(self) -> int:
        return min(r.year for r in self.records)

    @property
    def last_year(self) -> int:
        return max(r.year for r in self.records)

    @property
    def pub_ids(self) -> frozenset[str]:
        return frozenset(r.pub_id for r in self.records)

    @property
    def known_countries(self) -> frozenset[str]:
        return frozenset(r.country for r in self.records if r.has_known_country)

    def subject_annotations(self) -> list[tuple[str, int]]:
        """Distinct (pub_id, asjc_code) pairs, sorted.

        Subject codes belong to the publication, so a publication split into
        several affiliation rows still contributes each code exactly once.
        """
        pairs = {(r.pub_id, c) for r in self.records for c in r.asjc_codes}
        return sorted(pairs)


@dataclass
class RowError:
    line: int
    reason: str

    def as_dict(self) -> dict:
        return {"line": self.line, "reason": self.reason}


@dataclass
class ParseReport:
    """What happened during one parse: totals, rejects, duplicates."""

    n_rows: int = 0
    n_parsed: int = 0
    n_duplicates: int = 0
    errors: list[RowError] = field(default_factory=list)

    @property
    def n_malformed(self) -> int:
        return len(self.errors)

    def as_dict(self) -> dict:
        return {
            "n_rows": self.n_rows,
            "n_parsed": self.n_parsed,
            "n_duplicates": self.n_duplicates,
            "n_malformed": self.n_malformed,
            "errors": [e.as_dict() for e in self.errors],
        }


def _parse_asjc_field(raw) -> tuple[int, ...]:
    """Accept a ';'-separated string (CSV) or a list of ints (JSON lines)."""
    if raw is None:
        return ()
    if isinstance(raw, (list, tuple)):
        codes = [int(c) for c in raw]
    else:
        text = str(raw).strip()
        if not text:
            return ()
        codes = [int(part) for part in text.split(";") if part.strip()]
    for c in codes:
        if not 1000 <= c <= 9999:
            raise ValueError(f"ASJC code {c} is not a 4-digit code")
    return tuple(codes)


def _build_record(raw: dict, snapshot_year: int) -> AuthorshipRecord:
    """Validate one raw row dict; raises ValueError with a reason on failure."""
    author_id = str(raw.get("author_id") or "").strip()
    pub_id = str(raw.get("pub_id") or "").strip()
    if not author_id:
        raise ValueError("missing author_id")
    if not pub_id:
        raise ValueError("missing pub_id")

    try:
        year = int(raw.get("year"))
    except (TypeError, ValueError):
        raise ValueError(f"year {raw.get('year')!r} is not an integer")
    if not MIN_YEAR <= year <= snapshot_year:
        raise ValueError(f"year {year} outside [{MIN_YEAR}, {snapshot_year}]")

    country = str(raw.get("country") or "").strip()
    if not country:
        country = UNKNOWN
    elif country != UNKNOWN:
        if len(country) != 2 or not country.isalpha() or not country.isupper():
            raise ValueError(f"country {country!r} is not a 2-letter uppercase code")

    codes = _parse_asjc_field(raw.get("asjc_codes"))

    try:
        citations = int(raw.get("citation_count"))
    except (TypeError, ValueError):
        raise ValueError(f"citation_count {raw.get('citation_count')!r} is not an integer")
    if citations < 0:
        raise ValueError(f"citation_count {citations} is negative")

    return AuthorshipRecord(
        author_id=author_id,
        pub_id=pub_id,
        year=year,
        affiliation_text=str(raw.get("affiliation_text") or ""),
        country=country,
        asjc_codes=codes,
        citation_count=citations,
    )


def _iter_csv_rows(path: Path) -> Iterator[tuple[int, dict]]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatchError(f"{path}: empty file, expected header {CSV_COLUMNS}")
        if [h.strip() for h in header] != CSV_COLUMNS:
            raise SchemaMismatchError(
                f"{path}: header {header} does not match expected columns {CSV_COLUMNS}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                yield lineno, {"__bad_width__": len(row)}
                continue
            yield lineno, dict(zip(CSV_COLUMNS, row))


def _iter_jsonl_rows(path: Path) -> Iterator[tuple[int, dict]]:
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                yield lineno, {"__bad_json__": True}
                continue
            if not isinstance(obj, dict):
                yield lineno, {"__bad_json__": True}
                continue
            yield lineno, obj


def detect_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    return "csv"


def parse_corpus(
    path,
    *,
    snapshot_year: int | None = None,
    fmt: str | None = None,
    max_malformed_fraction: float = 0.5,
) -> tuple[Corpus, ParseReport]:
    """Parse a corpus file (CSV or JSON lines) into a validated Corpus.

    Malformed rows are collected in the report, never silently dropped.
    Exact duplicates on (author_id, pub_id, affiliation_text, country) are
    removed and counted. Rows whose citation_count disagrees with an
    earlier row for the same pub_id are rejected as validation errors.
    Raises SchemaMismatchError when the header does not match or when more
    than ``max_malformed_fraction`` of data rows are malformed.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    fmt = fmt or detect_format(path)
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown corpus format {fmt!r}")

    effective_snapshot = snapshot_year if snapshot_year is not None else date.today().year

    rows = _iter_csv_rows(path) if fmt == "csv" else _iter_jsonl_rows(path)
    report = ParseReport()
    records: list[AuthorshipRecord] = []
    seen: set[tuple[str, str, str, str]] = set()
    citations_by_pub: dict[str, int] = {}

    for lineno, raw in rows:
        report.n_rows += 1
        if "__bad_width__" in raw:
            report.errors.append(RowError(lineno, f"expected {len(CSV_COLUMNS)} fields, got {raw['__bad_width__']}"))
            continue
        if "__bad_json__" in raw:
            report.errors.append(RowError(lineno, "line is not a JSON object"))
            continue
        try:
            rec = _build_record(raw, effective_snapshot)
        except ValueError as exc:
            report.errors.append(RowError(lineno, str(exc)))
            continue

        prior = citations_by_pub.get(rec.pub_id)
        if prior is not None and prior != rec.citation_count:
            report.errors.append(
                RowError(
                    lineno,
                    f"citation_count {rec.citation_count} disagrees with earlier value "
                    f"{prior} for pub_id {rec.pub_id!r}",
                )
            )
            continue
        citations_by_pub.setdefault(rec.pub_id, rec.citation_count)

        key = rec.dedup_key()
        if key in seen:
            report.n_duplicates += 1
            continue

        seen.add(key)
        records.append(rec)
        report.n_parsed += 1

    if report.n_rows > 0 and report.n_malformed / report.n_rows > max_malformed_fraction:
        raise SchemaMismatchError(
            f"{path}: {report.n_malformed} of {report.n_rows} rows malformed "
            f"(more than {max_malformed_fraction:.0%}); schema probably wrong"
        )

    if report.n_duplicates:
        logger.info("parse_corpus: removed %d exact duplicate rows", report.n_duplicates)
    if report.errors:
        logger.warning("parse_corpus: rejected %d malformed rows", report.n_malformed)

    if snapshot_year is not None:
        snap = date(snapshot_year, 12, 31)
    elif records:
        # Default snapshot: end of the observed publication window.
        snap = date(max(r.year for r in records), 12, 31)
    else:
        snap = date(effective_snapshot, 12, 31)

    return Corpus(records=tuple(records), snapshot_date=snap), report


def write_corpus_csv(corpus: Corpus, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in corpus.records:
            writer.writerow(
                [
                    r.author_id,
                    r.pub_id,
                    r.year,
                    r.affiliation_text,
                    "" if r.country == UNKNOWN else r.country,
                    ";".join(str(c) for c in r.asjc_codes),
                    r.citation_count,
                ]
            )


def write_corpus_jsonl(corpus: Corpus, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in corpus.records:
            fh.write(
                json.dumps(
                    {
                        "author_id": r.author_id,
                        "pub_id": r.pub_id,
                        "year": r.year,
                        "affiliation_text": r.affiliation_text,
                        "country": "" if r.country == UNKNOWN else r.country,
                        "asjc_codes": list(r.asjc_codes),
                        "citation_count": r.citation_count,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def records_from_rows(rows: Iterable[dict], *, snapshot_year: int) -> list[AuthorshipRecord]:
    """Build validated records from in-memory dicts (raises on first error)."""
    return [_build_record(dict(raw), snapshot_year) for raw in rows]


def group_by_author(corpus: Corpus) -> list[AuthorDossier]:
    """Group records into one dossier per distinct author_id.

    Dossiers come back sorted by author_id with canonically sorted records,
    so the result does not depend on input row order.
    """
    by_author: dict[str, list[AuthorshipRecord]] = {}
    for rec in corpus.records:
        by_author.setdefault(rec.author_id, []).append(rec)
    dossiers = []
    for author_id in sorted(by_author):
        recs = sorted(
            by_author[author_id],
            key=lambda r: (r.pub_id, r.year, r.country, r.affiliation_text),
        )
        dossiers.append(AuthorDossier(author_id=author_id, records=tuple(recs)))
    return dossiers


def with_records(corpus: Corpus, records: Iterable[AuthorshipRecord]) -> Corpus:
    return replace(corpus, records=tuple(records))
