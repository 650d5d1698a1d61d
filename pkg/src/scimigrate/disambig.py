"""Splitting of over-merged author IDs.

An author ID is suspicious when it spans more countries or more
publications than one researcher plausibly produces. Suspicious dossiers
are re-clustered from pairwise record similarities (affiliation tokens,
country, subject codes, year proximity) with average-linkage
agglomerative clustering; each resulting cluster gets a revised ID. The
method only ever splits — records under different original IDs are never
merged.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .geoinfer import normalize
from .records import AuthorDossier, AuthorshipRecord, Corpus, group_by_author, with_records

logger = logging.getLogger(__name__)

DEFAULT_CUT_THRESHOLD = 0.5


@dataclass(frozen=True)
class SuspicionCriteria:
    """Strict upper bounds on what one genuine researcher can look like."""

    max_countries: int = 6
    max_publications: int = 292

    def __post_init__(self) -> None:
        if self.max_countries < 1 or self.max_publications < 1:
            raise ValueError("suspicion thresholds must be >= 1")


@dataclass(frozen=True)
class PairScoreWeights:
    w_affiliation_similarity: float = 0.4
    w_country_overlap: float = 0.2
    w_subject_overlap: float = 0.3
    w_year_proximity: float = 0.1

    def __post_init__(self) -> None:
        values = (
            self.w_affiliation_similarity,
            self.w_country_overlap,
            self.w_subject_overlap,
            self.w_year_proximity,
        )
        if any(w < 0 for w in values):
            raise ValueError("pair-score weights must be non-negative")
        if abs(sum(values) - 1.0) > 1e-9:
            raise ValueError(f"pair-score weights sum to {sum(values)}, expected 1")


def flag_suspicious(dossier: AuthorDossier, criteria: SuspicionCriteria) -> bool:
    """True iff the dossier exceeds either plausibility bound (strictly)."""
    if len(dossier.known_countries) > criteria.max_countries:
        return True
    return len(dossier.pub_ids) > criteria.max_publications


def _jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def pair_score(a: AuthorshipRecord, b: AuthorshipRecord, w: PairScoreWeights) -> float:
    """Similarity in [0, 1] between two records of one original author."""
    affil = _jaccard(frozenset(normalize(a.affiliation_text)), frozenset(normalize(b.affiliation_text)))
    country = 1.0 if a.country == b.country else 0.0
    subject = _jaccard(frozenset(a.asjc_codes), frozenset(b.asjc_codes))
    year = max(0.0, 1.0 - abs(a.year - b.year) / 10.0)
    return (
        w.w_affiliation_similarity * affil
        + w.w_country_overlap * country
        + w.w_subject_overlap * subject
        + w.w_year_proximity * year
    )


def _pairwise_jaccard(sets: Sequence[frozenset]) -> np.ndarray:
    """All-pairs Jaccard over a list of sets via a binary incidence matrix."""
    vocab: dict = {}
    for s in sets:
        for item in s:
            vocab.setdefault(item, len(vocab))
    n = len(sets)
    if not vocab:
        return np.ones((n, n))
    incidence = np.zeros((n, len(vocab)), dtype=np.float64)
    for i, s in enumerate(sets):
        for item in s:
            incidence[i, vocab[item]] = 1.0
    inter = incidence @ incidence.T
    sizes = incidence.sum(axis=1)
    union = sizes[:, None] + sizes[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        jac = np.where(union > 0, inter / union, 1.0)
    return jac


def similarity_matrix(records: Sequence[AuthorshipRecord], w: PairScoreWeights) -> np.ndarray:
    """Dense symmetric pairwise similarity with unit diagonal."""
    token_sets = [frozenset(normalize(r.affiliation_text)) for r in records]
    subject_sets = [frozenset(r.asjc_codes) for r in records]
    countries = np.array([r.country for r in records])
    years = np.array([r.year for r in records], dtype=np.float64)

    affil = _pairwise_jaccard(token_sets)
    subject = _pairwise_jaccard(subject_sets)
    country = (countries[:, None] == countries[None, :]).astype(np.float64)
    year = np.maximum(0.0, 1.0 - np.abs(years[:, None] - years[None, :]) / 10.0)

    sim = (
        w.w_affiliation_similarity * affil
        + w.w_country_overlap * country
        + w.w_subject_overlap * subject
        + w.w_year_proximity * year
    )
    np.fill_diagonal(sim, 1.0)
    return np.clip(sim, 0.0, 1.0)


def cluster_records(distance: np.ndarray, cut_threshold: float = DEFAULT_CUT_THRESHOLD) -> list[list[int]]:
    """Average-linkage agglomerative clusters of record indices.

    Merging stops where the average inter-cluster distance would exceed
    ``cut_threshold``. Clusters come back ordered by first record index.
    """
    n = distance.shape[0]
    if n == 0:
        raise ValueError("empty distance matrix")
    if not 0.0 < cut_threshold < 1.0:
        raise ValueError(f"cut threshold {cut_threshold} outside (0, 1)")
    if n == 1:
        return [[0]]
    condensed = squareform(distance, checks=False)
    labels = fcluster(linkage(condensed, method="average"), t=cut_threshold, criterion="distance")
    order: dict[int, int] = {}
    clusters: list[list[int]] = []
    for idx, lab in enumerate(labels):
        if lab not in order:
            order[lab] = len(clusters)
            clusters.append([])
        clusters[order[lab]].append(idx)
    return clusters


@dataclass
class RevisedIdMap:
    """Record-level map from re-clustered records to their revised IDs.

    Keyed by (original_id, pub_id, affiliation_text, country); records of
    authors that were never re-clustered keep their original ID.
    """

    revisions: dict[tuple[str, str, str, str], str] = field(default_factory=dict)

    def revised_id_for(self, record: AuthorshipRecord) -> str:
        return self.revisions.get(record.dedup_key(), record.author_id)


def affiliation_hash(affiliation_text: str, country: str) -> str:
    digest = hashlib.sha1(f"{affiliation_text}|{country}".encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass
class DisambigReport:
    n_authors: int = 0
    n_suspicious: int = 0
    n_records_reassigned: int = 0
    clusters_per_id: dict[str, int] = field(default_factory=dict)

    @property
    def n_clusters_total(self) -> int:
        return sum(self.clusters_per_id.values())

    @property
    def suspicious_share(self) -> float:
        return self.n_suspicious / self.n_authors if self.n_authors else 0.0

    def as_dict(self) -> dict:
        return {
            "n_authors": self.n_authors,
            "n_suspicious": self.n_suspicious,
            "suspicious_share": round(self.suspicious_share, 6),
            "n_clusters_total": self.n_clusters_total,
            "n_records_reassigned": self.n_records_reassigned,
            "clusters_per_id": dict(sorted(self.clusters_per_id.items())),
        }


def disambiguate_corpus(
    corpus: Corpus,
    criteria: SuspicionCriteria | None = None,
    weights: PairScoreWeights | None = None,
    cut_threshold: float = DEFAULT_CUT_THRESHOLD,
) -> tuple[Corpus, RevisedIdMap, DisambigReport]:
    """Re-cluster suspicious dossiers and rewrite their author IDs.

    Non-suspicious records pass through untouched and record order is
    preserved. Revised IDs take the form ``original::k`` (k = 1..K in
    order of first appearance) and only appear when a dossier actually
    splits into K > 1 clusters.
    """
    criteria = criteria or SuspicionCriteria()
    weights = weights or PairScoreWeights()
    dossiers = group_by_author(corpus)

    id_map = RevisedIdMap()
    report = DisambigReport(n_authors=len(dossiers))

    for dossier in dossiers:
        if not flag_suspicious(dossier, criteria):
            continue
        report.n_suspicious += 1
        # Dossier records are canonically sorted, so the partition and the
        # cluster numbering are independent of input row order.
        sim = similarity_matrix(dossier.records, weights)
        clusters = cluster_records(1.0 - sim, cut_threshold)
        report.clusters_per_id[dossier.author_id] = len(clusters)
        if len(clusters) == 1:
            for rec in dossier.records:
                id_map.revisions[rec.dedup_key()] = dossier.author_id
            continue
        for k, members in enumerate(clusters, start=1):
            revised = f"{dossier.author_id}::{k}"
            for idx in members:
                id_map.revisions[dossier.records[idx].dedup_key()] = revised
                report.n_records_reassigned += 1

    if report.n_suspicious:
        logger.info(
            "disambiguation: %d of %d author IDs suspicious, %d clusters issued",
            report.n_suspicious,
            report.n_authors,
            report.n_clusters_total,
        )

    if not id_map.revisions:
        return corpus, id_map, report

    revised_records = []
    for rec in corpus.records:
        new_id = id_map.revised_id_for(rec)
        revised_records.append(rec if new_id == rec.author_id else dataclasses.replace(rec, author_id=new_id))
    return with_records(corpus, revised_records), id_map, report


def write_revised_map_csv(id_map: RevisedIdMap, path) -> None:
    """Record-level revision outcomes: original_id,pub_id,affiliation_hash,revised_id."""
    rows = []
    for (original_id, pub_id, affiliation_text, country), revised in id_map.revisions.items():
        rows.append((original_id, pub_id, affiliation_hash(affiliation_text, country), revised))
    rows.sort()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["original_id", "pub_id", "affiliation_hash", "revised_id"])
        writer.writerows(rows)
