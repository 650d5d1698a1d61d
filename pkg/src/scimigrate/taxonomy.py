"""Subject-code taxonomy: field shares, Z-score field assignment, and
normalized per-discipline contributions.

Subject codes are 4-digit ASJC-style codes mapped onto 26 subfields that
partition into four major fields (life, social, physical, health). The
top-level "multidisciplinary" code (1000) belongs to no single subfield
and is excluded from all per-discipline sums.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .records import AuthorDossier

logger = logging.getLogger(__name__)

MAJOR_FIELDS = ("physical", "life", "health", "social")
MULTIDISCIPLINARY = "multidisciplinary"
ALPHA_RESOLUTION = 1e-3


class NoSubjectData(ValueError):
    """Dossier has no subject annotations that map into the taxonomy."""


class CalibrationError(ValueError):
    """Target multidisciplinary share cannot be met on this population."""


@dataclass(frozen=True)
class AsjcTable:
    """Code → (subfield, major_field) with floor-to-hundred fallback."""

    subfield_of: Mapping[int, str]
    major_field_of: Mapping[int, str]

    def __post_init__(self) -> None:
        by_major: dict[str, set[str]] = {}
        for code, sub in self.subfield_of.items():
            major = self.major_field_of[code]
            if major != MULTIDISCIPLINARY:
                by_major.setdefault(major, set()).add(sub)
        expected = {"life": 5, "social": 6, "physical": 10, "health": 5}
        sizes = {m: len(s) for m, s in by_major.items()}
        if sizes != expected:
            raise ValueError(f"subfield partition {sizes} != expected {expected}")

    @classmethod
    def from_csv(cls, path) -> "AsjcTable":
        subfield_of: dict[int, str] = {}
        major_field_of: dict[int, str] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            expected = {"code", "subfield", "major_field"}
            if reader.fieldnames is None or set(reader.fieldnames) != expected:
                raise ValueError(f"{path}: header {reader.fieldnames} != {sorted(expected)}")
            for row in reader:
                code = int(row["code"])
                subfield_of[code] = row["subfield"].strip()
                major_field_of[code] = row["major_field"].strip()
        return cls(subfield_of=subfield_of, major_field_of=major_field_of)

    @property
    def subfields(self) -> tuple[str, ...]:
        return tuple(
            sorted(s for c, s in self.subfield_of.items() if self.major_field_of[c] != MULTIDISCIPLINARY)
        )

    def resolve(self, code: int) -> tuple[str, str] | None:
        """(subfield, major_field) for a code, or None if unmapped.

        Specific codes (e.g. 1702) fall back to their hundred (1700).
        The multidisciplinary top code resolves to None: it carries no
        subfield signal.
        """
        hit = self.subfield_of.get(code)
        key = code
        if hit is None:
            key = (code // 100) * 100
            hit = self.subfield_of.get(key)
        if hit is None:
            return None
        major = self.major_field_of[key]
        if major == MULTIDISCIPLINARY:
            return None
        return hit, major


_unmapped_warned: set[int] = set()


def _resolved_annotations(dossier: AuthorDossier, table: AsjcTable) -> list[tuple[str, str]]:
    """(subfield, major_field) per subject annotation that the table maps."""
    out = []
    for _pub, code in dossier.subject_annotations():
        resolved = table.resolve(code)
        if resolved is None:
            if code not in _unmapped_warned and (code // 100) * 100 != 1000:
                _unmapped_warned.add(code)
                logger.warning("subject code %d not in taxonomy; ignoring", code)
            continue
        out.append(resolved)
    return out


@dataclass(frozen=True)
class FieldFrequencies:
    """Share of an author's subject annotations per major field."""

    shares: Mapping[str, float]

    def __getitem__(self, major: str) -> float:
        return self.shares.get(major, 0.0)


@dataclass(frozen=True)
class FieldStats:
    """Population mean/std of field shares, for Z-scoring."""

    mean: Mapping[str, float]
    std: Mapping[str, float]

    def z_scores(self, f: FieldFrequencies) -> dict[str, float]:
        z = {}
        for m in MAJOR_FIELDS:
            sigma = self.std.get(m, 0.0)
            z[m] = 0.0 if sigma == 0.0 else (f[m] - self.mean.get(m, 0.0)) / sigma
        return z


@dataclass(frozen=True)
class DisciplineVector:
    """Normalized contribution of one author to each subfield (sums to 1)."""

    contributions: Mapping[str, float]

    def __getitem__(self, subfield: str) -> float:
        return self.contributions.get(subfield, 0.0)

    @property
    def total(self) -> float:
        return sum(self.contributions.values())


def field_frequencies(dossier: AuthorDossier, table: AsjcTable) -> FieldFrequencies:
    """Per-major-field shares of the dossier's subject annotations."""
    annotations = _resolved_annotations(dossier, table)
    if not annotations:
        raise NoSubjectData(f"author {dossier.author_id!r} has no mapped subject codes")
    shares = {m: 0.0 for m in MAJOR_FIELDS}
    for _sub, major in annotations:
        shares[major] += 1.0
    n = len(annotations)
    return FieldFrequencies(shares={m: v / n for m, v in shares.items()})


def compute_field_stats(all_frequencies: Sequence[FieldFrequencies]) -> FieldStats:
    """Population mean and standard deviation of shares per major field."""
    if not all_frequencies:
        raise ValueError("cannot compute field stats from an empty population")
    n = len(all_frequencies)
    mean = {}
    std = {}
    for m in MAJOR_FIELDS:
        values = [f[m] for f in all_frequencies]
        mu = sum(values) / n
        var = sum((v - mu) ** 2 for v in values) / n
        mean[m] = mu
        std[m] = math.sqrt(var)
    return FieldStats(mean=mean, std=std)


def classify_major_field(f: FieldFrequencies, stats: FieldStats, alpha: float) -> str:
    """Assign a major field by largest Z-score, or multidisciplinary.

    Fields with zero population spread get Z=0 and thus never win over
    alpha. Ties on the maximum are broken by the fixed MAJOR_FIELDS order
    and logged.
    """
    z = stats.z_scores(f)
    best = max(z.values())
    if best <= alpha:
        return MULTIDISCIPLINARY
    winners = [m for m in MAJOR_FIELDS if z[m] == best]
    if len(winners) > 1:
        logger.info("Z-score tie among %s; assigning %s", winners, winners[0])
    return winners[0]


def _multidisciplinary_share(max_z: Sequence[float], alpha: float) -> float:
    return sum(1 for v in max_z if v <= alpha) / len(max_z)


def calibrate_alpha(
    all_frequencies: Sequence[FieldFrequencies],
    stats: FieldStats,
    target_multidisciplinary_share: float,
    *,
    tolerance_pp: float = 1.0,
) -> float:
    """Smallest alpha (1e-3 grid) whose share best approximates the target.

    The share is a non-decreasing step function of alpha, so the two
    achievable shares bracketing the target are found by bisection; the
    closer one wins (ties go to the side at or above the target), and the
    smallest grid alpha realizing it is returned. Raises CalibrationError
    when even the best achievable share misses the target by more than
    ``tolerance_pp`` percentage points, which happens only when the max-Z
    distribution has a large atom straddling the target quantile.
    """
    if not all_frequencies:
        raise ValueError("cannot calibrate alpha on an empty population")
    target = target_multidisciplinary_share
    if not 0.0 <= target <= 1.0:
        raise ValueError(f"target share {target} outside [0, 1]")

    max_z = [max(stats.z_scores(f).values()) for f in all_frequencies]
    grid_lo = math.floor(min(max_z) / ALPHA_RESOLUTION) - 1
    grid_hi = math.ceil(max(max_z) / ALPHA_RESOLUTION) + 1

    def crossing(threshold: float) -> int:
        # Smallest grid point k with share(k * resolution) >= threshold.
        lo, hi = grid_lo, grid_hi
        while lo < hi:
            mid = (lo + hi) // 2
            if _multidisciplinary_share(max_z, mid * ALPHA_RESOLUTION) >= threshold:
                hi = mid
            else:
                lo = mid + 1
        return lo

    k = crossing(target)
    share_above = _multidisciplinary_share(max_z, k * ALPHA_RESOLUTION)
    share_below = _multidisciplinary_share(max_z, (k - 1) * ALPHA_RESOLUTION)
    if abs(share_above - target) <= abs(share_below - target):
        alpha, achieved = k * ALPHA_RESOLUTION, share_above
    else:
        alpha, achieved = crossing(share_below) * ALPHA_RESOLUTION, share_below

    if abs(achieved - target) > tolerance_pp / 100.0:
        raise CalibrationError(
            f"target share {target:.3f} unattainable: nearest achievable is {achieved:.3f}"
        )
    return alpha


def normalized_contribution(dossier: AuthorDossier, table: AsjcTable) -> DisciplineVector:
    """Share of the author's subject annotations per subfield (sums to 1)."""
    annotations = _resolved_annotations(dossier, table)
    if not annotations:
        raise NoSubjectData(f"author {dossier.author_id!r} has no mapped subject codes")
    counts: dict[str, float] = {}
    for sub, _major in annotations:
        counts[sub] = counts.get(sub, 0.0) + 1.0
    n = len(annotations)
    return DisciplineVector(contributions={s: c / n for s, c in sorted(counts.items())})


def normalized_count(vectors: Iterable[DisciplineVector], d: str) -> float:
    """Sum of per-author normalized contributions to subfield ``d``."""
    return sum(v[d] for v in vectors)


def load_default_table() -> AsjcTable:
    ref = resources.files("scimigrate").joinpath("data/asjc_map.csv")
    with resources.as_file(ref) as path:
        return AsjcTable.from_csv(path)
