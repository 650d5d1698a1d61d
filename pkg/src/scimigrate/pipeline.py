"""File-based pipeline orchestration.

Stages hand off through CSV/JSON artifacts in one output directory and
record themselves in ``manifest.json``; each stage checks there that its
prerequisites already ran. All configuration lives in one flat TOML file
whose keys match PipelineSettings field names; any key can be overridden
by a same-named command-line flag.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np
import scipy

from . import __version__
from .disambig import (
    PairScoreWeights,
    SuspicionCriteria,
    disambiguate_corpus,
    write_revised_map_csv,
)
from .geoinfer import Gazetteer, fill_missing_countries, load_default_gazetteer
from .metrics import (
    CitationSummary,
    annual_citation_rate,
    author_series,
    citation_class,
    field_mean_rates,
    fit_citation_boundaries,
    fnbd_from_corpus,
    nmr_from_series,
    with_field_normalization,
)
from .mobility import (
    MobilityLabel,
    MobilityProfile,
    build_flow_network,
    build_profile,
)
from .records import (
    Corpus,
    SchemaMismatchError,
    group_by_author,
    parse_corpus,
    write_corpus_csv,
)
from .sensitivity import (
    ExclusionPlan,
    fnbd_exclusion_study,
    nmr_exclusion_study,
    padding_sweep,
    write_padding_sweep_csv,
    write_sensitivity_fnbd_csv,
    write_sensitivity_nmr_csv,
)
from .synth import (
    GeneratorConfig,
    generate_corpus,
    read_truth_jsonl,
    score_against_truth,
    write_truth_jsonl,
)
from .taxonomy import (
    AsjcTable,
    CalibrationError,
    NoSubjectData,
    calibrate_alpha,
    classify_major_field,
    compute_field_stats,
    field_frequencies,
    load_default_table,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ConfigError(ValueError):
    """Invalid or contradictory configuration. Exit code 2."""


class DataError(ValueError):
    """Unreadable or malformed input data. Exit code 3."""


class StageOrderError(ValueError):
    """A stage ran before its prerequisites. Exit code 4."""


STAGE_PREREQS: dict[str, tuple[str, ...]] = {
    "ingest": (),
    "fill-countries": ("ingest",),
    "disambiguate": ("fill-countries",),
    "classify-fields": ("disambiguate",),
    "classify-mobility": ("disambiguate",),
    "metrics-nmr": ("classify-mobility",),
    "metrics-fnbd": ("classify-mobility",),
    "metrics-citations": ("classify-mobility", "classify-fields"),
    "metrics-flows": ("classify-mobility", "classify-fields"),
    "sensitivity-nmr": ("disambiguate",),
    "sensitivity-fnbd": ("disambiguate",),
    "sensitivity-padding": ("disambiguate",),
    "synth-generate": (),
    "synth-score": ("classify-mobility",),
}


@dataclass
class PipelineSettings:
    """Flat pipeline configuration; field names double as TOML keys."""

    output_dir: Path
    corpus: Path | None = None
    gazetteer: Path | None = None
    asjc_map: Path | None = None
    focal_country: str = "RU"
    snapshot_year: int | None = None
    max_countries: int = 6
    max_publications: int = 292
    w_affiliation_similarity: float = 0.4
    w_country_overlap: float = 0.2
    w_subject_overlap: float = 0.3
    w_year_proximity: float = 0.1
    cut_threshold: float = 0.5
    alpha: float | None = None
    target_multidisciplinary_share: float | None = None
    padding: int = 2
    min_support: float = 30.0
    seed: int = 0
    exclusion_proportions: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8)
    runs_per_proportion: int = 10
    paddings: tuple[int, ...] = (1, 2, 3, 4, 5)
    include_transient_flows: bool = False
    flow_measure: str = "movers"

    def __post_init__(self) -> None:
        self.output_dir = Path(self.output_dir)
        for name in ("corpus", "gazetteer", "asjc_map"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        try:
            self.suspicion_criteria()
            self.pair_weights()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < self.cut_threshold < 1.0:
            raise ConfigError(f"cut_threshold {self.cut_threshold} outside (0, 1)")
        if self.alpha is not None and self.target_multidisciplinary_share is not None:
            raise ConfigError(
                "alpha and target_multidisciplinary_share are mutually exclusive; set one"
            )
        if self.target_multidisciplinary_share is not None and not (
            0.0 < self.target_multidisciplinary_share < 1.0
        ):
            raise ConfigError("target_multidisciplinary_share must be in (0, 1)")
        if self.padding < 0:
            raise ConfigError("padding must be non-negative")
        if self.min_support < 0:
            raise ConfigError("min_support must be non-negative")
        if self.flow_measure not in ("movers", "moves"):
            raise ConfigError(f"flow_measure {self.flow_measure!r} not in {{movers, moves}}")
        if len(self.focal_country) != 2 or not self.focal_country.isupper():
            raise ConfigError(f"focal_country {self.focal_country!r} is not an alpha-2 code")
        try:
            self.exclusion_plan()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not self.paddings or any(p < 0 for p in self.paddings):
            raise ConfigError("paddings must be a non-empty list of non-negative integers")

    def suspicion_criteria(self) -> SuspicionCriteria:
        return SuspicionCriteria(
            max_countries=self.max_countries, max_publications=self.max_publications
        )

    def pair_weights(self) -> PairScoreWeights:
        return PairScoreWeights(
            w_affiliation_similarity=self.w_affiliation_similarity,
            w_country_overlap=self.w_country_overlap,
            w_subject_overlap=self.w_subject_overlap,
            w_year_proximity=self.w_year_proximity,
        )

    def exclusion_plan(self) -> ExclusionPlan:
        return ExclusionPlan(
            proportions=tuple(self.exclusion_proportions),
            runs_per_proportion=self.runs_per_proportion,
            seed=self.seed,
        )

    def load_gazetteer(self) -> Gazetteer:
        if self.gazetteer is None:
            return load_default_gazetteer()
        if not self.gazetteer.exists():
            raise DataError(f"fill-countries: gazetteer file not found: {self.gazetteer}")
        return Gazetteer.from_csv(self.gazetteer)

    def load_table(self) -> AsjcTable:
        if self.asjc_map is None:
            return load_default_table()
        if not self.asjc_map.exists():
            raise DataError(f"classify-fields: subject table not found: {self.asjc_map}")
        return AsjcTable.from_csv(self.asjc_map)

    def config_hash(self) -> str:
        payload = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            payload[f.name] = value
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


_SETTINGS_FIELDS = {f.name: f for f in dataclasses.fields(PipelineSettings)}


def load_settings(
    config_path: str | Path | None,
    output_dir: str | Path,
    overrides: Mapping[str, Any] | None = None,
) -> PipelineSettings:
    """Merge TOML config and command-line overrides into settings.

    Overrides win; None-valued overrides mean "flag not given". Unknown
    keys in either source are config errors.
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with path.open("rb") as fh:
                values.update(tomllib.load(fh))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    values["output_dir"] = output_dir

    unknown = sorted(set(values) - set(_SETTINGS_FIELDS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    for key in ("exclusion_proportions", "paddings"):
        if key in values and not isinstance(values[key], tuple):
            values[key] = tuple(values[key])
    try:
        return PipelineSettings(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------- manifest


def _manifest_path(settings: PipelineSettings) -> Path:
    return settings.output_dir / MANIFEST_NAME


def read_manifest(settings: PipelineSettings) -> dict:
    path = _manifest_path(settings)
    if not path.exists():
        return {
            "tool": "scimigrate",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "config_hash": settings.config_hash(),
            "stages": {},
        }
    with path.open(encoding="utf-8") as fh:
        return json.load(fh)


def _write_manifest(settings: PipelineSettings, manifest: dict) -> None:
    with _manifest_path(settings).open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def check_stage_order(settings: PipelineSettings, stage: str) -> dict:
    """Manifest for this run, after verifying prerequisites completed."""
    manifest = read_manifest(settings)
    done = set(manifest.get("stages", {}))
    missing = [pre for pre in STAGE_PREREQS[stage] if pre not in done]
    if missing:
        raise StageOrderError(
            f"{stage}: prerequisite stage(s) not yet run: {', '.join(missing)}"
        )
    return manifest


def record_stage(
    settings: PipelineSettings,
    manifest: dict,
    stage: str,
    rows: int,
    outputs: Iterable[str],
) -> None:
    manifest["config_hash"] = settings.config_hash()
    manifest.setdefault("stages", {})[stage] = {
        "rows": rows,
        "outputs": sorted(outputs),
    }
    _write_manifest(settings, manifest)


# ------------------------------------------------------------------- helpers


def _out(settings: PipelineSettings, name: str) -> Path:
    return settings.output_dir / name


def _load_stage_corpus(settings: PipelineSettings, stage: str, name: str) -> Corpus:
    path = _out(settings, name)
    if not path.exists():
        raise DataError(f"{stage}: expected upstream file missing: {path}")
    try:
        corpus, _report = parse_corpus(path, snapshot_year=settings.snapshot_year)
    except (SchemaMismatchError, OSError) as exc:
        raise DataError(f"{stage}: {exc}") from exc
    return corpus


def _write_json(path: Path, payload: dict) -> None:
    with path.open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _profiles_for(corpus: Corpus, focal: str) -> list[MobilityProfile]:
    return [build_profile(d, focal) for d in group_by_author(corpus)]


def _load_fields_csv(settings: PipelineSettings, stage: str) -> dict[str, str]:
    path = _out(settings, "fields.csv")
    if not path.exists():
        raise DataError(f"{stage}: expected upstream file missing: {path}")
    fields: dict[str, str] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            fields[row["author_id"]] = row["major_field"]
    return fields


def _load_profiles_csv(settings: PipelineSettings, stage: str) -> list[dict]:
    path = _out(settings, "profiles.csv")
    if not path.exists():
        raise DataError(f"{stage}: expected upstream file missing: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# -------------------------------------------------------------------- stages


def stage_ingest(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "ingest")
    if settings.corpus is None:
        raise ConfigError("ingest: no corpus path configured")
    if not settings.corpus.exists():
        raise DataError(f"ingest: corpus file not found: {settings.corpus}")
    try:
        corpus, report = parse_corpus(settings.corpus, snapshot_year=settings.snapshot_year)
    except SchemaMismatchError as exc:
        raise DataError(f"ingest: {exc}") from exc
    settings.output_dir.mkdir(parents=True, exist_ok=True)
    write_corpus_csv(corpus, _out(settings, "corpus_ingested.csv"))
    _write_json(_out(settings, "ingest_report.json"), report.as_dict())
    record_stage(settings, manifest, "ingest", len(corpus), ["corpus_ingested.csv", "ingest_report.json"])


def stage_fill_countries(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "fill-countries")
    corpus = _load_stage_corpus(settings, "fill-countries", "corpus_ingested.csv")
    gazetteer = settings.load_gazetteer()
    filled, report = fill_missing_countries(corpus, gazetteer)
    write_corpus_csv(filled, _out(settings, "corpus_filled.csv"))
    _write_json(_out(settings, "fill_report.json"), report.as_dict())
    record_stage(
        settings, manifest, "fill-countries", len(filled), ["corpus_filled.csv", "fill_report.json"]
    )


def stage_disambiguate(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "disambiguate")
    corpus = _load_stage_corpus(settings, "disambiguate", "corpus_filled.csv")
    revised, id_map, report = disambiguate_corpus(
        corpus,
        criteria=settings.suspicion_criteria(),
        weights=settings.pair_weights(),
        cut_threshold=settings.cut_threshold,
    )
    write_corpus_csv(revised, _out(settings, "corpus_disambiguated.csv"))
    write_revised_map_csv(id_map, _out(settings, "revised_ids.csv"))
    _write_json(_out(settings, "disambig-report.json"), report.as_dict())
    record_stage(
        settings,
        manifest,
        "disambiguate",
        len(revised),
        ["corpus_disambiguated.csv", "revised_ids.csv", "disambig-report.json"],
    )


def stage_classify_fields(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "classify-fields")
    corpus = _load_stage_corpus(settings, "classify-fields", "corpus_disambiguated.csv")
    table = settings.load_table()
    dossiers = group_by_author(corpus)

    frequencies = []
    authors = []
    n_skipped = 0
    for dossier in dossiers:
        try:
            frequencies.append(field_frequencies(dossier, table))
            authors.append(dossier.author_id)
        except NoSubjectData:
            n_skipped += 1
    if not frequencies:
        raise DataError("classify-fields: no author has mapped subject codes")
    stats = compute_field_stats(frequencies)

    if settings.alpha is not None:
        alpha = settings.alpha
    else:
        target = (
            settings.target_multidisciplinary_share
            if settings.target_multidisciplinary_share is not None
            else 0.10
        )
        try:
            alpha = calibrate_alpha(frequencies, stats, target)
        except CalibrationError as exc:
            raise DataError(f"classify-fields: {exc}") from exc

    labels = {
        author: classify_major_field(f, stats, alpha)
        for author, f in zip(authors, frequencies)
    }
    with _out(settings, "fields.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["author_id", "major_field"])
        for author in sorted(labels):
            writer.writerow([author, labels[author]])

    share = sum(1 for v in labels.values() if v == "multidisciplinary") / len(labels)
    _write_json(
        _out(settings, "fields_report.json"),
        {
            "alpha": alpha,
            "multidisciplinary_share": round(share, 6),
            "n_authors": len(labels),
            "n_without_subjects": n_skipped,
            "field_means": {k: round(v, 6) for k, v in stats.mean.items()},
            "field_stds": {k: round(v, 6) for k, v in stats.std.items()},
        },
    )
    record_stage(
        settings, manifest, "classify-fields", len(labels), ["fields.csv", "fields_report.json"]
    )


def stage_classify_mobility(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "classify-mobility")
    corpus = _load_stage_corpus(settings, "classify-mobility", "corpus_disambiguated.csv")
    profiles = _profiles_for(corpus, settings.focal_country)
    with _out(settings, "profiles.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["author_id", "label", "origin", "destination", "n_events", "first_year", "last_year"]
        )
        for p in sorted(profiles, key=lambda p: p.author_id):
            writer.writerow(
                [p.author_id, p.label.value, p.origin, p.destination, p.n_events, p.first_year, p.last_year]
            )
    record_stage(settings, manifest, "classify-mobility", len(profiles), ["profiles.csv"])


def stage_metrics_nmr(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "metrics-nmr")
    corpus = _load_stage_corpus(settings, "metrics-nmr", "corpus_disambiguated.csv")
    points = nmr_from_series(author_series(corpus), settings.focal_country, settings.padding)
    with _out(settings, "nmr.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "I", "E", "M", "in_rate", "out_rate", "nmr"])
        for pt in points:
            writer.writerow(
                [pt.year, pt.I, pt.E, pt.M, repr(pt.in_rate), repr(pt.out_rate), repr(pt.nmr)]
            )
    record_stage(settings, manifest, "metrics-nmr", len(points), ["nmr.csv"])


def stage_metrics_fnbd(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "metrics-fnbd")
    corpus = _load_stage_corpus(settings, "metrics-fnbd", "corpus_disambiguated.csv")
    table = settings.load_table()
    results = fnbd_from_corpus(
        corpus, settings.focal_country, table, min_support=settings.min_support
    )
    with _out(settings, "fnbd.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["discipline", "P_d", "P_emi", "P_tra", "P_imm", "P_ret", "fnbd", "reliable"])
        for r in results:
            writer.writerow(
                [
                    r.discipline,
                    repr(r.P_d),
                    repr(r.P_emi),
                    repr(r.P_tra),
                    repr(r.P_imm),
                    repr(r.P_ret),
                    "" if r.fnbd is None else repr(r.fnbd),
                    str(r.reliable).lower(),
                ]
            )
    record_stage(settings, manifest, "metrics-fnbd", len(results), ["fnbd.csv"])


def stage_metrics_citations(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "metrics-citations")
    corpus = _load_stage_corpus(settings, "metrics-citations", "corpus_disambiguated.csv")
    fields = _load_fields_csv(settings, "metrics-citations")
    snapshot = settings.snapshot_year or corpus.snapshot_year

    migrant_rows: list[tuple[MobilityProfile, CitationSummary, str]] = []
    by_field: dict[str, list[CitationSummary]] = {}
    for dossier in group_by_author(corpus):
        profile = build_profile(dossier, settings.focal_country)
        if profile.label not in (MobilityLabel.IMMIGRANT, MobilityLabel.EMIGRANT):
            continue
        major = fields.get(dossier.author_id)
        if major is None:
            continue
        summary = annual_citation_rate(dossier, snapshot)
        by_field.setdefault(major, []).append(summary)
        migrant_rows.append((profile, summary, major))

    if not migrant_rows:
        raise DataError("metrics-citations: no immigrant or emigrant with a field assignment")

    means = field_mean_rates(by_field, scope="migrants")
    normalized = []
    for profile, summary, major in migrant_rows:
        mean = means.get(major)
        if mean is None or mean <= 0:
            continue
        normalized.append((profile, with_field_normalization(summary, mean)))
    if not normalized:
        raise DataError("metrics-citations: every migrant field has a degenerate mean rate")
    boundaries = fit_citation_boundaries([s.field_normalized_rate for _, s in normalized])

    cells: dict[tuple[str, str], dict[str, int]] = {}
    for profile, summary in normalized:
        if profile.label is MobilityLabel.IMMIGRANT:
            key = (profile.origin, "immigrant")
        else:
            key = (profile.destination, "emigrant")
        cls = citation_class(summary, boundaries)
        cells.setdefault(key, {c: 0 for c in ("low", "moderate", "high")})[cls] += 1

    with _out(settings, "citation_classes.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["country", "direction", "low", "moderate", "high"])
        for (country, direction), counts in sorted(cells.items()):
            writer.writerow([country, direction, counts["low"], counts["moderate"], counts["high"]])
    _write_json(
        _out(settings, "citation_report.json"),
        {
            "boundaries": {"t1": boundaries.t1, "t2": boundaries.t2},
            "field_means": {k: round(v, 6) for k, v in sorted(means.items())},
            "n_migrants_classed": len(normalized),
        },
    )
    record_stage(
        settings,
        manifest,
        "metrics-citations",
        len(cells),
        ["citation_classes.csv", "citation_report.json"],
    )


def stage_metrics_flows(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "metrics-flows")
    corpus = _load_stage_corpus(settings, "metrics-flows", "corpus_disambiguated.csv")
    fields = _load_fields_csv(settings, "metrics-flows")
    profiles = _profiles_for(corpus, settings.focal_country)
    edges = build_flow_network(
        profiles,
        settings.focal_country,
        group_by_field=True,
        fields=fields,
        include_transients=settings.include_transient_flows,
        measure=settings.flow_measure,
    )
    with _out(settings, "flows.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["origin", "destination", "major_field", "weight"])
        for e in edges:
            writer.writerow([e.origin, e.destination, e.major_field or "", repr(e.weight)])
    record_stage(settings, manifest, "metrics-flows", len(edges), ["flows.csv"])


def stage_sensitivity_nmr(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "sensitivity-nmr")
    corpus = _load_stage_corpus(settings, "sensitivity-nmr", "corpus_disambiguated.csv")
    result = nmr_exclusion_study(
        corpus, settings.exclusion_plan(), settings.focal_country, settings.padding
    )
    write_sensitivity_nmr_csv(result, _out(settings, "sensitivity_nmr.csv"))
    _write_json(
        _out(settings, "sensitivity_nmr_report.json"),
        {"variance_by_proportion": {repr(k): v for k, v in result.variance_by_proportion.items()}},
    )
    record_stage(
        settings,
        manifest,
        "sensitivity-nmr",
        len(result.runs),
        ["sensitivity_nmr.csv", "sensitivity_nmr_report.json"],
    )


def stage_sensitivity_fnbd(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "sensitivity-fnbd")
    corpus = _load_stage_corpus(settings, "sensitivity-fnbd", "corpus_disambiguated.csv")
    result = fnbd_exclusion_study(
        corpus,
        settings.exclusion_plan(),
        settings.focal_country,
        table=settings.load_table(),
        min_support=settings.min_support,
    )
    write_sensitivity_fnbd_csv(result, _out(settings, "sensitivity_fnbd.csv"))
    _write_json(
        _out(settings, "sensitivity_fnbd_report.json"),
        {
            "unstable_disciplines": {
                repr(k): list(v) for k, v in result.unstable_disciplines.items()
            }
        },
    )
    record_stage(
        settings,
        manifest,
        "sensitivity-fnbd",
        len(result.runs),
        ["sensitivity_fnbd.csv", "sensitivity_fnbd_report.json"],
    )


def stage_sensitivity_padding(settings: PipelineSettings) -> None:
    manifest = check_stage_order(settings, "sensitivity-padding")
    corpus = _load_stage_corpus(settings, "sensitivity-padding", "corpus_disambiguated.csv")
    result = padding_sweep(corpus, settings.paddings, settings.focal_country)
    write_padding_sweep_csv(result, _out(settings, "sensitivity_padding.csv"))
    record_stage(
        settings,
        manifest,
        "sensitivity-padding",
        len(result.series_by_padding),
        ["sensitivity_padding.csv"],
    )


def stage_synth_generate(settings: PipelineSettings, config: GeneratorConfig) -> None:
    manifest = check_stage_order(settings, "synth-generate")
    gazetteer = settings.load_gazetteer() if settings.gazetteer is not None else None
    table = settings.load_table() if settings.asjc_map is not None else None
    corpus, truth = generate_corpus(config, gazetteer=gazetteer, table=table)
    settings.output_dir.mkdir(parents=True, exist_ok=True)
    write_corpus_csv(corpus, _out(settings, "corpus.csv"))
    write_truth_jsonl(truth, _out(settings, "truth.jsonl"))
    record_stage(settings, manifest, "synth-generate", len(corpus), ["corpus.csv", "truth.jsonl"])


@dataclass(frozen=True)
class _ScoredProfile:
    """Just enough of a mobility profile to compare against truth."""

    author_id: str
    label: MobilityLabel
    origin: str
    destination: str


def stage_synth_score(settings: PipelineSettings, truth_path: Path | None = None) -> None:
    manifest = check_stage_order(settings, "synth-score")
    path = truth_path if truth_path is not None else _out(settings, "truth.jsonl")
    if not path.exists():
        raise DataError(f"synth-score: truth file not found: {path}")
    truth = read_truth_jsonl(path)

    profiles = [
        _ScoredProfile(
            author_id=row["author_id"],
            label=MobilityLabel(row["label"]),
            origin=row["origin"],
            destination=row["destination"],
        )
        for row in _load_profiles_csv(settings, "synth-score")
    ]

    original = filled = revised = None
    if _out(settings, "corpus_ingested.csv").exists() and _out(settings, "corpus_filled.csv").exists():
        original = _load_stage_corpus(settings, "synth-score", "corpus_ingested.csv")
        filled = _load_stage_corpus(settings, "synth-score", "corpus_filled.csv")
    if _out(settings, "corpus_disambiguated.csv").exists():
        revised = _load_stage_corpus(settings, "synth-score", "corpus_disambiguated.csv")

    report = score_against_truth(
        truth,
        profiles=profiles,
        original_corpus=original,
        filled_corpus=filled,
        revised_corpus=revised,
    )
    _write_json(_out(settings, "score_report.json"), report.as_dict())
    record_stage(
        settings, manifest, "synth-score", report.n_scored_labels, ["score_report.json"]
    )


def run_pipeline(settings: PipelineSettings) -> None:
    """Ingest through metrics, in order, into one output directory."""
    for stage_fn in (
        stage_ingest,
        stage_fill_countries,
        stage_disambiguate,
        stage_classify_fields,
        stage_classify_mobility,
        stage_metrics_nmr,
        stage_metrics_fnbd,
        stage_metrics_citations,
        stage_metrics_flows,
    ):
        stage_fn(settings)
