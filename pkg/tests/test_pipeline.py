"""Settings loading, stage ordering, and pipeline artifacts."""
from __future__ import annotations

import json

import pytest

from scimigrate.pipeline import (
    ConfigError,
    DataError,
    PipelineSettings,
    StageOrderError,
    load_settings,
    run_pipeline,
    stage_classify_mobility,
    stage_ingest,
    stage_metrics_nmr,
)
from scimigrate.records import write_corpus_csv
from scimigrate.synth import GeneratorConfig, generate_corpus

# Authors are plentiful enough that a 10% multidisciplinary share is
# reachable within the calibration tolerance of one percentage point.
COUNTS = {
    "single_paper": 12,
    "non_mover": 48,
    "immigrant": 20,
    "emigrant": 24,
    "return_migrant": 16,
    "transient": 8,
    "non_focal": 8,
}


@pytest.fixture(scope="module")
def corpus_file(tmp_path_factory):
    corpus, _ = generate_corpus(GeneratorConfig(counts=COUNTS, seed=13))
    path = tmp_path_factory.mktemp("corpus") / "corpus.csv"
    write_corpus_csv(corpus, path)
    return path


class TestSettings:
    def test_defaults(self, tmp_path):
        s = PipelineSettings(output_dir=tmp_path)
        assert s.focal_country == "RU"
        assert s.max_countries == 6
        assert s.max_publications == 292
        assert s.padding == 2
        assert s.min_support == 30.0
        assert s.cut_threshold == 0.5

    def test_alpha_and_target_exclusive(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineSettings(output_dir=tmp_path, alpha=0.5, target_multidisciplinary_share=0.1)

    def test_bad_weights_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineSettings(output_dir=tmp_path, w_affiliation_similarity=0.9)

    def test_bad_focal_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineSettings(output_dir=tmp_path, focal_country="Russia")

    def test_bad_flow_measure_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            PipelineSettings(output_dir=tmp_path, flow_measure="hops")

    def test_config_hash_stable_and_sensitive(self, tmp_path):
        a = PipelineSettings(output_dir=tmp_path)
        b = PipelineSettings(output_dir=tmp_path)
        c = PipelineSettings(output_dir=tmp_path, padding=3)
        assert a.config_hash() == b.config_hash()
        assert a.config_hash() != c.config_hash()


class TestLoadSettings:
    def test_toml_values_used(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('focal_country = "DE"\npadding = 4\n', encoding="utf-8")
        s = load_settings(cfg, tmp_path, {})
        assert s.focal_country == "DE"
        assert s.padding == 4

    def test_flag_overrides_toml(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("padding = 4\n", encoding="utf-8")
        s = load_settings(cfg, tmp_path, {"padding": 1})
        assert s.padding == 1

    def test_none_override_means_not_given(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("padding = 4\n", encoding="utf-8")
        s = load_settings(cfg, tmp_path, {"padding": None})
        assert s.padding == 4

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("paddding = 4\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="paddding"):
            load_settings(cfg, tmp_path, {})

    def test_missing_config_file_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_settings(tmp_path / "absent.toml", tmp_path, {})

    def test_invalid_toml_rejected(self, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text("= nonsense\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_settings(cfg, tmp_path, {})


class TestStageOrder:
    def test_downstream_before_upstream_fails(self, tmp_path):
        s = PipelineSettings(output_dir=tmp_path)
        with pytest.raises(StageOrderError, match="classify-mobility"):
            stage_metrics_nmr(s)

    def test_mid_pipeline_stage_needs_predecessor(self, tmp_path, corpus_file):
        s = PipelineSettings(output_dir=tmp_path, corpus=corpus_file)
        stage_ingest(s)
        with pytest.raises(StageOrderError):
            stage_classify_mobility(s)

    def test_missing_corpus_is_data_error(self, tmp_path):
        s = PipelineSettings(output_dir=tmp_path, corpus=tmp_path / "absent.csv")
        with pytest.raises(DataError):
            stage_ingest(s)

    def test_unconfigured_corpus_is_config_error(self, tmp_path):
        s = PipelineSettings(output_dir=tmp_path)
        with pytest.raises(ConfigError):
            stage_ingest(s)


@pytest.fixture(scope="module")
def finished(tmp_path_factory, corpus_file):
    out = tmp_path_factory.mktemp("run")
    settings = PipelineSettings(output_dir=out, corpus=corpus_file, seed=13)
    run_pipeline(settings)
    return out


class TestFullRun:
    def test_all_artifacts_present(self, finished):
        for name in (
            "corpus_ingested.csv",
            "corpus_filled.csv",
            "corpus_disambiguated.csv",
            "revised_ids.csv",
            "disambig-report.json",
            "fields.csv",
            "profiles.csv",
            "nmr.csv",
            "fnbd.csv",
            "citation_classes.csv",
            "flows.csv",
            "manifest.json",
        ):
            assert (finished / name).exists(), name

    def test_manifest_records_all_stages(self, finished):
        manifest = json.loads((finished / "manifest.json").read_text())
        assert manifest["tool"] == "scimigrate"
        assert "config_hash" in manifest
        stages = manifest["stages"]
        assert set(stages) >= {
            "ingest",
            "fill-countries",
            "disambiguate",
            "classify-fields",
            "classify-mobility",
            "metrics-nmr",
            "metrics-fnbd",
            "metrics-citations",
            "metrics-flows",
        }
        assert all("rows" in v and "outputs" in v for v in stages.values())

    def test_profile_rows_cover_all_authors(self, finished, corpus_file):
        profiles = (finished / "profiles.csv").read_text().strip().splitlines()
        assert len(profiles) - 1 == sum(COUNTS.values())

    def test_rerun_is_byte_identical(self, tmp_path_factory, corpus_file, finished):
        out2 = tmp_path_factory.mktemp("run2")
        run_pipeline(PipelineSettings(output_dir=out2, corpus=corpus_file, seed=13))
        for name in ("nmr.csv", "fnbd.csv", "citation_classes.csv", "flows.csv", "profiles.csv"):
            assert (finished / name).read_bytes() == (out2 / name).read_bytes(), name
