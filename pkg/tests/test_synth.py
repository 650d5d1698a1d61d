"""Synthetic corpus generation and truth-based scoring."""
from __future__ import annotations

import pytest

from scimigrate.disambig import SuspicionCriteria, disambiguate_corpus, flag_suspicious
from scimigrate.geoinfer import fill_missing_countries, infer_country
from scimigrate.mobility import build_profile
from scimigrate.records import UNKNOWN, group_by_author
from scimigrate.synth import (
    GeneratorConfig,
    generate_corpus,
    generate_labeled_affiliations,
    read_truth_jsonl,
    score_against_truth,
    write_truth_jsonl,
)

SMALL_COUNTS = {
    "single_paper": 5,
    "non_mover": 10,
    "immigrant": 5,
    "emigrant": 6,
    "return_migrant": 5,
    "transient": 3,
    "non_focal": 3,
}


@pytest.fixture(scope="module")
def small_pair():
    return generate_corpus(GeneratorConfig(counts=SMALL_COUNTS, seed=11))


class TestGenerator:
    def test_author_count_matches_config(self, small_pair):
        corpus, truth = small_pair
        assert len(truth.pattern_authors) == sum(SMALL_COUNTS.values())
        assert len(group_by_author(corpus)) == sum(SMALL_COUNTS.values())

    def test_same_seed_reproduces_exactly(self):
        config = GeneratorConfig(counts=SMALL_COUNTS, seed=42)
        c1, _ = generate_corpus(config)
        c2, _ = generate_corpus(config)
        assert c1.records == c2.records

    def test_different_seed_differs(self):
        c1, _ = generate_corpus(GeneratorConfig(counts=SMALL_COUNTS, seed=1))
        c2, _ = generate_corpus(GeneratorConfig(counts=SMALL_COUNTS, seed=2))
        assert c1.records != c2.records

    def test_labels_realized_by_classifier(self, small_pair):
        corpus, truth = small_pair
        dossiers = {d.author_id: d for d in group_by_author(corpus)}
        for t in truth.pattern_authors:
            p = build_profile(dossiers[t.author_id], "RU")
            assert p.label.value == t.label, t.author_id
            assert p.origin == t.origin
            assert p.destination == t.destination

    def test_years_inside_window(self, small_pair):
        corpus, _ = small_pair
        years = [r.year for r in corpus]
        assert min(years) >= 1996 and max(years) <= 2020

    def test_affiliations_resolve_to_their_country(self, small_pair, gazetteer):
        corpus, _ = small_pair
        for rec in corpus:
            inferred = infer_country(rec.affiliation_text, gazetteer)
            assert inferred.country == rec.country

    def test_invalid_configs_rejected(self):
        with pytest.raises(ValueError):
            GeneratorConfig(counts={"astronaut": 3})
        with pytest.raises(ValueError):
            GeneratorConfig(counts=SMALL_COUNTS, start_year=2015, end_year=2020)
        with pytest.raises(ValueError):
            GeneratorConfig(counts=SMALL_COUNTS, suspicious_fraction=1.0)


class TestMissingCountries:
    def test_requested_fraction_blanked(self):
        config = GeneratorConfig(counts=SMALL_COUNTS, missing_country_fraction=0.2, seed=3)
        corpus, truth = generate_corpus(config)
        n_blank = sum(1 for r in corpus if not r.has_known_country)
        assert n_blank == int(0.2 * len(corpus))
        assert n_blank == len(truth.blanked_keys)

    def test_fill_recovers_blanked_countries(self, gazetteer):
        config = GeneratorConfig(counts=SMALL_COUNTS, missing_country_fraction=0.3, seed=4)
        corpus, truth = generate_corpus(config)
        filled, report = fill_missing_countries(corpus, gazetteer)
        report_score = score_against_truth(truth, original_corpus=corpus, filled_corpus=filled)
        assert report_score.fill_accuracy == 1.0
        assert report.n_still_unknown == 0


class TestMergedIdentities:
    def test_merged_ids_trip_suspicion_and_split_cleanly(self):
        config = GeneratorConfig(counts=SMALL_COUNTS, suspicious_fraction=0.05, seed=5)
        corpus, truth = generate_corpus(config)
        merged_ids = {t.author_id for t in truth.merged_authors}
        assert merged_ids

        criteria = SuspicionCriteria()
        for d in group_by_author(corpus):
            if d.author_id in merged_ids:
                assert flag_suspicious(d, criteria)

        revised, _, report = disambiguate_corpus(corpus)
        score = score_against_truth(truth, revised_corpus=revised)
        assert score.pair_f1 == pytest.approx(1.0)
        assert report.n_suspicious == len(merged_ids)

    def test_pattern_authors_not_suspicious(self, small_pair):
        corpus, truth = small_pair
        criteria = SuspicionCriteria()
        for d in group_by_author(corpus):
            assert not flag_suspicious(d, criteria)


class TestLabeledAffiliations:
    def test_size_and_resolvability(self, gazetteer):
        labeled = generate_labeled_affiliations(200, seed=9)
        assert len(labeled) == 200
        hits = sum(
            infer_country(text, gazetteer).country == country for text, country in labeled
        )
        assert hits / len(labeled) >= 0.98

    def test_deterministic(self):
        assert generate_labeled_affiliations(50, seed=1) == generate_labeled_affiliations(50, seed=1)


class TestTruthFile:
    def test_round_trip(self, small_pair, tmp_path):
        _, truth = small_pair
        path = tmp_path / "truth.jsonl"
        write_truth_jsonl(truth, path)
        back = read_truth_jsonl(path)
        assert set(back.authors) == set(truth.authors)
        assert back.text_countries == truth.text_countries
        assert back.blanked_keys == truth.blanked_keys
        for k, t in truth.authors.items():
            b = back.authors[k]
            assert (b.label, b.origin, b.destination, b.merged) == (
                t.label,
                t.origin,
                t.destination,
                t.merged,
            )
