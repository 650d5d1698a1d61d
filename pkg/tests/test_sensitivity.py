"""Exclusion studies and the padding sweep."""
from __future__ import annotations

import csv

import pytest

from scimigrate.metrics import author_series, nmr_from_series
from scimigrate.sensitivity import (
    ExclusionPlan,
    exclude_random,
    fnbd_exclusion_study,
    nmr_exclusion_study,
    padding_sweep,
    write_padding_sweep_csv,
    write_sensitivity_nmr_csv,
)
from scimigrate.synth import GeneratorConfig, generate_corpus

COUNTS = {
    "single_paper": 4,
    "non_mover": 20,
    "immigrant": 8,
    "emigrant": 10,
    "return_migrant": 6,
    "transient": 4,
    "non_focal": 4,
}


@pytest.fixture(scope="module")
def corpus():
    c, _ = generate_corpus(GeneratorConfig(counts=COUNTS, seed=21))
    return c


class TestExcludeRandom:
    def test_zero_proportion_returns_identical_object(self, corpus):
        assert exclude_random(corpus, 0.0, seed=1) is corpus

    def test_excluded_count_is_floor(self, corpus):
        sub = exclude_random(corpus, 0.25, seed=1)
        assert len(sub) == len(corpus) - int(0.25 * len(corpus))

    def test_survivors_keep_corpus_order(self, corpus):
        sub = exclude_random(corpus, 0.5, seed=2)
        kept = [r for r in corpus if r in set(sub.records)]
        assert list(sub.records) == kept

    def test_same_seed_same_subset(self, corpus):
        a = exclude_random(corpus, 0.3, seed=7)
        b = exclude_random(corpus, 0.3, seed=7)
        assert a.records == b.records

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            ExclusionPlan(proportions=(0.5, 1.0))
        with pytest.raises(ValueError):
            ExclusionPlan(proportions=(0.2,), runs_per_proportion=0)


class TestNmrStudy:
    def test_zero_proportion_run_matches_direct_computation(self, corpus):
        plan = ExclusionPlan(proportions=(0.0,), runs_per_proportion=2, seed=5)
        result = nmr_exclusion_study(corpus, plan, "RU", padding=2)
        direct = nmr_from_series(author_series(corpus), "RU", 2)
        for run in result.runs:
            assert run.points == tuple(direct)

    def test_run_grid_complete(self, corpus):
        plan = ExclusionPlan(proportions=(0.0, 0.4), runs_per_proportion=3, seed=5)
        result = nmr_exclusion_study(corpus, plan, "RU", padding=2)
        seen = {(r.proportion, r.run) for r in result.runs}
        assert seen == {(p, i) for p in (0.0, 0.4) for i in range(3)}

    def test_variance_zero_without_exclusion(self, corpus):
        plan = ExclusionPlan(proportions=(0.0,), runs_per_proportion=4, seed=5)
        result = nmr_exclusion_study(corpus, plan, "RU", padding=2)
        assert result.variance_by_proportion[0.0] == pytest.approx(0.0)

    def test_heavier_exclusion_more_variance(self, corpus):
        plan = ExclusionPlan(proportions=(0.2, 0.8), runs_per_proportion=8, seed=5)
        result = nmr_exclusion_study(corpus, plan, "RU", padding=2)
        assert (
            result.variance_by_proportion[0.8] > result.variance_by_proportion[0.2]
        )


class TestFnbdStudy:
    def test_shape_and_determinism(self, corpus):
        plan = ExclusionPlan(proportions=(0.0, 0.5), runs_per_proportion=2, seed=3)
        r1 = fnbd_exclusion_study(corpus, plan, "RU", min_support=0.0)
        r2 = fnbd_exclusion_study(corpus, plan, "RU", min_support=0.0)
        assert len(r1.runs) == 4
        for a, b in zip(r1.runs, r2.runs):
            assert a.values == b.values

    def test_zero_proportion_runs_identical(self, corpus):
        plan = ExclusionPlan(proportions=(0.0,), runs_per_proportion=3, seed=3)
        result = fnbd_exclusion_study(corpus, plan, "RU", min_support=0.0)
        first = result.runs[0].values
        assert all(r.values == first for r in result.runs)


class TestPaddingSweep:
    def test_one_series_per_padding(self, corpus):
        result = padding_sweep(corpus, [1, 2, 3, 4, 5], "RU")
        assert sorted(result.series_by_padding) == [1, 2, 3, 4, 5]
        for points in result.series_by_padding.values():
            assert points

    def test_spread_is_nonnegative(self, corpus):
        result = padding_sweep(corpus, [1, 3, 5], "RU")
        assert all(v >= 0 for v in result.spread_by_year.values())

    def test_empty_paddings_rejected(self, corpus):
        with pytest.raises(ValueError):
            padding_sweep(corpus, [], "RU")


class TestCsvWriters:
    def test_nmr_csv_layout(self, corpus, tmp_path):
        plan = ExclusionPlan(proportions=(0.0, 0.3), runs_per_proportion=2, seed=1)
        result = nmr_exclusion_study(corpus, plan, "RU", padding=2)
        path = tmp_path / "s.csv"
        write_sensitivity_nmr_csv(result, path)
        rows = list(csv.DictReader(path.open()))
        assert rows
        assert set(rows[0]) == {"proportion", "run", "year_or_discipline", "value"}
        assert {r["proportion"] for r in rows} == {"0.0", "0.3"}

    def test_padding_csv_layout(self, corpus, tmp_path):
        result = padding_sweep(corpus, [1, 2], "RU")
        path = tmp_path / "p.csv"
        write_padding_sweep_csv(result, path)
        rows = list(csv.DictReader(path.open()))
        assert set(rows[0]) == {"padding", "year", "nmr"}
        assert {r["padding"] for r in rows} == {"1", "2"}
