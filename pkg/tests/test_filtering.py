import math

import pytest

from editforge.errors import EmptyPool, UnderfilledWarning
from editforge.filtering import (
    FilterConfig,
    FilterReport,
    run_cascade,
    stage1_faithfulness_top_fraction,
    stage2_quality_threshold,
    stage3_relevance_top_k,
)
from editforge.scoring import ScoredTriplet, ScoreTriple


def make_record(i, op="add", quality=3.0, relevance=3.0, faithfulness=3.0):
    return ScoredTriplet(f"{op}-{i:06d}", op, ScoreTriple(quality, relevance, faithfulness))


def random_pool(rng, n_per_op, ops=("add", "delete", "replace")):
    pool = []
    for op in ops:
        quality = rng.uniform(1, 5, n_per_op)
        relevance = rng.uniform(1, 5, n_per_op)
        faithfulness = rng.uniform(1, 5, n_per_op)
        pool += [
            make_record(i, op, quality[i], relevance[i], faithfulness[i])
            for i in range(n_per_op)
        ]
    return pool


def reference_cascade(pool, fraction, min_q, k):
    """Brute-force one-pass reference filter, written independently of the
    cascade implementation; operates on one op's records."""
    ranked = sorted(pool, key=lambda r: (-r.scores.faithfulness, r.triplet_id))
    kept = ranked[: math.floor(fraction * len(ranked) + 1e-9)]
    kept = [r for r in kept if r.scores.quality >= min_q]
    kept = sorted(kept, key=lambda r: (-r.scores.relevance, r.triplet_id))[:k]
    return sorted(kept, key=lambda r: r.triplet_id)


class TestStage1:
    def test_floor_of_fraction(self):
        pool = [make_record(i, faithfulness=1 + i * 0.4) for i in range(10)]
        kept = stage1_faithfulness_top_fraction(pool, 0.30)
        assert len(kept) == 3
        assert [r.triplet_id for r in kept] == ["add-000009", "add-000008", "add-000007"]

    def test_tie_break_by_id(self):
        pool = [make_record(i) for i in range(10)]
        kept = stage1_faithfulness_top_fraction(pool, 0.30)
        assert [r.triplet_id for r in kept] == ["add-000000", "add-000001", "add-000002"]

    def test_cutoff_is_last_retained(self, rng):
        pool = random_pool(rng, 200, ops=("add",))
        kept = stage1_faithfulness_top_fraction(pool, 0.30)
        cutoff = kept[-1].scores.faithfulness
        ranked = sorted((r.scores.faithfulness for r in pool), reverse=True)
        assert cutoff == ranked[len(kept) - 1]

    def test_empty_pool(self):
        with pytest.raises(EmptyPool):
            stage1_faithfulness_top_fraction([], 0.30)


class TestStage2:
    def test_boundary_kept(self):
        pool = [
            make_record(0, quality=3.39),
            make_record(1, quality=3.40),
            make_record(2, quality=3.41),
        ]
        kept = stage2_quality_threshold(pool, 3.4)
        assert [r.scores.quality for r in kept] == [3.40, 3.41]

    def test_min_one_is_identity(self, rng):
        pool = random_pool(rng, 50, ops=("add",))
        assert stage2_quality_threshold(pool, 1.0) == pool


class TestStage3:
    def test_underfilled_warns_and_keeps_all(self):
        pool = [make_record(i, relevance=1 + i) for i in range(5)]
        with pytest.warns(UnderfilledWarning):
            kept = stage3_relevance_top_k(pool, 30000)
        assert len(kept) == 5

    def test_k_one_selects_max_relevance(self, rng):
        pool = random_pool(rng, 100, ops=("add",))
        kept = stage3_relevance_top_k(pool, 1)
        assert kept[0].scores.relevance == max(r.scores.relevance for r in pool)


class TestRunCascade:
    def test_identity_config(self, rng):
        pool = random_pool(rng, 40)
        survivors, report = run_cascade(
            pool, FilterConfig(stage1_fraction=1.0, stage2_quality_min=1.0, stage3_top_k=40)
        )
        assert sorted(s.triplet_id for s in survivors) == sorted(r.triplet_id for r in pool)
        assert all(f.after_stage3 == 40 for f in report.funnels.values())

    def test_matches_reference_filter_per_op(self, rng):
        pool = random_pool(rng, 1000)
        config = FilterConfig(stage3_top_k=120)
        survivors, report = run_cascade(pool, config)
        expected = []
        for op in ("add", "delete", "replace"):
            expected += reference_cascade(
                [r for r in pool if r.op == op],
                config.stage1_fraction, config.stage2_quality_min, config.stage3_top_k,
            )
        assert survivors == sorted(expected, key=lambda r: r.triplet_id)

    def test_cardinalities_non_increasing(self, rng):
        pool = random_pool(rng, 500)
        _, report = run_cascade(pool, FilterConfig(stage3_top_k=100))
        for funnel in report.funnels.values():
            assert (
                funnel.original
                >= funnel.after_stage1
                >= funnel.after_stage2
                >= funnel.after_stage3
            )

    def test_cutoffs_match_direct_quantiles(self, rng):
        pool = random_pool(rng, 400, ops=("add",))
        config = FilterConfig(stage3_top_k=50)
        _, report = run_cascade(pool, config)
        funnel = report.funnels["add"]
        faithfulness = sorted((r.scores.faithfulness for r in pool), reverse=True)
        retained = math.floor(config.stage1_fraction * len(pool) + 1e-9)
        assert funnel.stage1_faithfulness_cutoff == faithfulness[retained - 1]

    def test_input_order_irrelevant(self, rng):
        pool = random_pool(rng, 300)
        shuffled = list(pool)
        rng.shuffle(shuffled)
        config = FilterConfig(stage3_top_k=60)
        first, first_report = run_cascade(pool, config)
        second, second_report = run_cascade(shuffled, config)
        assert first == second
        assert first_report == second_report

    def test_per_op_isolation(self, rng):
        # Filtering one op's pool must not read another's records.
        pool_add = random_pool(rng, 200, ops=("add",))
        pool_all = pool_add + random_pool(rng, 200, ops=("delete",))
        config = FilterConfig(stage3_top_k=30)
        solo, _ = run_cascade(pool_add, config)
        joint, _ = run_cascade(pool_all, config)
        assert [r for r in joint if r.op == "add"] == solo

    def test_report_round_trip(self, rng, tmp_path):
        pool = random_pool(rng, 100)
        _, report = run_cascade(pool, FilterConfig(stage3_top_k=10))
        path = tmp_path / "report.json"
        report.save(path)
        assert FilterReport.load(path) == report
