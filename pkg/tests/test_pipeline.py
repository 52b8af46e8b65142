import numpy as np
import pytest

from editforge.captions import CaptionConfig
from editforge.errors import (
    DurationMismatch,
    EventTooLong,
    IncompleteTuple,
    SchemaViolation,
)
from editforge.mixing import InsertionPlan
from editforge.pipeline import (
    TupleRecord,
    apply_drop,
    build_tuple,
    expand_triplets,
    read_triplet_manifest,
    read_tuple_manifest,
    write_triplet_manifest,
    write_tuple_manifest,
)

from .conftest import random_clip

CFG = CaptionConfig()


def off_middle_centers(n, rng):
    """Synthetic centers with zero middle-band mass, split evenly."""
    lows = rng.uniform(0.0, CFG.split1_s - 1e-6, n // 2)
    highs = rng.uniform(CFG.split2_s + 1e-6, 10.0, n - n // 2)
    values = np.concatenate([lows, highs])
    rng.shuffle(values)
    return [(f"t{i:05d}", float(c)) for i, c in enumerate(values)]


class TestApplyDrop:
    def test_all_middle_untouched(self):
        centers = [(f"t{i}", 5.0) for i in range(50)]
        assert all(forced is None for _, forced in apply_drop(centers, CFG))

    def test_zero_middle_mass_reassigns_about_a_third(self, rng):
        centers = off_middle_centers(10000, rng)
        out = apply_drop(centers, CFG)
        moved = sum(forced is not None for _, forced in out)
        assert abs(moved / len(out) - 1 / 3) <= 0.02
        for _, forced in out:
            if forced is not None:
                assert CFG.split1_s <= forced <= CFG.split2_s

    def test_exact_third_already_middle_does_nothing(self):
        centers = [(f"m{i}", 5.0) for i in range(10)]
        centers += [(f"o{i}", 1.0) for i in range(20)]
        assert all(forced is None for _, forced in apply_drop(centers, CFG))

    def test_order_independent_decisions(self, rng):
        centers = off_middle_centers(200, rng)
        forward = dict(apply_drop(centers, CFG))
        backward = dict(apply_drop(list(reversed(centers)), CFG))
        assert forward == backward

    def test_empty_input(self):
        assert apply_drop([], CFG) == []


def tuple_clips(rng, b_seconds=4.0, c_seconds=4.0, rate=8000):
    a = random_clip(rng, 10.0, rate=rate)
    b = random_clip(rng, b_seconds, rate=rate)
    c = random_clip(rng, c_seconds, rate=rate)
    return a, b, c


class TestBuildTuple:
    def test_replacement_trimmed_within_tolerance(self, rng):
        a, b, c = tuple_clips(rng, 4.0, 4.02)
        built = build_tuple(a, b, c, "bg", "event", "swap", CFG, tuple_id="t0")
        assert built.record.plan_ac.win_len_s == built.record.plan_ab.win_len_s
        assert len(built.mixed_ac) == len(a)

    def test_replacement_too_long(self, rng):
        a, b, c = tuple_clips(rng, 4.0, 6.0)
        with pytest.raises(DurationMismatch):
            build_tuple(a, b, c, "bg", "event", "swap", CFG, tuple_id="t0")

    def test_replacement_slightly_short_kept(self, rng):
        a, b, c = tuple_clips(rng, 4.0, 3.97)
        built = build_tuple(a, b, c, "bg", "event", "swap", CFG, tuple_id="t0")
        assert built.record.plan_ac.win_len_s == pytest.approx(3.97)

    def test_replacement_much_shorter_rejected(self, rng):
        a, b, c = tuple_clips(rng, 4.0, 3.9)
        with pytest.raises(DurationMismatch):
            build_tuple(a, b, c, "bg", "event", "swap", CFG, tuple_id="t0")

    def test_event_longer_than_background(self, rng):
        a, b, c = tuple_clips(rng, 4.0, 4.0)
        with pytest.raises(EventTooLong):
            build_tuple(b, a, c, "bg", "event", "swap", CFG, tuple_id="t0")

    def test_three_to_six_second_events_on_ten_second_background(self, rng):
        for b_seconds in (3.0, 4.5, 6.0):
            a, b, c = tuple_clips(rng, b_seconds, b_seconds)
            built = build_tuple(a, b, c, "bg", "event", "swap", CFG, tuple_id="t0")
            assert built.record.plan_ab.win_len_s == pytest.approx(b_seconds)

    def test_forced_center_applied_to_both_mixes(self, rng):
        a, b, c = tuple_clips(rng, 4.0, 4.0)
        built = build_tuple(
            a, b, c, "bg", "event", "swap", CFG, tuple_id="t0", forced_center_s=5.0
        )
        assert built.record.plan_ab.center_s == 5.0
        assert built.record.plan_ac.center_s == 5.0
        assert built.record.plan_ab.forced and built.record.plan_ac.forced

    def test_event_resampled_to_background_rate(self, rng):
        a = random_clip(rng, 10.0, rate=8000)
        b = random_clip(rng, 4.0, rate=16000)
        c = random_clip(rng, 4.0, rate=16000)
        built = build_tuple(a, b, c, "bg", "event", "swap", CFG, tuple_id="t0")
        assert built.mixed_ab.sample_rate_hz == 8000


def make_tuple_record(tuple_id="t1"):
    plan = InsertionPlan(4.0, 5.5, 3.0, 2.0, 0.0, 0.0, False)
    return TupleRecord(
        tuple_id=tuple_id,
        a_ref="a.wav", b_ref="b.wav", c_ref="c.wav",
        p_a="a dog barks", p_b="rain falls", p_c="wind howls",
        plan_ab=plan, plan_ac=plan,
        caption_ab="Rain falls, a dog barks.",
        caption_ac="Wind howls, a dog barks.",
        mixed_ab_ref="audio/t1.ab.wav", mixed_ac_ref="audio/t1.ac.wav",
    )


class TestExpandTriplets:
    def test_six_triplets_two_per_op(self):
        triplets = expand_triplets(make_tuple_record())
        assert len(triplets) == 6
        ops = [t.op for t in triplets]
        assert ops.count("add") == ops.count("delete") == ops.count("replace") == 2

    def test_delete_pairing(self):
        t = make_tuple_record()
        delete_b = next(x for x in expand_triplets(t) if x.triplet_id.endswith("delete-b"))
        assert delete_b.input_ref == t.mixed_ab_ref
        assert delete_b.output_ref == t.a_ref
        assert delete_b.input_prompt == t.caption_ab
        assert delete_b.output_prompt == t.p_a
        assert delete_b.instruction == "Delete: rain falls"

    def test_replace_pairing(self):
        t = make_tuple_record()
        replace_bc = next(x for x in expand_triplets(t) if x.triplet_id.endswith("replace-bc"))
        assert replace_bc.input_ref == t.mixed_ab_ref
        assert replace_bc.output_ref == t.mixed_ac_ref
        assert replace_bc.instruction == "Replace: rain falls with wind howls"

    def test_add_pairing(self):
        t = make_tuple_record()
        add_b = next(x for x in expand_triplets(t) if x.triplet_id.endswith("add-b"))
        assert add_b.input_ref == t.a_ref
        assert add_b.output_ref == t.mixed_ab_ref
        assert add_b.output_prompt == t.caption_ab

    def test_ids_deterministic(self):
        first = [t.triplet_id for t in expand_triplets(make_tuple_record())]
        second = [t.triplet_id for t in expand_triplets(make_tuple_record())]
        assert first == second

    def test_incomplete_tuple(self):
        from dataclasses import replace

        broken = replace(make_tuple_record(), caption_ab="")
        with pytest.raises(IncompleteTuple):
            expand_triplets(broken)


class TestManifests:
    def test_tuple_round_trip(self, tmp_path):
        records = [make_tuple_record(f"t{i:03d}") for i in range(100)]
        path = tmp_path / "tuples.jsonl"
        write_tuple_manifest(records, path)
        assert read_tuple_manifest(path) == records

    def test_triplet_round_trip(self, tmp_path):
        triplets = expand_triplets(make_tuple_record())
        path = tmp_path / "triplets.jsonl"
        write_triplet_manifest(triplets, path)
        assert read_triplet_manifest(path) == triplets

    def test_missing_field_names_line(self, tmp_path):
        triplets = expand_triplets(make_tuple_record())
        path = tmp_path / "triplets.jsonl"
        write_triplet_manifest(triplets, path)
        lines = path.read_text().splitlines()
        import json

        row = json.loads(lines[2])
        del row["op"]
        lines[2] = json.dumps(row)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaViolation, match=r":3: missing field 'op'"):
            read_triplet_manifest(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert read_tuple_manifest(path) == []
