"""Tuple assembly, drop rebalancing, triplet expansion, and their manifests.

A pool row (A, B, C clips plus prompts) becomes one TupleRecord holding both
mixes and captions; each tuple then expands into six editing triplets, two
per operation. All randomness is keyed by (seed, tuple_id) so a worker pool
produces output identical to a serial run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .audio_io import AudioClip, load_wav, resample_linear, save_wav
from .captions import CaptionConfig, classify_center, render_caption
from .errors import (
    ConfigError,
    DurationMismatch,
    EditForgeError,
    EmptyClip,
    EventTooLong,
    IncompleteTuple,
)
from .manifest import dump_jsonl, load_records, rebase_ref, resolve_ref
from .mixing import DEFAULT_STRIDE_S, InsertionPlan, find_min_energy_window, mix_insert
from .rng import derived_rng

OPS = ("add", "delete", "replace")

# Replacement clip duration tolerance vs the event clip: keep when shorter by
# at most 50 ms, trim the tail when longer by at most 1 s, error beyond.
C_SHORTER_TOL_S = 0.05
C_LONGER_TOL_S = 1.0

MIDDLE_TARGET_FRACTION = 1.0 / 3.0


@dataclass(frozen=True)
class TupleRecord:
    """One (A, B, C, A+B, A+C) synthesis unit with plans and captions."""

    tuple_id: str
    a_ref: str
    b_ref: str
    c_ref: str
    p_a: str
    p_b: str
    p_c: str
    plan_ab: InsertionPlan
    plan_ac: InsertionPlan
    caption_ab: str
    caption_ac: str
    mixed_ab_ref: str
    mixed_ac_ref: str


@dataclass(frozen=True, slots=True)
class EditTriplet:
    """One (instruction, input audio, output audio) training example."""

    triplet_id: str
    tuple_id: str
    op: str
    instruction: str
    input_ref: str
    output_ref: str
    input_prompt: str
    output_prompt: str


@dataclass(frozen=True, slots=True)
class PoolRow:
    """Input row naming the component clips and their prompts."""

    tuple_id: str
    a_ref: str
    b_ref: str
    c_ref: str
    p_a: str
    p_b: str
    p_c: str


@dataclass(frozen=True, slots=True)
class RowError:
    tuple_id: str
    error: str
    message: str


def apply_drop(
    centers: Sequence[tuple[str, float]],
    cfg: CaptionConfig,
    seed: int | None = None,
) -> list[tuple[str, float | None]]:
    """Reassign part of the off-middle insertion centers into the middle band.

    With f_mid the fraction of centers already inside [split1, split2], each
    off-middle center is independently moved with probability
    p = clamp((1/3 - f_mid) / (1 - f_mid), 0, 1) to a uniform draw inside the
    middle band, which equalizes expected band occupancy at one third each.
    Returns (tuple_id, forced_center_s or None) per input, in input order.
    """
    if not centers:
        return []
    seed = cfg.seed if seed is None else seed
    in_middle = [
        cfg.split1_s <= center <= cfg.split2_s for _, center in centers
    ]
    f_mid = sum(in_middle) / len(centers)
    if f_mid >= 1.0:
        p = 0.0
    else:
        p = min(max((MIDDLE_TARGET_FRACTION - f_mid) / (1.0 - f_mid), 0.0), 1.0)

    out: list[tuple[str, float | None]] = []
    for (tuple_id, _center), mid in zip(centers, in_middle):
        if mid or p == 0.0:
            out.append((tuple_id, None))
            continue
        rng = derived_rng(seed, tuple_id, "drop")
        if rng.random() < p:
            forced = cfg.split1_s + (cfg.split2_s - cfg.split1_s) * rng.random()
            out.append((tuple_id, forced))
        else:
            out.append((tuple_id, None))
    return out


@dataclass(frozen=True)
class BuiltTuple:
    record: TupleRecord
    mixed_ab: AudioClip
    mixed_ac: AudioClip


def _fit_replacement(b: AudioClip, c: AudioClip) -> AudioClip:
    rate = b.sample_rate_hz
    gap_s = (len(c) - len(b)) / rate
    if gap_s > C_LONGER_TOL_S + 0.5 / rate:
        raise DurationMismatch(
            f"replacement clip longer than event by {gap_s:.3f} s (> {C_LONGER_TOL_S} s)"
        )
    if -gap_s > C_SHORTER_TOL_S + 0.5 / rate:
        raise DurationMismatch(
            f"replacement clip shorter than event by {-gap_s:.3f} s (> {C_SHORTER_TOL_S} s)"
        )
    if len(c) > len(b):
        return AudioClip(c.samples[: len(b)], rate)
    return c


def build_tuple(
    a: AudioClip,
    b: AudioClip,
    c: AudioClip,
    p_a: str,
    p_b: str,
    p_c: str,
    cfg: CaptionConfig,
    *,
    tuple_id: str,
    a_ref: str = "",
    b_ref: str = "",
    c_ref: str = "",
    forced_center_s: float | None = None,
    stride_s: float = DEFAULT_STRIDE_S,
) -> BuiltTuple:
    """Mix A+B and A+C, render both captions, and assemble the TupleRecord.

    B and C are resampled to A's rate when needed; C is tail-trimmed to B's
    duration within tolerance. A forced center (from the drop operation) is
    applied to both mixes identically so the replace pair stays aligned.
    """
    if len(a) == 0 or len(b) == 0 or len(c) == 0:
        raise EmptyClip("component clips must be non-empty")
    rate = a.sample_rate_hz
    b = resample_linear(b, rate)
    c = resample_linear(c, rate)
    if len(b) > len(a):
        raise EventTooLong(
            f"event of {b.duration_s:.3f} s exceeds background of {a.duration_s:.3f} s"
        )
    if not cfg.split2_s < a.duration_s:
        raise ConfigError(
            f"split2 {cfg.split2_s} s must lie inside the background of {a.duration_s} s"
        )
    c = _fit_replacement(b, c)

    mixed_ab, plan_ab = mix_insert(a, b, forced_center_s, stride_s)
    mixed_ac, plan_ac = mix_insert(a, c, forced_center_s, stride_s)

    caption_ab = render_caption(
        p_a, p_b, classify_center(plan_ab.center_s, cfg),
        derived_rng(cfg.seed, tuple_id, "caption-ab"),
    )
    caption_ac = render_caption(
        p_a, p_c, classify_center(plan_ac.center_s, cfg),
        derived_rng(cfg.seed, tuple_id, "caption-ac"),
    )

    record = TupleRecord(
        tuple_id=tuple_id,
        a_ref=a_ref,
        b_ref=b_ref,
        c_ref=c_ref,
        p_a=p_a,
        p_b=p_b,
        p_c=p_c,
        plan_ab=plan_ab,
        plan_ac=plan_ac,
        caption_ab=caption_ab,
        caption_ac=caption_ac,
        mixed_ab_ref=f"audio/{tuple_id}.ab.wav",
        mixed_ac_ref=f"audio/{tuple_id}.ac.wav",
    )
    return BuiltTuple(record, mixed_ab, mixed_ac)


def expand_triplets(t: TupleRecord) -> list[EditTriplet]:
    """Expand one tuple into its six editing triplets, two per operation."""
    required = {
        "tuple_id": t.tuple_id,
        "a_ref": t.a_ref,
        "p_a": t.p_a,
        "p_b": t.p_b,
        "p_c": t.p_c,
        "caption_ab": t.caption_ab,
        "caption_ac": t.caption_ac,
        "mixed_ab_ref": t.mixed_ab_ref,
        "mixed_ac_ref": t.mixed_ac_ref,
    }
    missing = sorted(name for name, value in required.items() if not value)
    if missing:
        raise IncompleteTuple(f"tuple {t.tuple_id!r} missing {missing}")

    def triplet(slot, op, instruction, input_ref, output_ref, input_prompt, output_prompt):
        return EditTriplet(
            triplet_id=f"{t.tuple_id}:{slot}",
            tuple_id=t.tuple_id,
            op=op,
            instruction=instruction,
            input_ref=input_ref,
            output_ref=output_ref,
            input_prompt=input_prompt,
            output_prompt=output_prompt,
        )

    return [
        triplet("add-b", "add", f"Add: {t.p_b}", t.a_ref, t.mixed_ab_ref, t.p_a, t.caption_ab),
        triplet("add-c", "add", f"Add: {t.p_c}", t.a_ref, t.mixed_ac_ref, t.p_a, t.caption_ac),
        triplet("delete-b", "delete", f"Delete: {t.p_b}", t.mixed_ab_ref, t.a_ref, t.caption_ab, t.p_a),
        triplet("delete-c", "delete", f"Delete: {t.p_c}", t.mixed_ac_ref, t.a_ref, t.caption_ac, t.p_a),
        triplet("replace-bc", "replace", f"Replace: {t.p_b} with {t.p_c}", t.mixed_ab_ref, t.mixed_ac_ref, t.caption_ab, t.caption_ac),
        triplet("replace-cb", "replace", f"Replace: {t.p_c} with {t.p_b}", t.mixed_ac_ref, t.mixed_ab_ref, t.caption_ac, t.caption_ab),
    ]


# --- manifest conversion -----------------------------------------------------

_PLAN_FIELDS = (
    "offset_s", "center_s", "win_len_s", "gain", "window_energy", "clip_fraction", "forced",
)
_TUPLE_FIELDS = (
    "tuple_id", "a_ref", "b_ref", "c_ref", "p_a", "p_b", "p_c",
    "plan_ab", "plan_ac", "caption_ab", "caption_ac", "mixed_ab_ref", "mixed_ac_ref",
)
_TRIPLET_FIELDS = (
    "triplet_id", "tuple_id", "op", "instruction",
    "input_ref", "output_ref", "input_prompt", "output_prompt",
)
_POOL_FIELDS = ("a_ref", "b_ref", "c_ref", "p_a", "p_b", "p_c")


def _plan_from_dict(d: Mapping) -> InsertionPlan:
    missing = [f for f in _PLAN_FIELDS if f not in d]
    if missing:
        raise ValueError(f"insertion plan missing {missing}")
    return InsertionPlan(**{f: d[f] for f in _PLAN_FIELDS})


def tuple_to_dict(t: TupleRecord) -> dict:
    d = asdict(t)
    d["plan_ab"] = asdict(t.plan_ab)
    d["plan_ac"] = asdict(t.plan_ac)
    return d


def tuple_from_dict(d: Mapping) -> TupleRecord:
    kwargs = {f: d[f] for f in _TUPLE_FIELDS}
    kwargs["plan_ab"] = _plan_from_dict(d["plan_ab"])
    kwargs["plan_ac"] = _plan_from_dict(d["plan_ac"])
    return TupleRecord(**kwargs)


def triplet_from_dict(d: Mapping) -> EditTriplet:
    if d["op"] not in OPS:
        raise ValueError(f"unknown op {d['op']!r}")
    return EditTriplet(**{f: d[f] for f in _TRIPLET_FIELDS})


def write_tuple_manifest(records: Iterable[TupleRecord], path) -> None:
    dump_jsonl(path, (tuple_to_dict(r) for r in records))


def read_tuple_manifest(path) -> list[TupleRecord]:
    return load_records(path, tuple_from_dict, _TUPLE_FIELDS)


def write_triplet_manifest(records: Iterable[EditTriplet], path) -> None:
    dump_jsonl(path, (asdict(r) for r in records))


def read_triplet_manifest(path) -> list[EditTriplet]:
    return load_records(path, triplet_from_dict, _TRIPLET_FIELDS)


def read_pool_manifest(path) -> list[PoolRow]:
    rows = []
    for lineno, row in enumerate(load_records(path, dict, _POOL_FIELDS), start=1):
        rows.append(
            PoolRow(
                tuple_id=str(row.get("tuple_id") or f"t{lineno - 1:06d}"),
                **{f: str(row[f]) for f in _POOL_FIELDS},
            )
        )
    return rows


# --- pool synthesis ----------------------------------------------------------


def _load_row_clips(pool_path, row: PoolRow):
    a = load_wav(resolve_ref(pool_path, row.a_ref))
    b = load_wav(resolve_ref(pool_path, row.b_ref))
    c = load_wav(resolve_ref(pool_path, row.c_ref))
    return a, resample_linear(b, a.sample_rate_hz), resample_linear(c, a.sample_rate_hz)


def synthesize_pool(
    pool_path,
    out_dir,
    cfg: CaptionConfig,
    stride_s: float = DEFAULT_STRIDE_S,
    workers: int = 1,
    encoding: str = "float32",
) -> tuple[list[TupleRecord], list[RowError]]:
    """Build every pool row into a tuple, writing mixed WAVs under out_dir.

    Pass 1 finds each tuple's natural insertion center, the drop operation
    rebalances the centers, pass 2 mixes and writes. Per-row failures are
    collected, never fatal. Records come back sorted by tuple_id.
    """
    rows = read_pool_manifest(pool_path)
    out_dir = Path(out_dir)
    (out_dir / "audio").mkdir(parents=True, exist_ok=True)

    def _map(fn: Callable, items: Sequence):
        if workers <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))

    def natural_center(row: PoolRow):
        try:
            a, b, _c = _load_row_clips(pool_path, row)
            if len(b) > len(a):
                raise EventTooLong(
                    f"event of {b.duration_s:.3f} s exceeds background of {a.duration_s:.3f} s"
                )
            t_b = b.duration_s
            offset = find_min_energy_window(a, t_b, stride_s)
            return row.tuple_id, offset + t_b / 2.0
        except EditForgeError as exc:
            return row.tuple_id, exc

    errors: dict[str, RowError] = {}
    centers = []
    for tuple_id, value in _map(natural_center, rows):
        if isinstance(value, EditForgeError):
            errors[tuple_id] = RowError(tuple_id, type(value).__name__, str(value))
        else:
            centers.append((tuple_id, value))

    forced = dict(apply_drop(centers, cfg))

    # Manifest refs are read relative to the manifest's own directory, so
    # pool-relative input refs must be re-expressed for the output manifest.
    pool_dir = Path(pool_path).parent

    def build(row: PoolRow):
        if row.tuple_id in errors:
            return None
        try:
            a, b, c = _load_row_clips(pool_path, row)
            built = build_tuple(
                a, b, c, row.p_a, row.p_b, row.p_c, cfg,
                tuple_id=row.tuple_id,
                a_ref=rebase_ref(row.a_ref, pool_dir, out_dir),
                b_ref=rebase_ref(row.b_ref, pool_dir, out_dir),
                c_ref=rebase_ref(row.c_ref, pool_dir, out_dir),
                forced_center_s=forced.get(row.tuple_id),
                stride_s=stride_s,
            )
            save_wav(built.mixed_ab, out_dir / built.record.mixed_ab_ref, encoding)
            save_wav(built.mixed_ac, out_dir / built.record.mixed_ac_ref, encoding)
            return built.record
        except EditForgeError as exc:
            return RowError(row.tuple_id, type(exc).__name__, str(exc))

    records = []
    for result in _map(build, rows):
        if isinstance(result, RowError):
            errors[result.tuple_id] = result
        elif result is not None:
            records.append(result)
    records.sort(key=lambda r: r.tuple_id)
    return records, sorted(errors.values(), key=lambda e: e.tuple_id)
