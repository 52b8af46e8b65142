"""Attach quality/relevance/faithfulness scores to triplets.

Three sources are supported: a score manifest file, a remote scorer service
speaking the /v1/score_batch protocol, and a deterministic hash-based stub.
The gateway never clamps scores; anything outside [1, 5] is a typed error.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import requests

from .errors import (
    DuplicateId,
    OutOfRangeScore,
    ProtocolViolation,
    ScoreJoinError,
    SchemaViolation,
    TransportFailure,
)
from .manifest import dump_jsonl, load_jsonl, require_fields
from .pipeline import EditTriplet
from .rng import unit_draw

SCORE_MIN = 1.0
SCORE_MAX = 5.0
DIMENSIONS = ("quality", "relevance", "faithfulness")

# Mirrors the scorer service's validation batch so its memory envelope stays
# predictable.
DEFAULT_MAX_BATCH = 64


@dataclass(frozen=True, slots=True)
class ScoreTriple:
    """Quality/relevance/faithfulness on the 1-5 scale, higher is better."""

    quality: float
    relevance: float
    faithfulness: float

    def __post_init__(self):
        for name in DIMENSIONS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value != value:
                raise OutOfRangeScore(f"{name} is not a finite number: {value!r}")
            if not SCORE_MIN <= value <= SCORE_MAX:
                raise OutOfRangeScore(f"{name} {value} outside [{SCORE_MIN}, {SCORE_MAX}]")


@dataclass(frozen=True, slots=True)
class ScoredRecord:
    triplet_id: str
    scores: ScoreTriple
    scorer_id: str


@dataclass(frozen=True, slots=True)
class ItemFailure:
    """Per-item failure reported by the remote scorer; never silently dropped."""

    triplet_id: str
    reason: str


@dataclass(frozen=True, slots=True)
class ScoredTriplet:
    """A triplet id, its operation, and its scores; the filter cascade input."""

    triplet_id: str
    op: str
    scores: ScoreTriple


@dataclass(frozen=True)
class RetryPolicy:
    retries: int = 3
    backoff_s: tuple[float, ...] = (0.5, 1.0, 2.0)
    timeout_s: float = 30.0


def record_to_dict(r: ScoredRecord) -> dict:
    return {"triplet_id": r.triplet_id, **asdict(r.scores), "scorer_id": r.scorer_id}


def write_score_manifest(records: Iterable[ScoredRecord], path) -> None:
    dump_jsonl(path, (record_to_dict(r) for r in records))


def load_scores(path) -> list[ScoredRecord]:
    """Read a score manifest, rejecting duplicates and out-of-range values."""
    records = []
    seen = set()
    for lineno, row in enumerate(load_jsonl(path), start=1):
        require_fields(row, ("triplet_id", *DIMENSIONS), path, lineno)
        triplet_id = str(row["triplet_id"])
        if triplet_id in seen:
            raise DuplicateId(f"{path}:{lineno}: duplicate triplet_id {triplet_id!r}")
        seen.add(triplet_id)
        try:
            scores = ScoreTriple(*(float(row[d]) for d in DIMENSIONS))
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"{path}:{lineno}: {exc}") from exc
        except OutOfRangeScore as exc:
            raise OutOfRangeScore(f"{path}:{lineno}: {exc}") from exc
        records.append(ScoredRecord(triplet_id, scores, str(row.get("scorer_id", "file"))))
    return records


def stub_score(triplet: EditTriplet, seed: int) -> ScoreTriple:
    """Deterministic pseudo-scores, uniform over [1, 5] across triplet ids."""
    return ScoreTriple(
        *(
            SCORE_MIN
            + (SCORE_MAX - SCORE_MIN) * unit_draw(seed, triplet.triplet_id, dim)
            for dim in DIMENSIONS
        )
    )


def _score_payload(triplets: Sequence[EditTriplet], resolve=None) -> list[dict]:
    resolve = resolve or (lambda ref: ref)
    return [
        {
            "id": t.triplet_id,
            "original_audio": str(resolve(t.input_ref)),
            "edited_audio": str(resolve(t.output_ref)),
            "original_text": t.input_prompt,
            "edited_text": t.output_prompt,
        }
        for t in triplets
    ]


def _parse_entry(entry, expected_id: str) -> ScoredRecord | ItemFailure:
    if not isinstance(entry, dict):
        raise ProtocolViolation(f"entry for {expected_id!r} is not an object")
    got_id = entry.get("id")
    if got_id != expected_id:
        raise ProtocolViolation(f"expected id {expected_id!r} in order, got {got_id!r}")
    if "error" in entry:
        return ItemFailure(expected_id, str(entry["error"]))
    missing = [d for d in DIMENSIONS if d not in entry]
    if missing:
        raise ProtocolViolation(f"entry {expected_id!r} missing {missing}")
    try:
        scores = ScoreTriple(*(float(entry[d]) for d in DIMENSIONS))
    except (TypeError, ValueError) as exc:
        raise ProtocolViolation(f"entry {expected_id!r}: {exc}") from exc
    except OutOfRangeScore as exc:
        raise ProtocolViolation(f"entry {expected_id!r}: {exc}") from exc
    return ScoredRecord(expected_id, scores, str(entry.get("model_version", "remote")))


def score_remote(
    endpoint: str,
    triplets: Sequence[EditTriplet],
    retry: RetryPolicy = RetryPolicy(),
    *,
    max_batch: int = DEFAULT_MAX_BATCH,
    bearer_token: str | None = None,
    resolve_ref=None,
    sleep=time.sleep,
) -> list[ScoredRecord | ItemFailure]:
    """Score one batch against a remote service, preserving input order.

    Transient transport problems (connection errors, timeouts, 5xx) are
    retried per the policy; a malformed response raises ProtocolViolation.
    Per-item errors reported by the service come back as ItemFailure entries.
    """
    if len(triplets) > max_batch:
        raise ValueError(f"batch of {len(triplets)} exceeds max {max_batch}")
    if not triplets:
        return []
    url = endpoint.rstrip("/") + "/v1/score_batch"
    headers = {"Authorization": f"Bearer {bearer_token}"} if bearer_token else {}
    payload = _score_payload(triplets, resolve_ref)

    response = None
    for attempt in range(retry.retries + 1):
        try:
            response = requests.post(
                url, json=payload, headers=headers, timeout=retry.timeout_s
            )
            if response.status_code < 500:
                break
            failure = f"server error {response.status_code}"
        except requests.RequestException as exc:
            failure = str(exc)
            response = None
        if attempt == retry.retries:
            raise TransportFailure(
                f"{url} unreachable after {retry.retries} retries: {failure}"
            )
        sleep(retry.backoff_s[min(attempt, len(retry.backoff_s) - 1)])

    if response.status_code != 200:
        raise ProtocolViolation(f"{url} returned status {response.status_code}")
    try:
        body = response.json()
    except ValueError as exc:
        raise ProtocolViolation(f"{url} returned non-JSON body") from exc
    if not isinstance(body, list) or len(body) != len(triplets):
        raise ProtocolViolation(
            f"expected {len(triplets)} entries, got "
            f"{len(body) if isinstance(body, list) else type(body).__name__}"
        )
    return [_parse_entry(entry, t.triplet_id) for entry, t in zip(body, triplets)]


def join_scores(
    triplets: Sequence[EditTriplet], records: Sequence[ScoredRecord]
) -> list[ScoredTriplet]:
    """Join scores onto triplets; any unmatched id on either side is fatal."""
    by_id = {}
    for record in records:
        if record.triplet_id in by_id:
            raise DuplicateId(f"duplicate score for {record.triplet_id!r}")
        by_id[record.triplet_id] = record
    triplet_ids = {t.triplet_id for t in triplets}
    missing = triplet_ids - by_id.keys()
    unmatched = by_id.keys() - triplet_ids
    if missing or unmatched:
        raise ScoreJoinError(missing, unmatched)
    return [ScoredTriplet(t.triplet_id, t.op, by_id[t.triplet_id].scores) for t in triplets]
