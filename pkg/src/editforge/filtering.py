"""Three-stage score cascade that distills a scored pool to its best subset.

Stage 1 keeps the top fraction by faithfulness, stage 2 drops quality below a
fixed threshold, stage 3 keeps the top k by relevance. Realized stage-1 and
stage-3 cutoffs are outputs of the cascade, recorded in the report, never
inputs. All sorts tie-break by ascending triplet id so the result does not
depend on input order.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import EmptyPool, IoFailure, UnderfilledWarning
from .scoring import ScoredTriplet

DEFAULT_STAGE1_FRACTION = 0.30
DEFAULT_STAGE2_QUALITY_MIN = 3.4
DEFAULT_STAGE3_TOP_K = 30000


@dataclass(frozen=True)
class FilterConfig:
    stage1_fraction: float = DEFAULT_STAGE1_FRACTION
    stage2_quality_min: float = DEFAULT_STAGE2_QUALITY_MIN
    stage3_top_k: int = DEFAULT_STAGE3_TOP_K
    per_task: bool = True

    def __post_init__(self):
        if not 0 < self.stage1_fraction <= 1:
            raise ValueError("stage1_fraction must lie in (0, 1]")
        if self.stage3_top_k < 1:
            raise ValueError("stage3_top_k must be positive")


@dataclass(frozen=True)
class OpFunnel:
    """Cardinalities and realized cutoffs for one operation's cascade."""

    original: int
    after_stage1: int
    after_stage2: int
    after_stage3: int
    stage1_faithfulness_cutoff: float | None
    stage3_relevance_cutoff: float | None


@dataclass(frozen=True)
class FilterReport:
    stage1_fraction: float
    stage2_quality_min: float
    stage3_top_k: int
    per_task: bool
    funnels: dict[str, OpFunnel] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "stage1_fraction": self.stage1_fraction,
            "stage2_quality_min": self.stage2_quality_min,
            "stage3_top_k": self.stage3_top_k,
            "per_task": self.per_task,
            "funnels": {
                op: {
                    "original": f.original,
                    "after_stage1": f.after_stage1,
                    "after_stage2": f.after_stage2,
                    "after_stage3": f.after_stage3,
                    "stage1_faithfulness_cutoff": f.stage1_faithfulness_cutoff,
                    "stage3_relevance_cutoff": f.stage3_relevance_cutoff,
                }
                for op, f in sorted(self.funnels.items())
            },
        }

    def save(self, path) -> None:
        try:
            Path(path).write_text(
                json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8"
            )
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    @classmethod
    def from_dict(cls, d: dict) -> "FilterReport":
        funnels = {op: OpFunnel(**f) for op, f in d["funnels"].items()}
        return cls(
            d["stage1_fraction"], d["stage2_quality_min"], d["stage3_top_k"],
            d["per_task"], funnels,
        )

    @classmethod
    def load(cls, path) -> "FilterReport":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _retained_count(fraction: float, n: int) -> int:
    # floor(fraction * n); the epsilon undoes binary representation error in
    # decimal fractions (0.3 * 10 must retain 3, not 2).
    return int(math.floor(fraction * n + 1e-9))


def stage1_faithfulness_top_fraction(
    records: Sequence[ScoredTriplet], fraction: float
) -> list[ScoredTriplet]:
    """Keep the top floor(fraction*N) records by faithfulness (desc, id asc)."""
    if not records:
        raise EmptyPool("stage 1 received no records")
    ranked = sorted(records, key=lambda r: (-r.scores.faithfulness, r.triplet_id))
    return ranked[: _retained_count(fraction, len(ranked))]


def stage2_quality_threshold(
    records: Sequence[ScoredTriplet], min_q: float
) -> list[ScoredTriplet]:
    """Keep records with quality >= min_q; the boundary score survives."""
    return [r for r in records if r.scores.quality >= min_q]


def stage3_relevance_top_k(
    records: Sequence[ScoredTriplet], k: int
) -> list[ScoredTriplet]:
    """Keep the top min(k, N) records by relevance (desc, id asc)."""
    ranked = sorted(records, key=lambda r: (-r.scores.relevance, r.triplet_id))
    if len(ranked) < k:
        warnings.warn(
            UnderfilledWarning(f"only {len(ranked)} records available for top-{k}")
        )
    return ranked[:k]


def run_cascade(
    records: Sequence[ScoredTriplet], config: FilterConfig = FilterConfig()
) -> tuple[list[ScoredTriplet], FilterReport]:
    """Run the three stages, per operation when config.per_task.

    Returns the surviving records sorted by triplet id and a report with the
    per-op funnel cardinalities plus the realized cutoffs.
    """
    if not records:
        raise EmptyPool("cascade received no records")
    if config.per_task:
        pools = {}
        for r in records:
            pools.setdefault(r.op, []).append(r)
    else:
        pools = {"all": list(records)}

    survivors: list[ScoredTriplet] = []
    funnels: dict[str, OpFunnel] = {}
    for op in sorted(pools):
        pool = pools[op]
        s1 = stage1_faithfulness_top_fraction(pool, config.stage1_fraction)
        s2 = stage2_quality_threshold(s1, config.stage2_quality_min)
        s3 = stage3_relevance_top_k(s2, config.stage3_top_k)
        funnels[op] = OpFunnel(
            original=len(pool),
            after_stage1=len(s1),
            after_stage2=len(s2),
            after_stage3=len(s3),
            stage1_faithfulness_cutoff=s1[-1].scores.faithfulness if s1 else None,
            stage3_relevance_cutoff=s3[-1].scores.relevance if s3 else None,
        )
        survivors.extend(s3)

    survivors.sort(key=lambda r: r.triplet_id)
    report = FilterReport(
        config.stage1_fraction, config.stage2_quality_min, config.stage3_top_k,
        config.per_task, funnels,
    )
    return survivors, report
