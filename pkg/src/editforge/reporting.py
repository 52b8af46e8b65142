"""Figure and delimited-summary rendering for scores, filters, and metrics.

Each render function writes one PNG plus one CSV into the output directory
and returns the written paths. Figures use the Agg backend so the report
path works headless.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import IoFailure
from .filtering import FilterReport
from .metrics import METRIC_NAMES, PairedScores, correlation_grid, system_aggregate
from .scoring import DIMENSIONS, ScoredRecord

_SCORE_BINS = np.linspace(1.0, 5.0, 17)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def render_score_distributions(
    records: Sequence[ScoredRecord], out_dir
) -> list[Path]:
    """Histogram per dimension plus a summary-statistics CSV."""
    out_dir = Path(out_dir)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2), sharey=True)
    rows = []
    for ax, dim in zip(axes, DIMENSIONS):
        values = np.array([getattr(r.scores, dim) for r in records])
        ax.hist(values, bins=_SCORE_BINS, color="#4878a8", edgecolor="white")
        ax.set_title(dim.capitalize())
        ax.set_xlabel("score")
        rows.append(
            [dim, len(values), f"{values.mean():.4f}", f"{values.std(ddof=0):.4f}",
             f"{values.min():.4f}", f"{values.max():.4f}"]
        )
    axes[0].set_ylabel("count")
    fig.tight_layout()
    png = out_dir / "score_distributions.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)
    csv_path = out_dir / "score_summary.csv"
    _write_csv(csv_path, ["dimension", "count", "mean", "std", "min", "max"], rows)
    return [png, csv_path]


def render_filter_funnel(report: FilterReport, out_dir) -> list[Path]:
    """Grouped bar chart of per-op cardinalities after each cascade stage."""
    out_dir = Path(out_dir)
    stages = ["original", "after_stage1", "after_stage2", "after_stage3"]
    ops = sorted(report.funnels)
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.8 / len(stages)
    xs = np.arange(len(ops))
    for i, stage in enumerate(stages):
        counts = [getattr(report.funnels[op], stage) for op in ops]
        ax.bar(xs + i * width, counts, width, label=stage.replace("_", " "))
    ax.set_xticks(xs + width * (len(stages) - 1) / 2)
    ax.set_xticklabels(ops)
    ax.set_ylabel("records")
    ax.set_title("Filter cascade funnel")
    ax.legend(fontsize=8)
    fig.tight_layout()
    png = out_dir / "filter_funnel.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)

    rows = []
    for op in ops:
        f = report.funnels[op]
        rows.append(
            [op, f.original, f.after_stage1, f.after_stage2, f.after_stage3,
             f.stage1_faithfulness_cutoff, report.stage2_quality_min,
             f.stage3_relevance_cutoff]
        )
    csv_path = out_dir / "filter_funnel.csv"
    _write_csv(
        csv_path,
        ["op", "original", "after_stage1", "after_stage2", "after_stage3",
         "stage1_faithfulness_cutoff", "stage2_quality_min", "stage3_relevance_cutoff"],
        rows,
    )
    return [png, csv_path]


def render_paired_report(
    per_dimension: Mapping[str, PairedScores], out_dir
) -> list[Path]:
    """System-level human-vs-predicted scatter plus the metrics grid CSV."""
    out_dir = Path(out_dir)
    dims = sorted(per_dimension)
    fig, axes = plt.subplots(1, len(dims), figsize=(4 * len(dims), 3.6), squeeze=False)
    for ax, dim in zip(axes[0], dims):
        agg = system_aggregate(per_dimension[dim])
        ax.scatter(agg.human, agg.predicted, s=18, color="#a85448")
        lo = min(agg.human.min(), agg.predicted.min())
        hi = max(agg.human.max(), agg.predicted.max())
        ax.plot([lo, hi], [lo, hi], lw=0.8, color="gray", linestyle="--")
        ax.set_title(dim)
        ax.set_xlabel("human (system mean)")
        ax.set_ylabel("predicted (system mean)")
    fig.tight_layout()
    png = out_dir / "system_scatter.png"
    fig.savefig(png, dpi=120)
    plt.close(fig)

    grid = correlation_grid(per_dimension)
    rows = [
        [dim, level] + [f"{grid[dim][level][m]:.6f}" for m in METRIC_NAMES]
        for dim in sorted(grid)
        for level in ("system", "utterance")
    ]
    csv_path = out_dir / "metrics_grid.csv"
    _write_csv(csv_path, ["dimension", "level", *METRIC_NAMES], rows)
    return [png, csv_path]
