"""Correlation and distribution metrics for scorer and audio-set evaluation.

Correlations operate on paired human/predicted columns at the utterance level
or on per-system means. Distribution metrics (Fréchet distance, paired KL,
inception score, scaled cosine similarity) operate on externally supplied
embedding and logit matrices; no neural inference happens here.

Implementation notes: Spearman uses average ranks plus Pearson, which is
exact under ties; Kendall is tau-b with tie corrections; Fréchet covariances
use the unbiased (n-1) normalization and the matrix square root comes from a
symmetric eigendecomposition with eigenvalues clamped at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    AllTied,
    InsufficientSamples,
    IoFailure,
    LengthMismatch,
    NumericalFailure,
    SchemaViolation,
    ShapeMismatch,
    TooFewSystems,
    ZeroVariance,
    ZeroVector,
)
from .manifest import load_jsonl, require_fields

_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class PairedScores:
    """Parallel human and predicted score columns with utterance/system ids."""

    ids: tuple[str, ...]
    system_ids: tuple[str, ...]
    human: np.ndarray
    predicted: np.ndarray

    def __post_init__(self):
        human = np.asarray(self.human, dtype=np.float64)
        predicted = np.asarray(self.predicted, dtype=np.float64)
        n = len(self.ids)
        if not (len(self.system_ids) == len(human) == len(predicted) == n):
            raise LengthMismatch("paired columns must have equal lengths")
        if n < 2:
            raise LengthMismatch("paired scores need at least 2 rows")
        if not (np.isfinite(human).all() and np.isfinite(predicted).all()):
            raise ValueError("score columns must be finite")
        object.__setattr__(self, "human", human)
        object.__setattr__(self, "predicted", predicted)


@dataclass(frozen=True)
class EmbeddingSet:
    """n x d matrix of embedding vectors from one audio set."""

    vectors: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if not np.isfinite(vectors).all():
            raise ValueError("embedding entries must be finite")
        object.__setattr__(self, "vectors", vectors)


@dataclass(frozen=True)
class LogitSet:
    """n x c matrix of classifier logits, one row per clip."""

    logits: np.ndarray

    def __post_init__(self):
        logits = np.atleast_2d(np.asarray(self.logits, dtype=np.float64))
        if logits.shape[1] < 2:
            raise ValueError("logit rows need at least 2 classes")
        if not np.isfinite(logits).all():
            raise ValueError("logit entries must be finite")
        object.__setattr__(self, "logits", logits)


def _columns(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"column shapes differ: {x.shape} vs {y.shape}")
    return x, y


def mse(x, y) -> float:
    """Mean squared difference between two equal-length columns."""
    x, y = _columns(x, y)
    if len(x) == 0:
        raise LengthMismatch("mse of empty columns")
    d = x - y
    return float(np.mean(d * d))


def lcc(x, y) -> float:
    """Pearson linear correlation coefficient."""
    x, y = _columns(x, y)
    if len(x) < 2:
        raise ZeroVariance("correlation needs at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(np.dot(xc, xc)) / len(x)
    vy = float(np.dot(yc, yc)) / len(y)
    if vx <= _VARIANCE_FLOOR or vy <= _VARIANCE_FLOOR:
        raise ZeroVariance(f"column variance below {_VARIANCE_FLOOR}")
    return float(np.dot(xc, yc) / math.sqrt(np.dot(xc, xc) * np.dot(yc, yc)))


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    x = np.asarray(x, dtype=np.float64)
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    group_start = np.concatenate(([0], np.cumsum(counts)[:-1]))
    mean_rank = group_start + (counts + 1) / 2.0
    return mean_rank[inverse]


def srcc(x, y) -> float:
    """Spearman rank correlation: Pearson over average ranks (exact under ties)."""
    x, y = _columns(x, y)
    return lcc(average_ranks(x), average_ranks(y))


def _tie_pairs(x: np.ndarray) -> int:
    _, counts = np.unique(x, return_counts=True)
    return int(np.sum(counts * (counts - 1) // 2))


def ktau(x, y) -> float:
    """Kendall tau-b: (concordant - discordant) / sqrt((n0 - tx)(n0 - ty))."""
    x, y = _columns(x, y)
    n = len(x)
    if n < 2:
        raise AllTied("tau needs at least 2 points")
    n0 = n * (n - 1) // 2
    tx = _tie_pairs(x)
    ty = _tie_pairs(y)
    if n0 == tx or n0 == ty:
        raise AllTied("a column is entirely tied; tau-b is undefined")
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    upper = np.triu_indices(n, k=1)
    concordance = int(np.sum(sx[upper] * sy[upper]))
    return concordance / math.sqrt((n0 - tx) * (n0 - ty))


def system_aggregate(records: PairedScores) -> PairedScores:
    """Collapse utterance rows to per-system means of both columns."""
    systems = sorted(set(records.system_ids))
    if len(systems) < 2:
        raise TooFewSystems(f"need at least 2 systems, got {len(systems)}")
    sys_array = np.asarray(records.system_ids)
    human = []
    predicted = []
    for system in systems:
        mask = sys_array == system
        human.append(float(records.human[mask].mean()))
        predicted.append(float(records.predicted[mask].mean()))
    return PairedScores(
        ids=tuple(systems),
        system_ids=tuple(systems),
        human=np.array(human),
        predicted=np.array(predicted),
    )


def _sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    try:
        eigenvalues, eigenvectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def frechet_distance(e1: EmbeddingSet, e2: EmbeddingSet) -> float:
    """Fréchet distance between Gaussian fits of two embedding sets.

    ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), with sample means and
    unbiased covariances. Requires n >= d + 1 rows per set.
    """
    x1, x2 = e1.vectors, e2.vectors
    if x1.shape[1] != x2.shape[1]:
        raise ShapeMismatch(f"embedding dims differ: {x1.shape[1]} vs {x2.shape[1]}")
    d = x1.shape[1]
    for tag, x in (("first", x1), ("second", x2)):
        if x.shape[0] < d + 1:
            raise InsufficientSamples(
                f"{tag} set has {x.shape[0]} rows; need at least d+1 = {d + 1}"
            )
    mu1 = x1.mean(axis=0)
    mu2 = x2.mean(axis=0)
    sigma1 = np.atleast_2d(np.cov(x1, rowvar=False, ddof=1))
    sigma2 = np.atleast_2d(np.cov(x2, rowvar=False, ddof=1))

    root1 = _sqrtm_psd(sigma1)
    inner = root1 @ sigma2 @ root1
    try:
        eigenvalues = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
    trace_sqrt = float(np.sum(np.sqrt(np.clip(eigenvalues, 0.0, None))))

    diff = mu1 - mu2
    fd = float(diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2.0 * trace_sqrt)
    return max(fd, 0.0)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def kl_paired(p: LogitSet, q: LogitSet) -> float:
    """Mean over rows of KL(softmax(p_i) || softmax(q_i))."""
    lp, lq = p.logits, q.logits
    if lp.shape != lq.shape:
        raise ShapeMismatch(f"logit shapes differ: {lp.shape} vs {lq.shape}")
    log_p = _log_softmax(lp)
    log_q = _log_softmax(lq)
    rows = np.sum(np.exp(log_p) * (log_p - log_q), axis=1)
    return float(np.mean(rows))


def inception_score(l: LogitSet) -> float:
    """exp of the mean KL between per-row class distributions and their marginal."""
    log_p = _log_softmax(l.logits)
    p = np.exp(log_p)
    marginal = p.mean(axis=0)
    rows = np.sum(p * (log_p - np.log(marginal)), axis=1)
    return float(np.exp(np.mean(rows)))


def cosine_similarity_score(a, b) -> float:
    """Cosine similarity scaled to percent (100 = identical direction)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity of a zero vector")
    return float(100.0 * (a @ b) / (norm_a * norm_b))


METRIC_NAMES = ("mse", "lcc", "srcc", "ktau")
LEVELS = ("utterance", "system")


def correlation_grid(per_dimension: Mapping[str, PairedScores]) -> dict:
    """MSE/LCC/SRCC/KTAU at utterance and system level for each dimension."""
    grid: dict[str, dict[str, dict[str, float]]] = {}
    for dimension, paired in sorted(per_dimension.items()):
        system = system_aggregate(paired)
        grid[dimension] = {
            "utterance": _metric_row(paired),
            "system": _metric_row(system),
        }
    return grid


def _metric_row(paired: PairedScores) -> dict[str, float]:
    h, p = paired.human, paired.predicted
    return {
        "mse": mse(h, p),
        "lcc": lcc(h, p),
        "srcc": srcc(h, p),
        "ktau": ktau(h, p),
    }


def load_paired_manifest(path) -> dict[str, PairedScores]:
    """Read {utterance_id, system_id, dimension, human, predicted} rows."""
    buckets: dict[str, list[tuple[str, str, float, float]]] = {}
    fields = ("utterance_id", "system_id", "dimension", "human", "predicted")
    for lineno, row in enumerate(load_jsonl(path), start=1):
        require_fields(row, fields, path, lineno)
        try:
            buckets.setdefault(str(row["dimension"]), []).append(
                (
                    str(row["utterance_id"]),
                    str(row["system_id"]),
                    float(row["human"]),
                    float(row["predicted"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"{path}:{lineno}: {exc}") from exc
    out = {}
    for dimension, rows in buckets.items():
        out[dimension] = PairedScores(
            ids=tuple(r[0] for r in rows),
            system_ids=tuple(r[1] for r in rows),
            human=np.array([r[2] for r in rows]),
            predicted=np.array([r[3] for r in rows]),
        )
    return out


# --- matrix file IO ----------------------------------------------------------


def load_matrix(path) -> np.ndarray:
    """Read a matrix file: one 'n d' header line, then rows.

    Text files carry whitespace-delimited rows; '.bin' files carry the same
    header line followed by n*d little-endian float64 values.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    newline = raw.find(b"\n")
    if newline < 0:
        raise SchemaViolation(f"{path}: missing 'n d' header line")
    try:
        n, d = (int(tok) for tok in raw[:newline].split())
    except ValueError as exc:
        raise SchemaViolation(f"{path}: header must be 'n d' integers") from exc
    body = raw[newline + 1 :]
    if path.suffix == ".bin":
        expected = n * d * 8
        if len(body) != expected:
            raise SchemaViolation(f"{path}: expected {expected} payload bytes, got {len(body)}")
        matrix = np.frombuffer(body, dtype="<f8").reshape(n, d).copy()
    else:
        try:
            values = np.array([float(tok) for tok in body.split()], dtype=np.float64)
        except ValueError as exc:
            raise SchemaViolation(f"{path}: non-numeric matrix entry") from exc
        if values.size != n * d:
            raise SchemaViolation(f"{path}: expected {n * d} values, got {values.size}")
        matrix = values.reshape(n, d)
    if not np.isfinite(matrix).all():
        raise SchemaViolation(f"{path}: non-finite matrix entries")
    return matrix


def save_matrix(path, matrix: np.ndarray) -> None:
    """Write a matrix in the format load_matrix reads, chosen by suffix."""
    path = Path(path)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    n, d = matrix.shape
    try:
        if path.suffix == ".bin":
            path.write_bytes(f"{n} {d}\n".encode() + matrix.astype("<f8").tobytes())
        else:
            lines = [f"{n} {d}"]
            lines += [" ".join(repr(float(v)) for v in row) for row in matrix]
            path.write_text("\n".join(lines) + "\n", "utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
