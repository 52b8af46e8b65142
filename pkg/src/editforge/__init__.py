"""editforge: rule-based synthesis, filtering, and evaluation of
pseudo-parallel audio-editing data."""

from .audio_io import AudioClip, load_wav, peak, resample_linear, save_wav, window_energy
from .captions import Band, CaptionConfig, classify_center, render_caption
from .filtering import FilterConfig, FilterReport, run_cascade
from .metrics import (
    EmbeddingSet,
    LogitSet,
    PairedScores,
    cosine_similarity_score,
    frechet_distance,
    inception_score,
    kl_paired,
    ktau,
    lcc,
    mse,
    srcc,
    system_aggregate,
)
from .mixing import InsertionPlan, find_min_energy_window, mix_insert, overlay, peak_normalize_gain
from .pipeline import EditTriplet, TupleRecord, apply_drop, build_tuple, expand_triplets
from .scoring import ScoredRecord, ScoreTriple, load_scores, score_remote, stub_score

__version__ = "0.1.0"

__all__ = [
    "AudioClip",
    "Band",
    "CaptionConfig",
    "EditTriplet",
    "EmbeddingSet",
    "FilterConfig",
    "FilterReport",
    "InsertionPlan",
    "LogitSet",
    "PairedScores",
    "ScoreTriple",
    "ScoredRecord",
    "TupleRecord",
    "apply_drop",
    "build_tuple",
    "classify_center",
    "cosine_similarity_score",
    "expand_triplets",
    "find_min_energy_window",
    "frechet_distance",
    "inception_score",
    "kl_paired",
    "ktau",
    "lcc",
    "load_scores",
    "load_wav",
    "mix_insert",
    "mse",
    "overlay",
    "peak",
    "peak_normalize_gain",
    "render_caption",
    "resample_linear",
    "run_cascade",
    "save_wav",
    "score_remote",
    "srcc",
    "stub_score",
    "system_aggregate",
    "window_energy",
]
