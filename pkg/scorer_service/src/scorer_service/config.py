"""Model and training configuration.

Default training recipe: Adam at 5e-5 with a
min-mode plateau scheduler (factor 0.8, patience 5), batch sizes 256/64,
per-head epoch budgets of 50/30/35, seed 1984, and a 9:1 train/valid split.
"""

from __future__ import annotations

from dataclasses import dataclass

DIMENSIONS = ("quality", "relevance", "faithfulness")

SCORE_MIN = 1.0
SCORE_MAX = 5.0


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 512
    head_hidden: tuple[int, ...] = (512, 128)
    learning_rate: float = 5e-5
    scheduler_factor: float = 0.8
    scheduler_patience: int = 5
    train_batch: int = 256
    valid_batch: int = 64
    quality_epochs: int = 50
    relevance_epochs: int = 30
    faithfulness_epochs: int = 35
    seed: int = 1984
    valid_fraction: float = 0.1

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be positive")
        if not 0 < self.valid_fraction < 1:
            raise ValueError("valid_fraction must lie in (0, 1)")

    @property
    def fused_dim(self) -> int:
        """Four concatenated encoder blocks: audio pair then text pair."""
        return 4 * self.embed_dim

    def epochs_for(self, dimension: str) -> int:
        if dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {dimension!r}")
        return getattr(self, f"{dimension}_epochs")
