"""Regression heads over fused embeddings, checkpoints, and the predictor.

Each score dimension has its own independently trained MLP head; retraining
one never touches the other two checkpoint files. Served scores are clamped
to the 1-5 scale here, at the source, so every downstream consumer sees the
invariant already enforced.
"""

from __future__ import annotations

import hashlib
import io
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .config import DIMENSIONS, SCORE_MAX, SCORE_MIN, ModelConfig
from .encoder import Encoder, embed_pair
from .errors import ModelNotLoaded


class ScoreHead(nn.Module):
    """MLP regressor from a fused embedding to one scalar score."""

    def __init__(self, in_dim: int, hidden: tuple[int, ...] = (512, 128)):
        super().__init__()
        layers: list[nn.Module] = []
        width = in_dim
        for h in hidden:
            layers += [nn.Linear(width, h), nn.ReLU()]
            width = h
        output = nn.Linear(width, 1)
        # Start at the scale midpoint so an untrained head predicts the
        # global mean rather than zero.
        nn.init.zeros_(output.weight)
        nn.init.constant_(output.bias, (SCORE_MIN + SCORE_MAX) / 2.0)
        layers.append(output)
        self.net = nn.Sequential(*layers)
        self.in_dim = in_dim
        self.hidden = tuple(hidden)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).squeeze(-1)


def _state_digest(head: ScoreHead) -> str:
    buffer = io.BytesIO()
    for key, tensor in sorted(head.state_dict().items()):
        buffer.write(key.encode())
        buffer.write(tensor.detach().cpu().numpy().tobytes())
    return hashlib.sha256(buffer.getvalue()).hexdigest()[:12]


def checkpoint_path(directory, dimension: str) -> Path:
    return Path(directory) / f"{dimension}.pt"


def save_head(head: ScoreHead, dimension: str, directory) -> Path:
    path = checkpoint_path(directory, dimension)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "dimension": dimension,
            "in_dim": head.in_dim,
            "hidden": head.hidden,
            "state_dict": head.state_dict(),
            "version": f"{dimension}-{_state_digest(head)}",
        },
        path,
    )
    return path


def load_head(directory, dimension: str) -> tuple[ScoreHead, str]:
    path = checkpoint_path(directory, dimension)
    if not path.exists():
        raise ModelNotLoaded(f"missing checkpoint {path}")
    payload = torch.load(path, map_location="cpu", weights_only=False)
    head = ScoreHead(payload["in_dim"], tuple(payload["hidden"]))
    head.load_state_dict(payload["state_dict"])
    head.eval()
    return head, payload["version"]


class Predictor:
    """Three loaded heads plus an encoder; pure given fixed checkpoints."""

    def __init__(self, encoder: Encoder, heads: dict[str, ScoreHead], model_version: str):
        missing = [d for d in DIMENSIONS if d not in heads]
        if missing:
            raise ModelNotLoaded(f"missing heads: {missing}")
        self.encoder = encoder
        self.heads = heads
        self.model_version = model_version
        for head in heads.values():
            head.eval()

    @classmethod
    def load(cls, directory, encoder: Encoder) -> "Predictor":
        heads = {}
        versions = []
        for dimension in DIMENSIONS:
            head, version = load_head(directory, dimension)
            heads[dimension] = head
            versions.append(version)
        return cls(encoder, heads, "+".join(versions))

    def predict(
        self,
        original_audio: bytes,
        edited_audio: bytes,
        original_text: str,
        edited_text: str,
    ) -> dict[str, float]:
        features = embed_pair(
            self.encoder, original_audio, edited_audio, original_text, edited_text
        )
        x = torch.from_numpy(np.asarray(features, dtype=np.float32)).unsqueeze(0)
        out = {}
        with torch.no_grad():
            for dimension in DIMENSIONS:
                raw = float(self.heads[dimension](x).item())
                out[dimension] = min(max(raw, SCORE_MIN), SCORE_MAX)
        return out


def untrained_predictor(config: ModelConfig, encoder: Encoder) -> Predictor:
    """Predictor with freshly initialized heads; handy for protocol tests."""
    heads = {d: ScoreHead(config.fused_dim, config.head_hidden) for d in DIMENSIONS}
    version = "+".join(f"{d}-{_state_digest(h)}" for d, h in heads.items())
    return Predictor(encoder, heads, version)
