"""Per-dimension head training: Adam, plateau scheduler, best-valid checkpoint."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .config import ModelConfig
from .errors import EmptyDataset, NonFiniteLoss
from .model import ScoreHead


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    valid_loss: float
    learning_rate: float


@dataclass(frozen=True)
class TrainedHead:
    head: ScoreHead
    dimension: str
    log: list[EpochStats]
    best_valid_loss: float


def _split(n: int, valid_fraction: float, generator: torch.Generator):
    order = torch.randperm(n, generator=generator).tolist()
    n_valid = max(1, round(n * valid_fraction)) if n > 1 else 0
    return order[n_valid:], order[:n_valid]


def train_head(
    dimension: str,
    dataset: Sequence[tuple[np.ndarray, float]],
    config: ModelConfig = ModelConfig(),
    epochs: int | None = None,
) -> TrainedHead:
    """Train one score head on (fused feature, target) pairs.

    The train/valid split, batching, and initialization are all derived from
    config.seed. Per-epoch train and valid losses are logged; the returned
    head carries the weights of the best validation epoch.
    """
    if len(dataset) == 0:
        raise EmptyDataset(f"no training pairs for {dimension!r}")
    epochs = config.epochs_for(dimension) if epochs is None else epochs

    torch.manual_seed(config.seed)
    generator = torch.Generator().manual_seed(config.seed)

    features = torch.from_numpy(
        np.stack([np.asarray(f, dtype=np.float32) for f, _ in dataset])
    )
    targets = torch.tensor([float(t) for _, t in dataset], dtype=torch.float32)

    train_idx, valid_idx = _split(len(dataset), config.valid_fraction, generator)
    if not train_idx:
        train_idx, valid_idx = valid_idx, valid_idx
    x_train, y_train = features[train_idx], targets[train_idx]
    x_valid, y_valid = features[valid_idx], targets[valid_idx]

    head = ScoreHead(features.shape[1], config.head_hidden)
    optimizer = torch.optim.Adam(head.parameters(), lr=config.learning_rate)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer,
        mode="min",
        factor=config.scheduler_factor,
        patience=config.scheduler_patience,
    )
    loss_fn = nn.MSELoss()

    log: list[EpochStats] = []
    best_valid = math.inf
    best_state = {k: v.clone() for k, v in head.state_dict().items()}
    for epoch in range(1, epochs + 1):
        head.train()
        order = torch.randperm(len(x_train), generator=generator)
        batch_losses = []
        for start in range(0, len(order), config.train_batch):
            batch = order[start : start + config.train_batch]
            optimizer.zero_grad()
            loss = loss_fn(head(x_train[batch]), y_train[batch])
            value = float(loss.item())
            if not math.isfinite(value):
                raise NonFiniteLoss(f"{dimension} train loss {value} at epoch {epoch}")
            loss.backward()
            optimizer.step()
            batch_losses.append(value)
        train_loss = float(np.mean(batch_losses))

        head.eval()
        with torch.no_grad():
            valid_chunks = [
                float(loss_fn(head(x_valid[s : s + config.valid_batch]),
                              y_valid[s : s + config.valid_batch]).item())
                * len(x_valid[s : s + config.valid_batch])
                for s in range(0, len(x_valid), config.valid_batch)
            ]
        valid_loss = float(sum(valid_chunks) / len(x_valid))
        if not math.isfinite(valid_loss):
            raise NonFiniteLoss(f"{dimension} valid loss {valid_loss} at epoch {epoch}")
        scheduler.step(valid_loss)
        log.append(
            EpochStats(epoch, train_loss, valid_loss, optimizer.param_groups[0]["lr"])
        )
        if valid_loss < best_valid:
            best_valid = valid_loss
            best_state = {k: v.clone() for k, v in head.state_dict().items()}

    head.load_state_dict(best_state)
    head.eval()
    return TrainedHead(head, dimension, log, best_valid)
