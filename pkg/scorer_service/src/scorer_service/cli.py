"""CLI: train heads from a labelled pair manifest, or serve checkpoints."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import DIMENSIONS, ModelConfig
from .encoder import MockEncoder, audio_payload, embed_pair
from .errors import ScorerServiceError
from .model import Predictor, save_head
from .service import serve
from .training import train_head


def _load_pairs(path: Path, encoder) -> list[dict]:
    rows = []
    for line in path.read_text("utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    items = []
    for row in rows:
        features = embed_pair(
            encoder,
            audio_payload(row["original_audio"]),
            audio_payload(row["edited_audio"]),
            row["original_text"],
            row["edited_text"],
        )
        items.append({"features": features, "targets": row})
    return items


def cmd_train(args) -> int:
    config = ModelConfig(embed_dim=args.embed_dim, seed=args.seed)
    encoder = MockEncoder(config.embed_dim, config.seed)
    items = _load_pairs(Path(args.data), encoder)
    dimensions = DIMENSIONS if args.dimension == "all" else (args.dimension,)
    for dimension in dimensions:
        dataset = [(i["features"], float(i["targets"][dimension])) for i in items]
        trained = train_head(dimension, dataset, config, epochs=args.epochs)
        path = save_head(trained.head, dimension, args.out)
        print(f"train: {dimension} best valid MSE {trained.best_valid_loss:.4f} -> {path}")
    return 0


def cmd_serve(args) -> int:
    config = ModelConfig(embed_dim=args.embed_dim, seed=args.seed)
    predictor = Predictor.load(args.checkpoints, MockEncoder(config.embed_dim, config.seed))
    serve(predictor, args.host, args.port)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scorer-service", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train score heads on labelled pairs")
    p.add_argument("--data", required=True,
                   help="JSONL of {original_audio, edited_audio, original_text, "
                        "edited_text, quality, relevance, faithfulness}")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--dimension", default="all", choices=("all", *DIMENSIONS))
    p.add_argument("--epochs", type=int, default=None,
                   help="override the per-dimension default epoch budget")
    p.add_argument("--embed-dim", type=int, default=512)
    p.add_argument("--seed", type=int, default=1984)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve loaded checkpoints over HTTP")
    p.add_argument("--checkpoints", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--embed-dim", type=int, default=512)
    p.add_argument("--seed", type=int, default=1984)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScorerServiceError as exc:
        print(f"scorer-service: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
