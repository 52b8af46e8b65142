"""scorer-service: embeds (original, edited) audio-text pairs and regresses
quality/relevance/faithfulness scores with independently trained heads."""

from .config import DIMENSIONS, ModelConfig
from .encoder import MockEncoder, audio_payload, embed_pair
from .model import Predictor, ScoreHead, load_head, save_head, untrained_predictor
from .service import create_app, serve
from .training import TrainedHead, train_head

__version__ = "0.1.0"

__all__ = [
    "DIMENSIONS",
    "MockEncoder",
    "ModelConfig",
    "Predictor",
    "ScoreHead",
    "TrainedHead",
    "audio_payload",
    "create_app",
    "embed_pair",
    "load_head",
    "save_head",
    "serve",
    "train_head",
    "untrained_predictor",
]
