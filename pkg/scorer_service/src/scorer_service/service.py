"""HTTP surface: /v1/score, /v1/score_batch, /v1/health.

Single-item scoring fails the request on undecodable input; batch scoring
returns an {id, error} entry for a failed item so callers never lose the
positional pairing between requests and responses.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .encoder import audio_payload
from .errors import BindFailure, EncoderFailure, UndecodableAudio
from .model import Predictor


class ScoreRequest(BaseModel):
    id: str
    original_audio: str
    edited_audio: str
    original_text: str
    edited_text: str


class ScoreResponse(BaseModel):
    id: str
    quality: float
    relevance: float
    faithfulness: float
    model_version: str


def _score_item(predictor: Predictor, item: ScoreRequest) -> ScoreResponse:
    scores = predictor.predict(
        audio_payload(item.original_audio),
        audio_payload(item.edited_audio),
        item.original_text,
        item.edited_text,
    )
    return ScoreResponse(id=item.id, model_version=predictor.model_version, **scores)


def create_app(predictor: Predictor) -> FastAPI:
    app = FastAPI(title="scorer-service")

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "model_version": predictor.model_version}

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(item: ScoreRequest):
        try:
            return _score_item(predictor, item)
        except (UndecodableAudio, EncoderFailure) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/v1/score_batch")
    def score_batch(items: list[ScoreRequest]):
        out = []
        for item in items:
            try:
                out.append(_score_item(predictor, item).model_dump())
            except (UndecodableAudio, EncoderFailure) as exc:
                out.append({"id": item.id, "error": str(exc)})
        return out

    return app


def serve(predictor: Predictor, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Run the service until interrupted."""
    import uvicorn

    try:
        uvicorn.run(create_app(predictor), host=host, port=port, log_level="warning")
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
