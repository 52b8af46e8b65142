import base64

import numpy as np
import pytest
import torch
from fastapi.testclient import TestClient

from scorer_service.config import ModelConfig
from scorer_service.encoder import MockEncoder
from scorer_service.errors import ModelNotLoaded
from scorer_service.model import Predictor, ScoreHead, save_head, untrained_predictor
from scorer_service.service import create_app

WAV = b"RIFF0000WAVEfake-audio-payload"
WAV_B64 = base64.b64encode(WAV).decode()

CFG = ModelConfig(embed_dim=16, head_hidden=(32,))


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(untrained_predictor(CFG, MockEncoder(16, 1984))))


def item(i=0):
    return {
        "id": f"t{i:04d}:add-b",
        "original_audio": WAV_B64,
        "edited_audio": base64.b64encode(WAV + bytes([i % 250])).decode(),
        "original_text": f"a dog barks {i}",
        "edited_text": f"rain falls, a dog barks {i}",
    }


class TestPredictor:
    def test_clamps_raw_outputs(self):
        head = ScoreHead(CFG.fused_dim, (8,))
        torch.nn.init.zeros_(head.net[-1].weight)
        torch.nn.init.constant_(head.net[-1].bias, 6.3)
        low = ScoreHead(CFG.fused_dim, (8,))
        torch.nn.init.zeros_(low.net[-1].weight)
        torch.nn.init.constant_(low.net[-1].bias, -2.0)
        mid = ScoreHead(CFG.fused_dim, (8,))
        predictor = Predictor(
            MockEncoder(16, 1984),
            {"quality": head, "relevance": low, "faithfulness": mid},
            "test",
        )
        scores = predictor.predict(WAV, WAV + b"x", "orig", "edit")
        assert scores["quality"] == 5.0
        assert scores["relevance"] == 1.0

    def test_prediction_deterministic(self):
        predictor = untrained_predictor(CFG, MockEncoder(16, 1984))
        first = predictor.predict(WAV, WAV + b"x", "orig", "edit")
        second = predictor.predict(WAV, WAV + b"x", "orig", "edit")
        assert first == second

    def test_missing_head_rejected(self):
        with pytest.raises(ModelNotLoaded):
            Predictor(MockEncoder(16, 1984), {"quality": ScoreHead(64)}, "test")

    def test_checkpoint_round_trip(self, tmp_path):
        predictor = untrained_predictor(CFG, MockEncoder(16, 1984))
        for dimension, head in predictor.heads.items():
            save_head(head, dimension, tmp_path)
        loaded = Predictor.load(tmp_path, MockEncoder(16, 1984))
        assert loaded.predict(WAV, WAV + b"x", "o", "e") == predictor.predict(
            WAV, WAV + b"x", "o", "e"
        )

    def test_load_missing_checkpoints(self, tmp_path):
        with pytest.raises(ModelNotLoaded):
            Predictor.load(tmp_path, MockEncoder(16, 1984))


class TestEndpoints:
    def test_single_item_echoes_id_with_scores_in_range(self, client):
        response = client.post("/v1/score", json=item(3))
        assert response.status_code == 200
        body = response.json()
        assert body["id"] == "t0003:add-b"
        for dim in ("quality", "relevance", "faithfulness"):
            assert 1.0 <= body[dim] <= 5.0
        assert body["model_version"]

    def test_malformed_body_is_client_error(self, client):
        response = client.post("/v1/score", json={"id": "x"})
        assert 400 <= response.status_code < 500
        assert response.json()["detail"]

    def test_undecodable_audio_is_400_with_diagnostic(self, client):
        bad = item(0) | {"original_audio": "!!not-base64-not-a-file!!"}
        response = client.post("/v1/score", json=bad)
        assert response.status_code == 400
        assert "audio" in response.json()["detail"]

    def test_health(self, client):
        response = client.get("/v1/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["model_version"]

    def test_batch_preserves_input_order(self, client):
        items = [item(i) for i in range(12)]
        response = client.post("/v1/score_batch", json=items)
        assert response.status_code == 200
        body = response.json()
        assert [entry["id"] for entry in body] == [it["id"] for it in items]

    def test_batch_failed_item_becomes_error_entry(self, client):
        items = [item(0), item(1) | {"edited_audio": "??"}, item(2)]
        body = client.post("/v1/score_batch", json=items).json()
        assert "quality" in body[0]
        assert body[1] == {"id": items[1]["id"], "error": body[1]["error"]}
        assert "quality" in body[2]

    def test_scores_in_range_on_many_random_inputs(self, client):
        rng = np.random.default_rng(1984)
        items = []
        for i in range(100):
            payload = b"RIFF" + rng.bytes(24)
            items.append(
                item(i)
                | {
                    "original_audio": base64.b64encode(payload).decode(),
                    "edited_audio": base64.b64encode(payload[::-1] + b"RIFF").decode(),
                }
            )
        # edited_audio must itself be RIFF-prefixed
        for it in items:
            it["edited_audio"] = base64.b64encode(
                b"RIFF" + base64.b64decode(it["edited_audio"])
            ).decode()
        body = client.post("/v1/score_batch", json=items).json()
        for entry in body:
            for dim in ("quality", "relevance", "faithfulness"):
                assert 1.0 <= entry[dim] <= 5.0
