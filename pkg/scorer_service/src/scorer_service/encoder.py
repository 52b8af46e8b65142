"""Input embedding: payload decoding and the deterministic mock encoder.

The mock encoder hashes raw input bytes into a fixed-dimension vector so the
whole service can be exercised without pretrained weights. A real contrastive
audio-text encoder plugs in through the same two-method surface.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import EncoderFailure, UndecodableAudio


class Encoder(Protocol):
    embed_dim: int

    def embed_audio(self, wav_bytes: bytes) -> np.ndarray: ...

    def embed_text(self, text: str) -> np.ndarray: ...


def audio_payload(value: str) -> bytes:
    """Resolve an audio field: an existing file path, else base64 WAV bytes."""
    path = Path(value)
    try:
        if path.exists() and path.is_file():
            data = path.read_bytes()
        else:
            data = base64.b64decode(value, validate=True)
    except (OSError, binascii.Error, ValueError) as exc:
        raise UndecodableAudio(f"audio payload is neither a file nor base64: {exc}") from exc
    if not data.startswith(b"RIFF"):
        raise UndecodableAudio("audio payload is not a RIFF/WAVE container")
    return data


class MockEncoder:
    """Seeded hash of input bytes expanded to embed_dim floats in [-1, 1)."""

    def __init__(self, embed_dim: int = 512, seed: int = 1984):
        self.embed_dim = embed_dim
        self.seed = seed

    def _expand(self, kind: str, payload: bytes) -> np.ndarray:
        anchor = hashlib.blake2b(
            f"{self.seed}|{kind}|".encode() + payload, digest_size=32
        ).digest()
        values = np.empty(self.embed_dim, dtype=np.float64)
        for i in range(self.embed_dim):
            block = hashlib.blake2b(
                anchor + i.to_bytes(4, "big"), digest_size=8
            ).digest()
            values[i] = int.from_bytes(block, "big") / 2.0**63 - 1.0
        return values

    def embed_audio(self, wav_bytes: bytes) -> np.ndarray:
        if not wav_bytes:
            raise EncoderFailure("empty audio payload")
        return self._expand("audio", wav_bytes)

    def embed_text(self, text: str) -> np.ndarray:
        if not text:
            raise EncoderFailure("empty text")
        return self._expand("text", text.encode("utf-8"))


def embed_pair(
    encoder: Encoder,
    original_audio: bytes,
    edited_audio: bytes,
    original_text: str,
    edited_text: str,
) -> np.ndarray:
    """Fused feature: concatenation (audio_orig, audio_edit, text_orig, text_edit)."""
    return np.concatenate(
        [
            encoder.embed_audio(original_audio),
            encoder.embed_audio(edited_audio),
            encoder.embed_text(original_text),
            encoder.embed_text(edited_text),
        ]
    )
