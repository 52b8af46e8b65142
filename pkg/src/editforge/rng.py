"""Key-derived deterministic random streams.

Every random decision in the pipeline draws from a stream derived by hashing
(seed, *key parts), so work split across any number of workers produces the
same values as a serial run, independent of scheduling order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_SEP = b"\x1f"


def _digest(parts, size: int = 16) -> bytes:
    h = hashlib.blake2b(digest_size=size)
    for part in parts:
        h.update(str(part).encode("utf-8"))
        h.update(_SEP)
    return h.digest()


def derived_rng(seed: int, *key) -> np.random.Generator:
    """Generator keyed by (seed, *key); identical keys give identical streams."""
    return np.random.default_rng(int.from_bytes(_digest((seed, *key)), "big"))


def unit_draw(seed: int, *key) -> float:
    """One deterministic draw in [0, 1) keyed by (seed, *key)."""
    return int.from_bytes(_digest((seed, *key), size=8), "big") / 2.0**64
