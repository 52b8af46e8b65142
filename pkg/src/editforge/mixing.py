"""Minimum-energy placement of an event clip into a background clip.

The event clip is gain-matched so its peak equals the background peak, then
added sample-wise inside the lowest-energy window of the background found by
a strided scan. Gain is applied to the event only, never the background.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioClip, peak, sample_index, window_energy
from .errors import (
    DegenerateBackground,
    DegenerateEvent,
    EmptyClip,
    OutOfRange,
    RateMismatch,
    WindowTooLong,
)

DEFAULT_STRIDE_S = 0.1

# Peaks below this are treated as silence; the gain ratio is then undefined.
MIN_PEAK = 1e-8


@dataclass(frozen=True)
class InsertionPlan:
    """Auditable record of where and how an event was placed."""

    offset_s: float
    center_s: float
    win_len_s: float
    gain: float
    window_energy: float
    clip_fraction: float
    forced: bool

    def __post_init__(self):
        if self.offset_s < 0:
            raise ValueError("offset_s must be non-negative")
        if self.gain <= 0:
            raise ValueError("gain must be positive")
        if not 0.0 <= self.clip_fraction <= 1.0:
            raise ValueError("clip_fraction must lie in [0, 1]")


def find_min_energy_window(
    a: AudioClip, win_len_s: float, stride_s: float = DEFAULT_STRIDE_S
) -> float:
    """Offset (seconds) of the lowest-energy window of length win_len_s.

    Candidate offsets are 0, stride, 2*stride, ... while the window fits,
    plus the final offset duration - win_len even when not stride-aligned.
    Ties go to the earliest offset.
    """
    if win_len_s <= 0:
        raise ValueError("win_len_s must be positive")
    if stride_s <= 0:
        raise ValueError("stride_s must be positive")
    n = len(a)
    rate = a.sample_rate_hz
    win = sample_index(win_len_s, rate)
    if win > n:
        raise WindowTooLong(f"window {win_len_s} s exceeds clip of {a.duration_s} s")
    win = max(win, 1)

    starts: list[int] = []
    k = 0
    while True:
        start = sample_index(k * stride_s, rate)
        if start + win > n:
            break
        if not starts or start > starts[-1]:
            starts.append(start)
        k += 1
    final = n - win
    if not starts or final > starts[-1]:
        starts.append(final)

    # Per-window dot products, not a cumulative sum: equal windows must
    # compare exactly equal so the earliest-offset tie-break is honored.
    samples = a.samples
    best_start = starts[0]
    seg = samples[best_start : best_start + win]
    best_energy = float(np.dot(seg, seg))
    for start in starts[1:]:
        seg = samples[start : start + win]
        energy = float(np.dot(seg, seg))
        if energy < best_energy:
            best_start, best_energy = start, energy
    return best_start / rate


def peak_normalize_gain(a: AudioClip, b: AudioClip) -> float:
    """Gain that makes the event peak match the background peak."""
    peak_b = peak(b)
    if peak_b < MIN_PEAK:
        raise DegenerateEvent(f"event peak {peak_b} below {MIN_PEAK}")
    peak_a = peak(a)
    if peak_a < MIN_PEAK:
        raise DegenerateBackground(f"background peak {peak_a} below {MIN_PEAK}")
    return peak_a / peak_b


def overlay(
    a: AudioClip, b: AudioClip, offset_s: float, gain: float
) -> tuple[AudioClip, float]:
    """Add gain-scaled b into a at offset_s, clamping to [-1, 1].

    Returns the mixed clip and the fraction of window samples that saturated.
    Samples outside the insertion window are returned untouched.
    """
    if a.sample_rate_hz != b.sample_rate_hz:
        raise RateMismatch(f"{a.sample_rate_hz} Hz vs {b.sample_rate_hz} Hz")
    start = sample_index(offset_s, a.sample_rate_hz)
    nb = len(b)
    if start < 0 or start + nb > len(a):
        raise OutOfRange(f"window [{start}, {start + nb}) outside clip of {len(a)}")
    out = np.array(a.samples)
    mixed = out[start : start + nb] + gain * b.samples
    n_clipped = int(np.count_nonzero((mixed > 1.0) | (mixed < -1.0)))
    out[start : start + nb] = np.clip(mixed, -1.0, 1.0)
    clip_fraction = n_clipped / nb if nb else 0.0
    return AudioClip(out, a.sample_rate_hz), clip_fraction


def mix_insert(
    a: AudioClip,
    b: AudioClip,
    forced_center_s: float | None = None,
    stride_s: float = DEFAULT_STRIDE_S,
) -> tuple[AudioClip, InsertionPlan]:
    """Place event b into background a and return the mix plus its plan.

    Without a forced center the offset comes from the minimum-energy scan;
    with one, the window is centered there, clamped to stay inside a.
    """
    if len(b) == 0:
        raise EmptyClip("event clip is empty")
    if len(a) == 0:
        raise EmptyClip("background clip is empty")
    if a.sample_rate_hz != b.sample_rate_hz:
        raise RateMismatch(f"{a.sample_rate_hz} Hz vs {b.sample_rate_hz} Hz")
    if len(b) > len(a):
        raise WindowTooLong("event clip longer than background")

    t_b = len(b) / b.sample_rate_hz
    if forced_center_s is None:
        offset_s = find_min_energy_window(a, t_b, stride_s)
        forced = False
    else:
        offset_s = min(max(forced_center_s - t_b / 2.0, 0.0), a.duration_s - t_b)
        forced = True

    gain = peak_normalize_gain(a, b)
    mixed, clip_fraction = overlay(a, b, offset_s, gain)
    plan = InsertionPlan(
        offset_s=offset_s,
        center_s=offset_s + t_b / 2.0,
        win_len_s=t_b,
        gain=gain,
        window_energy=window_energy(a, offset_s, t_b),
        clip_fraction=clip_fraction,
        forced=forced,
    )
    return mixed, plan
