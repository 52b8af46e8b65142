"""WAV file IO and the waveform primitives used by the mix engine.

Supported container: RIFF/WAVE with 16-bit integer PCM or 32-bit IEEE float
samples, 1 or 2 channels in, mono out. Samples are held as float64 in memory;
amplitudes outside [-1, 1] are tolerated and saturated only when writing pcm16.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ClipWarning,
    CorruptFile,
    EmptyClip,
    IoFailure,
    OutOfRange,
    UnsupportedFormat,
)

PCM16_SCALE = 32768.0

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


@dataclass(frozen=True)
class AudioClip:
    """Immutable mono waveform plus its sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if samples.size and not np.isfinite(samples).all():
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz


def sample_index(seconds: float, rate_hz: int) -> int:
    """Convert seconds to a sample count, rounding half up.

    This single conversion rule is shared by every window computation so that
    exhaustive reference scans land on the same sample boundaries.
    """
    return int(math.floor(seconds * rate_hz + 0.5))


def _parse_chunks(raw: bytes):
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise CorruptFile("not a RIFF/WAVE container")
    pos = 12
    fmt = None
    data = None
    while pos + 8 <= len(raw):
        cid, size = struct.unpack_from("<4sI", raw, pos)
        pos += 8
        if pos + size > len(raw):
            raise CorruptFile(f"truncated {cid.decode('latin1').strip()!r} chunk")
        if cid == b"fmt ":
            if size < 16:
                raise CorruptFile("fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", raw, pos)
        elif cid == b"data":
            data = raw[pos : pos + size]
        pos += size + (size & 1)
    if fmt is None or data is None:
        raise CorruptFile("missing fmt or data chunk")
    return fmt, data


def load_wav(path) -> AudioClip:
    """Read a WAV file as a mono clip.

    16-bit samples are scaled by 1/32768; stereo is downmixed by channel mean.

    Raises:
        UnsupportedFormat: encoding other than pcm16/float32, or >2 channels.
        CorruptFile: unparseable or truncated container.
        IoFailure: OS-level read error.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    (tag, channels, rate, _byte_rate, block_align, bits), data = _parse_chunks(raw)
    if channels not in (1, 2):
        raise UnsupportedFormat(f"{channels} channels (expected 1 or 2)")
    if (tag, bits) == (_FMT_PCM, 16):
        dtype = np.dtype("<i2")
    elif (tag, bits) == (_FMT_IEEE_FLOAT, 32):
        dtype = np.dtype("<f4")
    else:
        raise UnsupportedFormat(f"format tag {tag} with {bits}-bit samples")
    if rate <= 0:
        raise CorruptFile("non-positive sample rate")
    expected_align = channels * dtype.itemsize
    if block_align not in (0, expected_align):
        raise CorruptFile("block alignment disagrees with format")
    if len(data) % expected_align:
        raise CorruptFile("data chunk holds a partial frame")

    frames = np.frombuffer(data, dtype=dtype).reshape(-1, channels)
    mono = frames.astype(np.float64).mean(axis=1)
    if dtype.kind == "i":
        mono /= PCM16_SCALE
    if mono.size and not np.isfinite(mono).all():
        raise CorruptFile("non-finite float samples")
    return AudioClip(mono, int(rate))


def save_wav(clip: AudioClip, path, encoding: str = "pcm16") -> None:
    """Write a mono WAV in the given encoding ('pcm16' or 'float32').

    pcm16 saturates samples outside [-1, 1] and records the saturated
    fraction through a ClipWarning; float32 stores samples as-is.
    """
    if encoding == "pcm16":
        x = clip.samples
        n_clipped = int(np.count_nonzero((x > 1.0) | (x < -1.0)))
        ints = np.floor(x * PCM16_SCALE + 0.5)
        payload = np.clip(ints, -32768, 32767).astype("<i2").tobytes()
        tag, bits = _FMT_PCM, 16
        if n_clipped:
            warnings.warn(
                ClipWarning(
                    f"{n_clipped}/{len(x)} samples saturated "
                    f"(clip fraction {n_clipped / len(x):.6f})"
                )
            )
    elif encoding == "float32":
        payload = clip.samples.astype("<f4").tobytes()
        tag, bits = _FMT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown encoding {encoding!r}")

    block_align = bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack(
        "<IHHIIHH",
        16,
        tag,
        1,
        clip.sample_rate_hz,
        clip.sample_rate_hz * block_align,
        block_align,
        bits,
    )
    header += b"data" + struct.pack("<I", len(payload))
    try:
        Path(path).write_bytes(header + payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def resample_linear(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Resample by linear interpolation; identity when rates already match.

    Output instants beyond the last source sample hold its value (edge hold).
    Duration is preserved to within one output sample period.
    """
    if target_rate_hz <= 0:
        raise ValueError("target_rate_hz must be positive")
    if target_rate_hz == clip.sample_rate_hz:
        return clip
    n_out = sample_index(clip.duration_s, target_rate_hz)
    if len(clip) == 0 or n_out == 0:
        return AudioClip(np.empty(0), target_rate_hz)
    positions = np.arange(n_out) * (clip.sample_rate_hz / target_rate_hz)
    out = np.interp(positions, np.arange(len(clip)), clip.samples)
    return AudioClip(out, target_rate_hz)


def peak(clip: AudioClip) -> float:
    """Largest absolute amplitude in the clip."""
    if len(clip) == 0:
        raise EmptyClip("peak of an empty clip")
    return float(np.max(np.abs(clip.samples)))


def window_energy(clip: AudioClip, start_s: float, length_s: float) -> float:
    """Sum of squared samples over the window starting at start_s.

    The window is [sample_index(start_s), sample_index(start_s) +
    sample_index(length_s)); boundaries may overrun the clip end by at most
    one sample period.
    """
    rate = clip.sample_rate_hz
    n = len(clip)
    if start_s < 0 or length_s < 0:
        raise OutOfRange("negative window bound")
    if (start_s + length_s) * rate > n + 1.0 + 1e-9:
        raise OutOfRange(
            f"window [{start_s}, {start_s + length_s}) s exceeds clip of {n / rate} s"
        )
    start = sample_index(start_s, rate)
    if start > n:
        raise OutOfRange("window starts past the end of the clip")
    end = min(start + sample_index(length_s, rate), n)
    seg = clip.samples[start:end]
    return float(np.dot(seg, seg))
