import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from editforge.audio_io import (
    AudioClip,
    load_wav,
    peak,
    resample_linear,
    sample_index,
    save_wav,
    window_energy,
)
from editforge.errors import ClipWarning, CorruptFile, EmptyClip, OutOfRange, UnsupportedFormat

from .conftest import make_clip, random_clip


def write_raw_wav(path, fmt_tag, channels, rate, bits, payload: bytes):
    block = channels * bits // 8
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, fmt_tag, channels, rate, rate * block, block, bits)
    header += b"data" + struct.pack("<I", len(payload))
    path.write_bytes(header + payload)


class TestLoadWav:
    def test_zero_pcm16_second(self, tmp_path):
        path = tmp_path / "zero.wav"
        write_raw_wav(path, 1, 1, 16000, 16, b"\x00\x00" * 16000)
        clip = load_wav(path)
        assert len(clip) == 16000
        assert clip.duration_s == 1.0
        assert not clip.samples.any()

    def test_pcm16_scaling(self, tmp_path):
        path = tmp_path / "half.wav"
        write_raw_wav(path, 1, 1, 16000, 16, struct.pack("<h", 16384))
        assert load_wav(path).samples[0] == 0.5

    def test_stereo_downmix_mean(self, tmp_path):
        path = tmp_path / "stereo.wav"
        frames = np.stack([np.full(64, 0.2, "<f4"), np.full(64, 0.6, "<f4")], axis=1)
        write_raw_wav(path, 3, 2, 8000, 32, frames.tobytes())
        clip = load_wav(path)
        assert np.allclose(clip.samples, 0.4)
        assert len(clip) == 64

    def test_unsupported_bit_depth(self, tmp_path):
        path = tmp_path / "pcm8.wav"
        write_raw_wav(path, 1, 1, 8000, 8, b"\x80" * 16)
        with pytest.raises(UnsupportedFormat):
            load_wav(path)

    def test_unsupported_channel_count(self, tmp_path):
        path = tmp_path / "quad.wav"
        write_raw_wav(path, 1, 4, 8000, 16, b"\x00" * 64)
        with pytest.raises(UnsupportedFormat):
            load_wav(path)

    def test_truncated_data_chunk(self, tmp_path):
        path = tmp_path / "trunc.wav"
        write_raw_wav(path, 1, 1, 8000, 16, b"\x00\x00" * 16)
        raw = path.read_bytes()
        path.write_bytes(raw[:-7])
        with pytest.raises(CorruptFile):
            load_wav(path)

    def test_not_a_riff_container(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not audio at all")
        with pytest.raises(CorruptFile):
            load_wav(path)


class TestSaveWav:
    def test_float32_round_trip_bit_identical(self, tmp_path, rng):
        values = rng.uniform(-1, 1, 500).astype(np.float32).astype(np.float64)
        clip = AudioClip(values, 16000)
        path = tmp_path / "f32.wav"
        save_wav(clip, path, "float32")
        assert np.array_equal(load_wav(path).samples, values)

    def test_pcm16_stored_integer(self, tmp_path):
        path = tmp_path / "half.wav"
        save_wav(make_clip([0.5]), path, "pcm16")
        assert struct.unpack("<h", path.read_bytes()[-2:])[0] == 16384

    def test_pcm16_saturation_warns(self, tmp_path):
        path = tmp_path / "hot.wav"
        with pytest.warns(ClipWarning):
            save_wav(make_clip([1.5, 0.0]), path, "pcm16")
        assert struct.unpack("<h", path.read_bytes()[-4:-2])[0] == 32767

    def test_pcm16_round_trip_tolerance(self, tmp_path, rng):
        clip = random_clip(rng, 0.05, scale=0.99)
        path = tmp_path / "rt.wav"
        save_wav(clip, path, "pcm16")
        assert np.max(np.abs(load_wav(path).samples - clip.samples)) <= 1 / 32768


class TestResample:
    def test_identity_when_rates_match(self, rng):
        clip = random_clip(rng, 0.1)
        assert resample_linear(clip, 16000) is clip

    def test_constant_invariance_downsample(self):
        clip = make_clip([0.3] * 16000, 16000)
        out = resample_linear(clip, 8000)
        assert len(out) == 8000
        assert np.allclose(out.samples, 0.3)

    def test_ramp_matches_analytic_line(self):
        # Ramp 0..1 over 1 s at 4 Hz: sample i carries i/3 at time i/4, the
        # line f(t) = (4/3) t on [0, 0.75]. Output instants up to the last
        # source instant must land exactly on the line; beyond it the edge
        # value is held.
        clip = make_clip([0.0, 1 / 3, 2 / 3, 1.0], 4)
        out = resample_linear(clip, 8)
        assert len(out) == 8
        for j in range(8):
            t = j / 8
            if t <= 0.75:
                assert out.samples[j] == pytest.approx(4 / 3 * t, abs=1e-6)
            else:
                assert out.samples[j] == pytest.approx(1.0, abs=1e-12)

    def test_duration_preserved_within_one_period(self, rng):
        clip = random_clip(rng, 1.3, rate=16000)
        out = resample_linear(clip, 11025)
        assert abs(out.duration_s - clip.duration_s) <= 1 / 11025


class TestPeak:
    def test_mixed_signs(self):
        assert peak(make_clip([0.1, -0.5, 0.3])) == 0.5

    def test_all_zero(self):
        assert peak(make_clip([0.0, 0.0])) == 0.0

    def test_negation_symmetry(self, rng):
        clip = random_clip(rng, 0.02)
        assert peak(clip) == peak(AudioClip(-clip.samples, clip.sample_rate_hz))

    def test_empty_clip(self):
        with pytest.raises(EmptyClip):
            peak(AudioClip(np.empty(0), 16000))

    @given(gain=st.floats(-4, 4, allow_nan=False).filter(lambda g: g != 0))
    @settings(max_examples=40, deadline=None)
    def test_scaling_homogeneity(self, gain):
        rng = np.random.default_rng(7)
        clip = random_clip(rng, 0.01)
        scaled = AudioClip(gain * clip.samples, clip.sample_rate_hz)
        assert peak(scaled) == pytest.approx(abs(gain) * peak(clip), rel=1e-12)


class TestWindowEnergy:
    def test_zero_segment(self):
        assert window_energy(make_clip([0.0] * 100), 0.0, 0.005) == 0.0

    def test_constant_half(self):
        clip = make_clip([0.5, 0.5, 0.5, 0.5], 4)
        assert window_energy(clip, 0.0, 1.0) == pytest.approx(1.0)

    def test_matches_direct_loop_oracle(self, rng):
        clip = random_clip(rng, 0.7)
        rate = clip.sample_rate_hz
        start_s, length_s = 0.13, 0.4
        start = sample_index(start_s, rate)
        end = start + sample_index(length_s, rate)
        expected = math.fsum(float(v) * float(v) for v in clip.samples[start:end])
        assert window_energy(clip, start_s, length_s) == pytest.approx(expected, rel=1e-12)

    def test_additive_over_adjacent_windows(self, rng):
        clip = random_clip(rng, 1.0)
        a, b, c = 0.1, 0.4, 0.9
        lhs = window_energy(clip, a, b - a) + window_energy(clip, b, c - b)
        assert lhs == pytest.approx(window_energy(clip, a, c - a), rel=1e-9)

    def test_out_of_range(self):
        clip = make_clip([0.1] * 100)
        with pytest.raises(OutOfRange):
            window_energy(clip, 0.0, 1.0)
        with pytest.raises(OutOfRange):
            window_energy(clip, -0.1, 0.001)
