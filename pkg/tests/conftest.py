import numpy as np
import pytest

from editforge.audio_io import AudioClip


@pytest.fixture
def rng():
    return np.random.default_rng(1984)


def make_clip(values, rate=16000):
    return AudioClip(np.asarray(values, dtype=np.float64), rate)


def random_clip(rng, duration_s, rate=16000, scale=0.5):
    n = max(1, round(duration_s * rate))
    return AudioClip(rng.uniform(-scale, scale, n), rate)


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[ACCEPTANCE] {name}: {report.outcome.upper()}")
