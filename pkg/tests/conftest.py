import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cogscale.audio_io import synth_music
from cogscale.model import ModelConfig
from cogscale.signal import SensingSpec, WindowSpec, frame
from cogscale.train import TrainConfig, train_model

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

WIN = WindowSpec()
SINE = SensingSpec()
CHIRP = SensingSpec(kind="chirp")


def music_windows(kind="low_tones", duration=20.0, seed=0):
    return frame(synth_music(kind, duration, seed).samples, WIN).windows


@pytest.fixture(scope="session")
def low_tone_music():
    return music_windows()


@pytest.fixture(scope="session")
def trained_sine(low_tone_music):
    """Desk-scale sine model: 10 epochs on 20 s of synthetic low tones."""
    return train_model(low_tone_music, SINE, TrainConfig(), ModelConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# (criterion number, title, passed, detail) rows filled in by test_acceptance
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
