import numpy as np
import pytest

from maskedprosody.audio import Waveform

SR = 16000


def tone(freq: float, seconds: float, amplitude: float = 0.5, sr: int = SR) -> Waveform:
    t = np.arange(int(seconds * sr)) / sr
    return Waveform(amplitude * np.sin(2 * np.pi * freq * t), sr)


def sawtooth(freq: float, seconds: float, amplitude: float = 0.5, sr: int = SR) -> Waveform:
    t = np.arange(int(seconds * sr)) / sr
    return Waveform(amplitude * (2 * ((freq * t) % 1.0) - 1), sr)


def silence(seconds: float, sr: int = SR) -> Waveform:
    return Waveform(np.zeros(int(seconds * sr)), sr)


@pytest.fixture(scope="session")
def sine_220() -> Waveform:
    return tone(220.0, 2.0)


@pytest.fixture(scope="session")
def one_second_silence() -> Waveform:
    return silence(1.0)
