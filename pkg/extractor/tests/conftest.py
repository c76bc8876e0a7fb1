import struct
import wave
from pathlib import Path

import numpy as np
import pytest


def write_wav(path: Path, waveform: np.ndarray, rate: int, channels: int = 1) -> None:
    """Write float waveform in [-1, 1] as PCM16 WAV."""
    pcm = np.clip(np.asarray(waveform) * 32767.0, -32768, 32767).astype("<i2")
    if channels > 1:
        pcm = np.repeat(pcm[:, None], channels, axis=1).ravel()
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(channels)
        handle.setsampwidth(2)
        handle.setframerate(rate)
        handle.writeframes(pcm.tobytes())


def tone(duration_s: float, rate: int, freq: float = 440.0, seed: int = 0) -> np.ndarray:
    t = np.arange(int(duration_s * rate)) / rate
    r = np.random.default_rng(seed)
    return 0.5 * np.sin(2 * np.pi * freq * t) + 0.05 * r.standard_normal(t.shape[0])


@pytest.fixture
def rng():
    return np.random.default_rng(2468)
