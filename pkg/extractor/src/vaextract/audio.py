"""WAV reading and sample-rate normalization."""

from __future__ import annotations

import wave
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

TARGET_RATE = 16000

_PCM_SCALE = {1: 127.0, 2: 32767.0, 4: 2147483647.0}
_PCM_DTYPE = {1: np.uint8, 2: np.dtype("<i2"), 4: np.dtype("<i4")}


class AudioReadError(ValueError):
    """Unreadable or empty audio input."""


def read_wav(path: Path | str) -> tuple[np.ndarray, int]:
    """Read a PCM WAV file as (mono float64 waveform in [-1, 1], sample rate)."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as handle:
            n_channels = handle.getnchannels()
            width = handle.getsampwidth()
            rate = handle.getframerate()
            n_frames = handle.getnframes()
            raw = handle.readframes(n_frames)
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioReadError(f"{path.name}: {exc}") from None
    if width not in _PCM_DTYPE:
        raise AudioReadError(f"{path.name}: unsupported sample width {width}")
    if n_frames == 0:
        raise AudioReadError(f"{path.name}: zero-length audio")
    samples = np.frombuffer(raw, dtype=_PCM_DTYPE[width]).astype(np.float64)
    if width == 1:
        samples -= 128.0  # 8-bit WAV is unsigned
    samples /= _PCM_SCALE[width]
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return samples, rate


def resample_audio(
    waveform: np.ndarray, rate: int, target: int = TARGET_RATE
) -> np.ndarray:
    """Resample a mono waveform to the target rate (polyphase filtering)."""
    waveform = np.asarray(waveform, dtype=np.float64).ravel()
    if waveform.size == 0:
        raise AudioReadError("zero-length audio")
    if rate <= 0 or target <= 0:
        raise AudioReadError(f"invalid sample rate {rate} -> {target}")
    if rate == target:
        return waveform
    ratio = Fraction(target, rate)
    return resample_poly(waveform, ratio.numerator, ratio.denominator)


def load_clip(path: Path | str, target: int = TARGET_RATE) -> np.ndarray:
    """Read and rate-normalize one clip."""
    waveform, rate = read_wav(path)
    return resample_audio(waveform, rate, target)
