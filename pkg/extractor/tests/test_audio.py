import numpy as np
import pytest

from vaextract.audio import AudioReadError, load_clip, read_wav, resample_audio

from .conftest import tone, write_wav


class TestReadWav:
    def test_mono_round_trip(self, tmp_path):
        wav = tmp_path / "a.wav"
        signal = tone(0.5, 16000)
        write_wav(wav, signal, 16000)
        waveform, rate = read_wav(wav)
        assert rate == 16000
        assert waveform.shape[0] == signal.shape[0]
        assert np.max(np.abs(waveform - signal)) < 1e-3  # PCM16 quantization

    def test_stereo_downmixes(self, tmp_path):
        wav = tmp_path / "s.wav"
        write_wav(wav, tone(0.2, 16000), 16000, channels=2)
        waveform, rate = read_wav(wav)
        assert waveform.ndim == 1
        assert waveform.shape[0] == int(0.2 * 16000)

    def test_empty_file_rejected(self, tmp_path):
        wav = tmp_path / "e.wav"
        write_wav(wav, np.zeros(0), 16000)
        with pytest.raises(AudioReadError, match="zero-length"):
            read_wav(wav)

    def test_garbage_rejected(self, tmp_path):
        bad = tmp_path / "g.wav"
        bad.write_bytes(b"not audio at all")
        with pytest.raises(AudioReadError):
            read_wav(bad)


class TestResample:
    def test_16k_is_identity(self):
        signal = tone(0.5, 16000)
        out = resample_audio(signal, 16000)
        assert out.shape[0] == signal.shape[0]
        assert np.array_equal(out, signal)

    def test_48k_three_seconds(self):
        signal = tone(3.0, 48000)
        out = resample_audio(signal, 48000)
        assert out.shape[0] == 48000  # 3 s at 16 kHz

    def test_44100_length(self):
        signal = tone(1.0, 44100)
        out = resample_audio(signal, 44100)
        assert abs(out.shape[0] - 16000) <= 1

    def test_empty_rejected(self):
        with pytest.raises(AudioReadError, match="zero-length"):
            resample_audio(np.zeros(0), 48000)

    def test_preserves_tone_shape(self):
        signal = tone(1.0, 48000, freq=440.0, seed=3)
        out = resample_audio(signal, 48000)
        spectrum = np.abs(np.fft.rfft(out))
        peak_hz = np.argmax(spectrum) * 16000 / out.shape[0]
        assert abs(peak_hz - 440.0) < 5.0


class TestLoadClip:
    def test_reads_and_resamples(self, tmp_path):
        wav = tmp_path / "c.wav"
        write_wav(wav, tone(1.5, 48000), 48000)
        out = load_clip(wav)
        assert out.shape[0] == int(1.5 * 16000)
