"""Embedding backends at the pipeline's contract widths (768 text, 1024 audio).

Two families are provided behind one interface:

- offline "hash"/"spectral" encoders: deterministic, dependency-free,
  driven by stable digests and seeded projections. Lexical overlap drives
  text similarity; framewise spectra drive audio similarity. These keep
  the tool and its tests runnable with no model downloads.
- pretrained backends (BERT-class token-mean text, HuBERT-class frame-mean
  audio, sentence-encoder): loaded lazily and reported as unavailable when
  the weights cannot be fetched.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

TEXT_DIM = 768
AUDIO_DIM = 1024

FRAME_LENGTH = 400  # 25 ms at 16 kHz
FRAME_HOP = 160  # 10 ms


class EncoderUnavailableError(RuntimeError):
    """The requested embedding model cannot be loaded in this environment."""


class EncodingError(ValueError):
    """Input that no row can be produced for (empty text, short clip)."""


_TOKEN_RE = re.compile(r"[a-z0-9']+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _stable_seed(tag: str) -> int:
    digest = hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int) -> np.ndarray:
    rng = np.random.default_rng(_stable_seed("tok\x00" + token))
    vec = rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    vec.flags.writeable = False
    return vec


def _token_vectors(text: str, dim: int, where: str) -> np.ndarray:
    tokens = _tokenize(text)
    if not tokens:
        raise EncodingError(f"{where}: no tokens in {text!r}")
    return np.stack([_token_vector(t, dim) for t in tokens])


@dataclass(frozen=True)
class HashTextEncoder:
    """Token-mean text embeddings from stable per-token random vectors."""

    name = "hash-text"
    dim: int = TEXT_DIM

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise EncodingError("need at least one text")
        rows = [
            _token_vectors(t, self.dim, f"texts[{i}]").mean(axis=0)
            for i, t in enumerate(texts)
        ]
        return np.stack(rows)


@dataclass(frozen=True)
class HashSentenceEncoder:
    """Unit-normalized sentence embeddings: summed token + bigram vectors."""

    name = "hash-sentence"
    dim: int = TEXT_DIM
    bigram_weight: float = 0.5

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise EncodingError("need at least one text")
        rows = []
        for i, text in enumerate(texts):
            tokens = _tokenize(text)
            if not tokens:
                raise EncodingError(f"texts[{i}]: no tokens in {text!r}")
            vec = np.sum([_token_vector(t, self.dim) for t in tokens], axis=0)
            for a, b in zip(tokens, tokens[1:]):
                vec = vec + self.bigram_weight * _token_vector(a + "\x01" + b, self.dim)
            rows.append(vec / np.linalg.norm(vec))
        return np.stack(rows)


def _frame(waveform: np.ndarray) -> np.ndarray:
    n = waveform.shape[0]
    if n < FRAME_LENGTH:
        raise EncodingError(
            f"clip of {n} samples is shorter than one {FRAME_LENGTH}-sample frame"
        )
    count = 1 + (n - FRAME_LENGTH) // FRAME_HOP
    idx = np.arange(FRAME_LENGTH)[None, :] + FRAME_HOP * np.arange(count)[:, None]
    return waveform[idx]


@lru_cache(maxsize=1)
def _spectral_projection(dim: int) -> np.ndarray:
    bins = FRAME_LENGTH // 2 + 1
    rng = np.random.default_rng(_stable_seed("spectral-projection"))
    return rng.standard_normal((bins, dim)) / np.sqrt(bins)


@dataclass(frozen=True)
class SpectralAudioEncoder:
    """Frame-mean audio embeddings from windowed log-magnitude spectra."""

    name = "spectral-audio"
    dim: int = AUDIO_DIM

    def encode(self, clips: list[np.ndarray]) -> np.ndarray:
        if not clips:
            raise EncodingError("need at least one clip")
        window = np.hanning(FRAME_LENGTH)
        projection = _spectral_projection(self.dim)
        rows = []
        for clip in clips:
            frames = _frame(np.asarray(clip, dtype=np.float64).ravel())
            spectra = np.log1p(np.abs(np.fft.rfft(frames * window, axis=1)))
            rows.append((spectra @ projection).mean(axis=0))
        return np.stack(rows)


@dataclass(frozen=True)
class PretrainedTextEncoder:
    """BERT-class encoder, mean-pooled over token representations."""

    model_id: str = "bert-base-uncased"
    dim: int = TEXT_DIM
    name: str = field(init=False, default="pretrained-text")

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise EncodingError("need at least one text")
        torch, tokenizer, model = _load_transformer(self.model_id)
        rows = []
        with torch.no_grad():
            for text in texts:
                inputs = tokenizer(text, return_tensors="pt", truncation=True)
                hidden = model(**inputs).last_hidden_state[0]
                rows.append(hidden.mean(dim=0).numpy().astype(np.float64))
        out = np.stack(rows)
        _check_width(out, self.dim, self.model_id)
        return out


@dataclass(frozen=True)
class PretrainedAudioEncoder:
    """HuBERT-class encoder, mean-pooled over time frames; expects 16 kHz."""

    model_id: str = "facebook/hubert-large-ls960-ft"
    dim: int = AUDIO_DIM
    name: str = field(init=False, default="pretrained-audio")

    def encode(self, clips: list[np.ndarray]) -> np.ndarray:
        if not clips:
            raise EncodingError("need at least one clip")
        torch, processor, model = _load_speech_model(self.model_id)
        rows = []
        with torch.no_grad():
            for clip in clips:
                inputs = processor(
                    np.asarray(clip, dtype=np.float64),
                    sampling_rate=16000,
                    return_tensors="pt",
                )
                hidden = model(**inputs).last_hidden_state[0]
                rows.append(hidden.mean(dim=0).numpy().astype(np.float64))
        out = np.stack(rows)
        _check_width(out, self.dim, self.model_id)
        return out


@dataclass(frozen=True)
class PretrainedSentenceEncoder:
    """Sentence encoder producing unit-normalized vectors."""

    model_id: str = "sentence-transformers/all-mpnet-base-v2"
    dim: int = TEXT_DIM
    name: str = field(init=False, default="pretrained-sentence")

    def encode(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise EncodingError("need at least one text")
        model = _load_sentence_model(self.model_id)
        out = np.asarray(
            model.encode(texts, normalize_embeddings=True), dtype=np.float64
        )
        _check_width(out, self.dim, self.model_id)
        return out


def _check_width(matrix: np.ndarray, expected: int, model_id: str) -> None:
    if matrix.shape[1] != expected:
        raise EncoderUnavailableError(
            f"{model_id} produced width {matrix.shape[1]}, contract requires {expected}"
        )


def _load_transformer(model_id: str):
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
        model.eval()
        return torch, tokenizer, model
    except Exception as exc:
        raise EncoderUnavailableError(f"cannot load {model_id}: {exc}") from None


def _load_speech_model(model_id: str):
    try:
        import torch
        from transformers import AutoFeatureExtractor, AutoModel

        processor = AutoFeatureExtractor.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
        model.eval()
        return torch, processor, model
    except Exception as exc:
        raise EncoderUnavailableError(f"cannot load {model_id}: {exc}") from None


def _load_sentence_model(model_id: str):
    try:
        from sentence_transformers import SentenceTransformer

        return SentenceTransformer(model_id)
    except Exception as exc:
        raise EncoderUnavailableError(f"cannot load {model_id}: {exc}") from None


TEXT_BACKENDS = {"hash": HashTextEncoder, "bert": PretrainedTextEncoder}
AUDIO_BACKENDS = {"hash": SpectralAudioEncoder, "hubert": PretrainedAudioEncoder}
SENTENCE_BACKENDS = {"hash": HashSentenceEncoder, "mpnet": PretrainedSentenceEncoder}


def embed_textual(transcripts: list[str], backend: str = "hash") -> np.ndarray:
    """m x 768 token-mean text embeddings."""
    return TEXT_BACKENDS[backend]().encode(transcripts)


def embed_audio(clips: list[np.ndarray], backend: str = "hash") -> np.ndarray:
    """m x 1024 frame-mean audio embeddings of 16 kHz waveforms."""
    return AUDIO_BACKENDS[backend]().encode(clips)


def embed_sentences(texts: list[str], backend: str = "hash") -> np.ndarray:
    """n x 768 unit-normalized sentence embeddings."""
    return SENTENCE_BACKENDS[backend]().encode(texts)
