"""Offline embedding extractor for voice-assistant session pipelines."""

from vaextract.audio import load_clip, read_wav, resample_audio
from vaextract.encoders import (
    EncoderUnavailableError,
    embed_audio,
    embed_sentences,
    embed_textual,
)
from vaextract.export import (
    ExportConfig,
    RawSession,
    export_anchor_embeddings,
    export_session,
    read_raw_session,
)

__version__ = "0.1.0"

__all__ = [
    "EncoderUnavailableError",
    "ExportConfig",
    "RawSession",
    "embed_audio",
    "embed_sentences",
    "embed_textual",
    "export_anchor_embeddings",
    "export_session",
    "load_clip",
    "read_raw_session",
    "read_wav",
    "resample_audio",
]
