"""Session-level feature vectors and the seven feature modes.

Per-command embeddings collapse to one vector per session by column-wise
averaging; fused modes concatenate components in the fixed order
(intent, audio, textual) so slice offsets stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from vascreen.ingest import EmbeddingMatrix
from vascreen.intent import AnchorSet, IntentFeatureVector, intent_features


class FeatureMode(str, Enum):
    INTENT = "intent"
    AUDIO = "audio"
    TEXTUAL = "textual"
    FF1 = "ff1"  # intent + audio
    FF2 = "ff2"  # intent + textual
    FF3 = "ff3"  # audio + textual
    FF4 = "ff4"  # intent + audio + textual


# components per mode, in concatenation order
_COMPONENTS = {
    FeatureMode.INTENT: ("intent",),
    FeatureMode.AUDIO: ("audio",),
    FeatureMode.TEXTUAL: ("textual",),
    FeatureMode.FF1: ("intent", "audio"),
    FeatureMode.FF2: ("intent", "textual"),
    FeatureMode.FF3: ("audio", "textual"),
    FeatureMode.FF4: ("intent", "audio", "textual"),
}


class MissingComponentError(ValueError):
    """A mode demanded a component the session does not provide."""


@dataclass(frozen=True, eq=False)
class FeatureVector:
    mode: FeatureMode
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.isfinite(values).all():
            raise ValueError("feature vector contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def mode_components(mode: FeatureMode) -> tuple[str, ...]:
    return _COMPONENTS[mode]


def mean_embedding(matrix: EmbeddingMatrix) -> np.ndarray:
    """Column-wise mean over commands, accumulated in float64."""
    if matrix.rows < 1:
        raise ValueError("cannot average an empty embedding matrix")
    return matrix.data.astype(np.float64).mean(axis=0)


def build_feature_vector(
    mode: FeatureMode,
    intent: Optional[IntentFeatureVector] = None,
    audio_mean: Optional[np.ndarray] = None,
    textual_mean: Optional[np.ndarray] = None,
) -> FeatureVector:
    """Concatenate the mode's components in the order intent, audio, textual."""
    available = {
        "intent": None if intent is None else intent.concatenated(),
        "audio": None if audio_mean is None else np.asarray(audio_mean, dtype=np.float64),
        "textual": None if textual_mean is None else np.asarray(textual_mean, dtype=np.float64),
    }
    parts = []
    for name in _COMPONENTS[mode]:
        part = available[name]
        if part is None:
            raise MissingComponentError(f"mode {mode.value} requires the {name} component")
        parts.append(part.ravel())
    return FeatureVector(mode=mode, values=np.concatenate(parts))


def expected_dim(mode: FeatureMode, n_anchors: int, audio_cols: int, textual_cols: int) -> int:
    widths = {"intent": 2 * n_anchors, "audio": audio_cols, "textual": textual_cols}
    return sum(widths[name] for name in _COMPONENTS[mode])


def component_slices(
    mode: FeatureMode, n_anchors: int, audio_cols: int, textual_cols: int
) -> dict[str, slice]:
    """Offsets of each component inside a fused vector."""
    widths = {"intent": 2 * n_anchors, "audio": audio_cols, "textual": textual_cols}
    out: dict[str, slice] = {}
    start = 0
    for name in _COMPONENTS[mode]:
        out[name] = slice(start, start + widths[name])
        start += widths[name]
    return out


def session_feature_vector(session, anchors: Optional[AnchorSet], mode: FeatureMode) -> FeatureVector:
    """Features for one preprocessed session.

    Intent features are matched against the session's textual embeddings,
    so the anchor embeddings must come from the same encoder.
    """
    needs = set(_COMPONENTS[mode])
    intent_vec = None
    if "intent" in needs:
        if anchors is None:
            raise MissingComponentError("intent features need an anchor set")
        if session.textual_embeddings is None:
            raise MissingComponentError(
                f"session {session.key}: intent features need textual embeddings"
            )
        intent_vec = intent_features(anchors, session.textual_embeddings)
    audio_mean = None
    if "audio" in needs:
        if session.audio_embeddings is None:
            raise MissingComponentError(f"session {session.key}: no audio embeddings")
        audio_mean = mean_embedding(session.audio_embeddings)
    textual_mean = None
    if "textual" in needs:
        if session.textual_embeddings is None:
            raise MissingComponentError(f"session {session.key}: no textual embeddings")
        textual_mean = mean_embedding(session.textual_embeddings)
    return build_feature_vector(
        mode, intent=intent_vec, audio_mean=audio_mean, textual_mean=textual_mean
    )
