"""Per-anchor command counts and mean cosine similarities.

Each collected command is matched to the reference (anchor) command it is
most similar to; the feature vector is the per-anchor assignment count
(quantity) concatenated with the per-anchor mean similarity of assigned
commands (quality). Exact similarity ties go to the lowest anchor index so
that every command counts exactly once.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from vascreen.ingest import EmbeddingMatrix, IngestWarning, ManifestError, read_embedding_path


class ZeroNormError(ValueError):
    """Cosine similarity is undefined for a zero vector."""


@dataclass(frozen=True)
class AnchorEntry:
    anchor_text: str
    intent_text: str
    category: str


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """Ordered reference commands plus their sentence embeddings."""

    entries: tuple[AnchorEntry, ...]
    embeddings: EmbeddingMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) < 1:
            raise ValueError("anchor set needs at least one entry")
        if self.embeddings.rows != len(self.entries):
            raise ValueError(
                f"{len(self.entries)} anchors but {self.embeddings.rows} embedding rows"
            )
        norms = np.linalg.norm(self.embeddings.data.astype(np.float64), axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ZeroNormError(f"anchor embedding row {int(zero[0])} has zero norm")

    @property
    def n(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class IntentFeatureVector:
    """Per-anchor counts (qty) and mean assigned similarities (qlt)."""

    qty: np.ndarray  # nonnegative ints, length n
    qlt: np.ndarray  # reals in [-1, 1], length n; 0 where qty is 0

    def __post_init__(self) -> None:
        qty = np.asarray(self.qty, dtype=np.int64)
        qlt = np.asarray(self.qlt, dtype=np.float64)
        if qty.shape != qlt.shape or qty.ndim != 1:
            raise ValueError("qty and qlt must be 1-D and the same length")
        if (qty < 0).any():
            raise ValueError("qty must be nonnegative")
        if ((qty == 0) & (qlt != 0.0)).any():
            raise ValueError("qlt must be 0 where qty is 0")
        object.__setattr__(self, "qty", qty)
        object.__setattr__(self, "qlt", qlt)

    def concatenated(self) -> np.ndarray:
        """qty then qlt, as float64; this is the downstream feature layout."""
        return np.concatenate([self.qty.astype(np.float64), self.qlt])


def cosine_similarity(a, b) -> float:
    """dot(a,b) / (|a||b|), accumulated in float64 and clamped to [-1, 1]."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroNormError("cosine similarity of a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def similarity_matrix(anchors: AnchorSet, commands: EmbeddingMatrix) -> np.ndarray:
    """m x n matrix; entry (j, i) compares command j with anchor i."""
    if commands.cols != anchors.embeddings.cols:
        raise ValueError(
            f"dimension mismatch: commands are {commands.cols}-wide, "
            f"anchors are {anchors.embeddings.cols}-wide"
        )
    cmd = commands.data.astype(np.float64)
    anc = anchors.embeddings.data.astype(np.float64)
    cmd_norms = np.linalg.norm(cmd, axis=1)
    zero = np.flatnonzero(cmd_norms == 0.0)
    if zero.size:
        raise ZeroNormError(f"command embedding row {int(zero[0])} has zero norm")
    anc_norms = np.linalg.norm(anc, axis=1)
    sim = (cmd @ anc.T) / np.outer(cmd_norms, anc_norms)
    return np.clip(sim, -1.0, 1.0)


def assign_commands(sim: np.ndarray) -> np.ndarray:
    """Best anchor per command; exact ties resolve to the lowest anchor index."""
    sim = np.asarray(sim, dtype=np.float64)
    if sim.ndim != 2 or sim.shape[1] < 1:
        raise ValueError(f"expected an m x n matrix with n >= 1, got {sim.shape}")
    return np.argmax(sim, axis=1)  # argmax returns the first (lowest) maximizer


def features_from_similarity(sim: np.ndarray) -> IntentFeatureVector:
    """Counts and mean similarities of commands grouped by best anchor."""
    sim = np.asarray(sim, dtype=np.float64)
    n = sim.shape[1]
    assignment = assign_commands(sim)
    qty = np.bincount(assignment, minlength=n).astype(np.int64)
    sums = np.zeros(n, dtype=np.float64)
    m = sim.shape[0]
    if m:
        np.add.at(sums, assignment, sim[np.arange(m), assignment])
    qlt = np.divide(sums, qty, out=np.zeros(n, dtype=np.float64), where=qty > 0)
    return IntentFeatureVector(qty=qty, qlt=qlt)


def intent_features(anchors: AnchorSet, commands: EmbeddingMatrix) -> IntentFeatureVector:
    """Intent feature vector for one session's command embeddings."""
    return features_from_similarity(similarity_matrix(anchors, commands))


def intent_feature_dim(anchors: AnchorSet) -> int:
    """Width of the concatenated feature vector: counts plus similarities."""
    return 2 * anchors.n


DEFAULT_ANCHOR_FILE = Path(__file__).parent / "data" / "anchors34.json"


def load_anchor_set(
    path: Path | str,
    embeddings: Optional[EmbeddingMatrix] = None,
) -> AnchorSet:
    """Read an anchor file; embeddings come from its VAEF path unless given."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path.name}: not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "entries" not in doc:
        raise ManifestError(f"{path.name}: expected an object with 'entries'")
    entries = []
    for i, e in enumerate(doc["entries"]):
        try:
            entries.append(
                AnchorEntry(
                    anchor_text=str(e["anchor_text"]),
                    intent_text=str(e["intent_text"]),
                    category=str(e.get("category", "")),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"{path.name}: entries[{i}]: {exc}") from None
    if embeddings is None:
        vaef = doc.get("embeddings")
        if vaef is None:
            raise ManifestError(
                f"{path.name}: no 'embeddings' path and none supplied by the caller"
            )
        embeddings = read_embedding_path(path.parent / vaef)
    if len(entries) != 34:
        warnings.warn(
            f"anchor set has {len(entries)} entries; the standard set has 34",
            IngestWarning,
            stacklevel=2,
        )
    return AnchorSet(entries=tuple(entries), embeddings=embeddings)


def anchor_set_to_json(anchors: AnchorSet, embeddings_path: Optional[str]) -> str:
    doc: dict = {
        "entries": [
            {
                "anchor_text": e.anchor_text,
                "intent_text": e.intent_text,
                "category": e.category,
            }
            for e in anchors.entries
        ]
    }
    if embeddings_path is not None:
        doc["embeddings"] = embeddings_path
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
