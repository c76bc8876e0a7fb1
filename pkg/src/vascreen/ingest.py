"""Session manifests, the VAEF embedding file format, and preprocessing.

VAEF layout (bit-exact, little-endian):

    bytes 0-3   magic ASCII "VAEF"
    bytes 4-5   version, uint16, must be 1
    byte  6     dtype code, must be 1 (IEEE-754 binary32)
    byte  7     reserved, must be 0
    bytes 8-11  rows, uint32
    bytes 12-15 cols, uint32
    then rows*cols binary32 values, row-major; no trailing bytes.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from vascreen.core import (
    Cohort,
    Command,
    CommandCategory,
    CommandStatus,
    MocaAssessment,
    Session,
    Speaker,
    Task,
)

VAEF_MAGIC = b"VAEF"
VAEF_VERSION = 1
VAEF_DTYPE_F32 = 1
_HEADER = struct.Struct("<4sHBBII")

PAPER_WIDTHS = (768, 1024)
EXPECTED_COMMAND_RANGE = (30, 65)


class IngestWarning(UserWarning):
    """Recoverable oddity in an input file (unusual width, unknown field, ...)."""


class VaefError(ValueError):
    """Base class for VAEF file problems."""


class VaefBadMagic(VaefError):
    pass


class VaefUnsupported(VaefError):
    """Version, dtype, or reserved byte outside what this reader handles."""


class VaefTruncated(VaefError):
    pass


class VaefTrailingBytes(VaefError):
    pass


class VaefNonFinite(VaefError):
    pass


class ManifestError(ValueError):
    """Manifest text that does not describe a valid session."""


class EmptySessionError(ValueError):
    """Preprocessing removed every command."""


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Dense per-command embedding matrix, float32 row-major."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[1] < 1:
            raise ValueError("embedding matrix needs at least one column")
        if not np.isfinite(arr).all():
            raise VaefNonFinite("embedding matrix contains non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def take_rows(self, indices) -> "EmbeddingMatrix":
        return EmbeddingMatrix(self.data[np.asarray(indices, dtype=np.intp)])

    def same_bits(self, other: "EmbeddingMatrix") -> bool:
        return self.data.shape == other.data.shape and bool(
            np.array_equal(
                self.data.view(np.uint32), other.data.view(np.uint32)
            )
        )


def write_embedding_file(matrix: EmbeddingMatrix) -> bytes:
    """Serialize a matrix to VAEF bytes; deterministic for a given matrix."""
    header = _HEADER.pack(
        VAEF_MAGIC, VAEF_VERSION, VAEF_DTYPE_F32, 0, matrix.rows, matrix.cols
    )
    payload = matrix.data.astype("<f4", copy=False).tobytes(order="C")
    return header + payload


def read_embedding_file(raw: bytes) -> EmbeddingMatrix:
    """Parse VAEF bytes, rejecting every malformed case distinctly."""
    if len(raw) < 4 or raw[:4] != VAEF_MAGIC:
        raise VaefBadMagic(f"not a VAEF file (magic {raw[:4]!r})")
    if len(raw) < _HEADER.size:
        raise VaefTruncated(f"header is {len(raw)} bytes, expected {_HEADER.size}")
    _, version, dtype, reserved, rows, cols = _HEADER.unpack_from(raw)
    if version != VAEF_VERSION:
        raise VaefUnsupported(f"unsupported version {version}")
    if dtype != VAEF_DTYPE_F32:
        raise VaefUnsupported(f"unsupported dtype code {dtype}")
    if reserved != 0:
        raise VaefUnsupported(f"reserved byte is {reserved}, expected 0")
    if cols < 1:
        raise VaefError("cols must be positive")
    expected = rows * cols * 4
    payload = raw[_HEADER.size:]
    if len(payload) < expected:
        raise VaefTruncated(
            f"payload holds {len(payload) // 4} values, header declares {rows * cols}"
        )
    if len(payload) > expected:
        raise VaefTrailingBytes(f"{len(payload) - expected} trailing bytes")
    values = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values).ravel())[0])
        raise VaefNonFinite(f"non-finite value at flat index {bad}")
    if cols not in PAPER_WIDTHS:
        warnings.warn(
            f"embedding width {cols} is nonstandard (expected one of {PAPER_WIDTHS})",
            IngestWarning,
            stacklevel=2,
        )
    return EmbeddingMatrix(values.copy())


def read_embedding_path(path: Path | str) -> EmbeddingMatrix:
    return read_embedding_file(Path(path).read_bytes())


def write_embedding_path(path: Path | str, matrix: EmbeddingMatrix) -> None:
    Path(path).write_bytes(write_embedding_file(matrix))


@dataclass(frozen=True)
class SessionManifest:
    """On-disk description of a session: metadata plus embedding file paths."""

    session: Session
    audio_path: Optional[str] = None
    textual_path: Optional[str] = None


_REQUIRED_TOP = ("participant_id", "session_index", "task", "moca", "commands")
_KNOWN_TOP = set(_REQUIRED_TOP) | {"embeddings"}
_MOCA_FIELDS = (
    "total",
    "memory",
    "executive_function",
    "attention",
    "language",
    "visuospatial",
    "orientation",
)
_KNOWN_COMMAND = {
    "command_id",
    "speaker",
    "transcript",
    "status",
    "embedding_row",
    "category",
}


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ManifestError(f"{where}: missing required field {key!r}")
    return doc[key]


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ManifestError(f"{where}: expected an integer, got {value!r}")
    return value


def _parse_command(doc, index: int) -> Command:
    where = f"commands[{index}]"
    if not isinstance(doc, dict):
        raise ManifestError(f"{where}: expected an object")
    unknown = set(doc) - _KNOWN_COMMAND
    if unknown:
        warnings.warn(
            f"{where}: ignoring unknown fields {sorted(unknown)}",
            IngestWarning,
            stacklevel=3,
        )
    try:
        speaker = Speaker(_require(doc, "speaker", where))
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from None
    try:
        status = CommandStatus(_require(doc, "status", where))
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from None
    category = doc.get("category")
    if category is not None:
        try:
            category = CommandCategory(category)
        except ValueError as exc:
            raise ManifestError(f"{where}: {exc}") from None
    row = doc.get("embedding_row")
    if row is not None:
        row = _as_int(row, f"{where}.embedding_row")
    try:
        return Command(
            command_id=str(_require(doc, "command_id", where)),
            speaker=speaker,
            transcript=str(_require(doc, "transcript", where)),
            status=status,
            embedding_row=row,
            category=category,
        )
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from None


def read_manifest(raw: bytes | str) -> SessionManifest:
    """Parse manifest JSON into a validated manifest (embeddings not loaded)."""
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ManifestError("manifest root must be an object")

    unknown = set(doc) - _KNOWN_TOP
    if unknown:
        warnings.warn(
            f"ignoring unknown manifest fields {sorted(unknown)}",
            IngestWarning,
            stacklevel=2,
        )
    for key in _REQUIRED_TOP:
        _require(doc, key, "manifest")

    moca_doc = doc["moca"]
    if not isinstance(moca_doc, dict):
        raise ManifestError("moca: expected an object")
    for key in _MOCA_FIELDS:
        _require(moca_doc, key, "moca")
    try:
        moca = MocaAssessment(
            **{k: _as_int(moca_doc[k], f"moca.{k}") for k in _MOCA_FIELDS}
        )
    except ValueError as exc:
        raise ManifestError(f"moca: {exc}") from None

    try:
        task = Task(doc["task"])
    except ValueError as exc:
        raise ManifestError(f"task: {exc}") from None

    if not isinstance(doc["commands"], list):
        raise ManifestError("commands: expected a list")
    commands = [_parse_command(c, i) for i, c in enumerate(doc["commands"])]
    seen_ids: set[str] = set()
    for i, c in enumerate(commands):
        if c.command_id in seen_ids:
            raise ManifestError(f"commands[{i}]: duplicate command_id {c.command_id!r}")
        seen_ids.add(c.command_id)

    embeddings = doc.get("embeddings") or {}
    if not isinstance(embeddings, dict):
        raise ManifestError("embeddings: expected an object")

    try:
        session = Session(
            participant_id=str(doc["participant_id"]),
            session_index=_as_int(doc["session_index"], "session_index"),
            task=task,
            commands=tuple(commands),
            moca=moca,
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from None
    return SessionManifest(
        session=session,
        audio_path=embeddings.get("audio"),
        textual_path=embeddings.get("textual"),
    )


def parse_manifest(raw: bytes | str) -> Session:
    """Parse and validate a manifest, returning the session it describes."""
    return read_manifest(raw).session


def manifest_to_json(manifest: SessionManifest) -> str:
    """Deterministic manifest serialization (inverse of read_manifest)."""
    s = manifest.session
    doc: dict = {
        "participant_id": s.participant_id,
        "session_index": s.session_index,
        "task": s.task.value,
        "moca": {k: s.moca.subdomain(k) for k in _MOCA_FIELDS},
        "commands": [
            {
                "command_id": c.command_id,
                "speaker": c.speaker.value,
                "transcript": c.transcript,
                "status": c.status.value,
                **({"embedding_row": c.embedding_row} if c.embedding_row is not None else {}),
                **({"category": c.category.value} if c.category is not None else {}),
            }
            for c in s.commands
        ],
    }
    paths = {}
    if manifest.audio_path is not None:
        paths["audio"] = manifest.audio_path
    if manifest.textual_path is not None:
        paths["textual"] = manifest.textual_path
    if paths:
        doc["embeddings"] = paths
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def load_session(manifest_path: Path | str) -> Session:
    """Read one manifest and attach any embedding matrices it references."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path.read_bytes())
    base = manifest_path.parent

    def read_named(rel: str) -> EmbeddingMatrix:
        try:
            return read_embedding_path(base / rel)
        except VaefError as exc:
            raise type(exc)(f"{rel}: {exc}") from None

    audio = textual = None
    if manifest.audio_path is not None:
        audio = read_named(manifest.audio_path)
    if manifest.textual_path is not None:
        textual = read_named(manifest.textual_path)
    return manifest.session.with_embeddings(audio=audio, textual=textual)


def preprocess(session: Session) -> Session:
    """Drop error, unmatched, and non-participant commands; re-slice matrices.

    Surviving commands keep their order and get renumbered embedding rows
    0..m-1, so the operation is idempotent. Raises EmptySessionError when
    nothing survives.
    """
    matrices = [
        m for m in (session.audio_embeddings, session.textual_embeddings) if m is not None
    ]

    def resolvable(c: Command) -> bool:
        if not c.is_usable or c.embedding_row is None:
            return False
        return all(c.embedding_row < m.rows for m in matrices)

    survivors = [c for c in session.commands if resolvable(c)]
    if not survivors:
        raise EmptySessionError(
            f"session {session.key}: no usable commands after preprocessing"
        )
    rows = [c.embedding_row for c in survivors]
    commands = tuple(
        replace(c, embedding_row=k) for k, c in enumerate(survivors)
    )
    m = len(commands)
    lo, hi = EXPECTED_COMMAND_RANGE
    if not lo <= m <= hi:
        warnings.warn(
            f"session {session.key}: {m} commands survive, outside [{lo}, {hi}]",
            IngestWarning,
            stacklevel=2,
        )
    audio = session.audio_embeddings
    textual = session.textual_embeddings
    return replace(
        session,
        commands=commands,
        audio_embeddings=audio.take_rows(rows) if audio is not None else None,
        textual_embeddings=textual.take_rows(rows) if textual is not None else None,
    )


def load_cohort(cohort_dir: Path | str, provenance: str = "ingested") -> Cohort:
    """Load every session manifest under <dir>/sessions, sorted by filename."""
    cohort_dir = Path(cohort_dir)
    sess_dir = cohort_dir / "sessions"
    if not sess_dir.is_dir():
        raise FileNotFoundError(f"no sessions/ directory under {cohort_dir}")
    paths = sorted(sess_dir.glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no session manifests under {sess_dir}")
    sessions = []
    for path in paths:
        try:
            sessions.append(load_session(path))
        except (ManifestError, VaefError) as exc:
            raise type(exc)(f"{path.name}: {exc}") from None
    return Cohort(sessions=tuple(sessions), provenance=provenance)
