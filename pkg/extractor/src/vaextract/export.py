"""Turn raw sessions (audio clips + transcript table) into pipeline inputs.

Outputs follow the screening pipeline's file interfaces exactly: a JSON
session manifest plus one VAEF matrix per modality, with embedding rows
numbered consistently across modalities. Every cleanly-decoded command is
embedded regardless of speaker (the pipeline's preprocessing drops
non-participant rows itself); a command marked ok but missing its clip or
transcript is downgraded to unmatched, which is what that status means.
The encoder identifiers used are recorded in the manifest for provenance.
"""

from __future__ import annotations

import csv
import json
import struct
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from vaextract.audio import load_clip
from vaextract.encoders import (
    AUDIO_BACKENDS,
    SENTENCE_BACKENDS,
    TEXT_BACKENDS,
    EncodingError,
)

_VAEF_HEADER = struct.Struct("<4sHBBII")

SPEAKERS = ("participant", "assistant", "other")
STATUSES = ("ok", "asr_error", "unmatched")
MOCA_FIELDS = (
    "total",
    "memory",
    "executive_function",
    "attention",
    "language",
    "visuospatial",
    "orientation",
)


class RawSessionError(ValueError):
    """Raw session inputs that cannot be exported."""


def write_vaef(path: Path | str, matrix: np.ndarray) -> None:
    """Write a float32 matrix in the VAEF layout; refuses non-finite values."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise RawSessionError(f"expected a 2-D matrix, got shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise RawSessionError("refusing to write non-finite embedding values")
    header = _VAEF_HEADER.pack(b"VAEF", 1, 1, 0, matrix.shape[0], matrix.shape[1])
    Path(path).write_bytes(header + matrix.tobytes(order="C"))


@dataclass(frozen=True)
class RawCommand:
    command_id: str
    speaker: str
    transcript: str
    status: str
    clip: Optional[str]  # path, relative to the commands table

    @property
    def is_embeddable(self) -> bool:
        """Decoded cleanly with both modalities present: gets an embedding row."""
        return self.status == "ok"

    @property
    def is_usable(self) -> bool:
        """Will survive the pipeline's preprocessing."""
        return self.speaker == "participant" and self.status == "ok"


@dataclass(frozen=True)
class RawSession:
    participant_id: str
    session_index: int
    task: str
    moca: dict
    commands: tuple[RawCommand, ...]
    base_dir: Path


def read_raw_session(meta_path: Path | str, commands_path: Path | str) -> RawSession:
    """Load session metadata (JSON) and the command table (CSV)."""
    meta_path = Path(meta_path)
    commands_path = Path(commands_path)
    try:
        meta = json.loads(meta_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise RawSessionError(f"{meta_path.name}: not valid JSON: {exc}") from None
    for key in ("participant_id", "session_index", "task", "moca"):
        if key not in meta:
            raise RawSessionError(f"{meta_path.name}: missing {key!r}")
    for key in MOCA_FIELDS:
        if key not in meta["moca"]:
            raise RawSessionError(f"{meta_path.name}: moca missing {key!r}")

    commands = []
    with commands_path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"command_id", "speaker", "transcript", "status", "clip"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise RawSessionError(
                f"{commands_path.name}: header must include {sorted(required)}"
            )
        for i, row in enumerate(reader):
            if row["speaker"] not in SPEAKERS:
                raise RawSessionError(f"{commands_path.name} row {i}: bad speaker")
            if row["status"] not in STATUSES:
                raise RawSessionError(f"{commands_path.name} row {i}: bad status")
            clip = row["clip"].strip() or None
            command = RawCommand(
                command_id=row["command_id"],
                speaker=row["speaker"],
                transcript=row["transcript"],
                status=row["status"],
                clip=clip,
            )
            if command.status == "ok" and (
                not command.transcript.strip() or clip is None
            ):
                warnings.warn(
                    f"{commands_path.name} row {i}: ok command missing a modality, "
                    "downgraded to unmatched",
                    UserWarning,
                    stacklevel=2,
                )
                command = replace(command, status="unmatched")
            commands.append(command)
    if not commands:
        raise RawSessionError(f"{commands_path.name}: no commands")
    return RawSession(
        participant_id=str(meta["participant_id"]),
        session_index=int(meta["session_index"]),
        task=str(meta["task"]),
        moca={k: int(meta["moca"][k]) for k in MOCA_FIELDS},
        commands=tuple(commands),
        base_dir=commands_path.parent,
    )


@dataclass(frozen=True)
class ExportConfig:
    text_backend: str = "hash"
    audio_backend: str = "hash"
    sentence_backend: str = "hash"
    textual_source: str = "sentence"  # "sentence" | "token_mean"

    def __post_init__(self) -> None:
        if self.text_backend not in TEXT_BACKENDS:
            raise RawSessionError(f"unknown text backend {self.text_backend!r}")
        if self.audio_backend not in AUDIO_BACKENDS:
            raise RawSessionError(f"unknown audio backend {self.audio_backend!r}")
        if self.sentence_backend not in SENTENCE_BACKENDS:
            raise RawSessionError(f"unknown sentence backend {self.sentence_backend!r}")
        if self.textual_source not in ("sentence", "token_mean"):
            raise RawSessionError(f"unknown textual source {self.textual_source!r}")

    def textual_encoder(self):
        if self.textual_source == "sentence":
            return SENTENCE_BACKENDS[self.sentence_backend]()
        return TEXT_BACKENDS[self.text_backend]()

    def audio_encoder(self):
        return AUDIO_BACKENDS[self.audio_backend]()


def export_session(
    raw: RawSession, out_dir: Path | str, config: ExportConfig = ExportConfig()
) -> Path:
    """Embed a raw session and write its manifest + VAEF files.

    Returns the manifest path. Usable commands get embedding rows 0..m-1 in
    order, shared by the audio and textual matrices.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    embeddable = [c for c in raw.commands if c.is_embeddable]
    if not embeddable:
        raise RawSessionError("no cleanly-decoded commands to embed")

    texts = [c.transcript for c in embeddable]
    clips = [load_clip(raw.base_dir / c.clip) for c in embeddable]

    text_encoder = config.textual_encoder()
    audio_encoder = config.audio_encoder()
    try:
        textual = text_encoder.encode(texts)
        audio = audio_encoder.encode(clips)
    except EncodingError as exc:
        raise RawSessionError(str(exc)) from None

    stem = f"{raw.participant_id}_v{raw.session_index:02d}_{raw.task}"
    audio_name = f"{stem}.audio.vaef"
    textual_name = f"{stem}.textual.vaef"
    write_vaef(out_dir / audio_name, audio)
    write_vaef(out_dir / textual_name, textual)

    row = 0
    command_docs = []
    for c in raw.commands:
        doc = {
            "command_id": c.command_id,
            "speaker": c.speaker,
            "transcript": c.transcript,
            "status": c.status,
        }
        if c.is_embeddable:
            doc["embedding_row"] = row
            row += 1
        command_docs.append(doc)

    manifest = {
        "participant_id": raw.participant_id,
        "session_index": raw.session_index,
        "task": raw.task,
        "moca": raw.moca,
        "embeddings": {"audio": audio_name, "textual": textual_name},
        "commands": command_docs,
        # provenance: which encoders produced the embedding files
        "encoders": {"audio": audio_encoder.name, "textual": text_encoder.name},
    }
    manifest_path = out_dir / f"{stem}.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", "utf-8"
    )
    return manifest_path


def export_anchor_embeddings(
    anchors_path: Path | str,
    out_dir: Path | str,
    sentence_backend: str = "hash",
) -> Path:
    """Embed an anchor file's commands; write anchors.vaef + updated JSON."""
    anchors_path = Path(anchors_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = json.loads(anchors_path.read_text("utf-8"))
    if "entries" not in doc or not doc["entries"]:
        raise RawSessionError(f"{anchors_path.name}: no anchor entries")
    texts = [e["anchor_text"] for e in doc["entries"]]
    encoder = SENTENCE_BACKENDS[sentence_backend]()
    matrix = encoder.encode(texts)
    write_vaef(out_dir / "anchors.vaef", matrix)
    doc["embeddings"] = "anchors.vaef"
    doc["encoder"] = encoder.name
    out_path = out_dir / "anchors.json"
    out_path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", "utf-8")
    return out_path
