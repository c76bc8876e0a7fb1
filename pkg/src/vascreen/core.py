"""Domain types shared across the pipeline, plus the screening label rule.

Everything here is an immutable value object: construction validates, and
after that instances are safe to share between threads or processes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from vascreen.ingest import EmbeddingMatrix


class Speaker(str, Enum):
    PARTICIPANT = "participant"
    ASSISTANT = "assistant"
    OTHER = "other"


class CommandStatus(str, Enum):
    OK = "ok"
    ASR_ERROR = "asr_error"
    UNMATCHED = "unmatched"


class CommandCategory(str, Enum):
    INFORMATION = "information"
    ENTERTAINMENT = "entertainment"
    PRODUCTIVITY = "productivity"
    SHOPPING = "shopping"
    COMMUNICATION = "communication"
    SMART_HOME = "smart_home"


class Task(str, Enum):
    READING = "reading"
    GENERATION = "generation"


class DiagnosisLabel(str, Enum):
    MCI = "MCI"
    HC = "HC"


HC_THRESHOLD = 26  # total score at or above this labels a session HC

# (field name, max score) for the six assessment subdomains
SUBDOMAIN_RANGES = (
    ("memory", 15),
    ("executive_function", 13),
    ("attention", 18),
    ("language", 6),
    ("visuospatial", 7),
    ("orientation", 6),
)
SUBDOMAINS = tuple(name for name, _ in SUBDOMAIN_RANGES)


@dataclass(frozen=True)
class MocaAssessment:
    """Total cognitive score plus the six subdomain index scores.

    Subdomain scores are stored independently of the total: the published
    index scoring reuses items across indices, so no cross-field sum
    constraint is enforced.
    """

    total: int
    memory: int
    executive_function: int
    attention: int
    language: int
    visuospatial: int
    orientation: int

    def __post_init__(self) -> None:
        self._check_range("total", self.total, 30)
        for name, upper in SUBDOMAIN_RANGES:
            self._check_range(name, getattr(self, name), upper)

    @staticmethod
    def _check_range(name: str, value: int, upper: int) -> None:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"moca.{name} must be an integer, got {value!r}")
        if not 0 <= value <= upper:
            raise ValueError(f"moca.{name}={value} outside [0, {upper}]")

    def subdomain(self, name: str) -> int:
        if name == "total":
            return self.total
        if name not in SUBDOMAINS:
            raise KeyError(f"unknown subdomain {name!r}")
        return getattr(self, name)


def label_from_moca(moca: MocaAssessment) -> DiagnosisLabel:
    """HC iff the total score reaches the screening threshold, else MCI."""
    return DiagnosisLabel.HC if moca.total >= HC_THRESHOLD else DiagnosisLabel.MCI


@dataclass(frozen=True)
class Command:
    """One utterance in a session, as segmented from the recording."""

    command_id: str
    speaker: Speaker
    transcript: str
    status: CommandStatus
    embedding_row: Optional[int] = None
    category: Optional[CommandCategory] = None

    def __post_init__(self) -> None:
        if self.status is CommandStatus.OK:
            if self.embedding_row is None:
                raise ValueError(
                    f"command {self.command_id!r}: status=ok requires embedding_row"
                )
            if not self.transcript.strip():
                raise ValueError(
                    f"command {self.command_id!r}: status=ok requires a transcript"
                )
        if self.embedding_row is not None and self.embedding_row < 0:
            raise ValueError(
                f"command {self.command_id!r}: embedding_row must be nonnegative"
            )

    @property
    def is_usable(self) -> bool:
        """True for participant commands that decoded cleanly."""
        return self.speaker is Speaker.PARTICIPANT and self.status is CommandStatus.OK


@dataclass(frozen=True)
class Session:
    """One participant visit for one task.

    ``audio_embeddings`` / ``textual_embeddings`` are optional
    :class:`~vascreen.ingest.EmbeddingMatrix` instances; they stay ``None``
    until the embedding files are attached by the loader.
    """

    participant_id: str
    session_index: int
    task: Task
    commands: tuple[Command, ...]
    moca: MocaAssessment
    audio_embeddings: Optional["EmbeddingMatrix"] = None
    textual_embeddings: Optional["EmbeddingMatrix"] = None

    def __post_init__(self) -> None:
        if not 1 <= self.session_index <= 7:
            raise ValueError(f"session_index={self.session_index} outside 1..7")
        object.__setattr__(self, "commands", tuple(self.commands))

    @property
    def label(self) -> DiagnosisLabel:
        return label_from_moca(self.moca)

    def with_embeddings(self, audio=None, textual=None) -> "Session":
        return replace(self, audio_embeddings=audio, textual_embeddings=textual)

    @property
    def key(self) -> tuple[str, int, str]:
        return (self.participant_id, self.session_index, self.task.value)


def participant_command_count(session: Session) -> int:
    """Number of cleanly decoded participant commands (the m used downstream)."""
    return sum(1 for c in session.commands if c.is_usable)


@dataclass(frozen=True)
class Cohort:
    """A set of sessions plus where they came from."""

    sessions: tuple[Session, ...]
    provenance: str = "ingested"  # "ingested" | "simulated"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sessions", tuple(self.sessions))
        if self.provenance not in ("ingested", "simulated"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        seen: set[tuple[str, int, str]] = set()
        for s in self.sessions:
            if s.key in seen:
                raise ValueError(f"duplicate session {s.key}")
            seen.add(s.key)

    def for_task(self, task: Task) -> tuple[Session, ...]:
        return tuple(s for s in self.sessions if s.task is task)
