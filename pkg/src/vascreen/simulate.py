"""Synthetic cohorts with a plantable impairment effect.

Each participant visit draws a label and assessment scores; each task session
draws a command count from a negative binomial and emits per-command
embeddings as a randomly chosen anchor vector plus isotropic Gaussian noise.
The two effect knobs mirror the signal of interest: ``count_shift`` adds
extra generation-task commands for impaired sessions, ``noise_shift`` widens
their embedding noise (which lowers mean anchor similarity). Everything
derives from (seed, participant, visit), so cohorts are reproducible and
independent of generation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from vascreen.core import (
    SUBDOMAIN_RANGES,
    Cohort,
    Command,
    CommandStatus,
    DiagnosisLabel,
    MocaAssessment,
    Session,
    Speaker,
    Task,
    label_from_moca,
)
from vascreen.ingest import (
    EmbeddingMatrix,
    SessionManifest,
    manifest_to_json,
    write_embedding_path,
)
from vascreen.intent import (
    DEFAULT_ANCHOR_FILE,
    AnchorEntry,
    AnchorSet,
    anchor_set_to_json,
    intent_features,
)

DEFAULT_PREVALENCE = 98.0 / 243.0


class SimConfigError(ValueError):
    """A simulation config value outside its documented domain."""


@dataclass(frozen=True)
class CountModel:
    """Command count = offset + negative binomial with the given dispersion.

    ``mean`` is the total mean (offset included); the offset floors the count
    so the reading task can sit tightly near its scripted length while the
    generation task keeps a longer tail.
    """

    mean: float
    dispersion: float
    offset: float = 0.0

    def __post_init__(self) -> None:
        if self.dispersion <= 0:
            raise SimConfigError("count dispersion must be positive")
        if self.offset < 0 or self.mean <= self.offset:
            raise SimConfigError("count mean must exceed the (nonnegative) offset")


@dataclass(frozen=True)
class ScoreModel:
    """Label-conditional normal (mean, sd) for one assessment field."""

    hc: tuple[float, float]
    mci: tuple[float, float]

    def __post_init__(self) -> None:
        for mean, sd in (self.hc, self.mci):
            if sd < 0:
                raise SimConfigError(f"score stddev must be nonnegative, got {sd}")

    def params(self, label: DiagnosisLabel) -> tuple[float, float]:
        return self.hc if label is DiagnosisLabel.HC else self.mci


def _default_counts() -> dict:
    return {
        "reading": {
            "HC": CountModel(34.0, 20.0, offset=30.0),
            "MCI": CountModel(34.0, 20.0, offset=30.0),
        },
        "generation": {
            "HC": CountModel(34.0, 60.0, offset=20.0),
            "MCI": CountModel(34.0, 60.0, offset=20.0),
        },
    }


def _default_moca() -> dict:
    return {
        "total": ScoreModel(hc=(28.0, 1.5), mci=(22.0, 2.0)),
        "memory": ScoreModel(hc=(12.0, 1.5), mci=(9.0, 2.0)),
        "executive_function": ScoreModel(hc=(11.0, 1.2), mci=(9.0, 1.5)),
        "attention": ScoreModel(hc=(15.0, 1.5), mci=(12.0, 2.0)),
        "language": ScoreModel(hc=(5.0, 0.8), mci=(4.0, 1.0)),
        "visuospatial": ScoreModel(hc=(6.0, 0.8), mci=(5.0, 1.0)),
        "orientation": ScoreModel(hc=(6.0, 0.5), mci=(5.0, 1.0)),
    }


@dataclass(frozen=True)
class SimConfig:
    n_participants: int = 35
    sessions_per_participant: int = 7
    mci_prevalence: float = DEFAULT_PREVALENCE
    tasks: tuple[str, ...] = ("reading", "generation")
    count_shift: float = 0.0
    noise_shift: float = 0.0
    base_noise: float = 0.1
    counts: dict = field(default_factory=_default_counts)
    moca: dict = field(default_factory=_default_moca)
    n_anchors: int = 34
    audio_dim: int = 1024
    textual_dim: int = 768
    anchor_file: Optional[str] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.mci_prevalence <= 1:
            raise SimConfigError(f"mci_prevalence {self.mci_prevalence} outside [0, 1]")
        if not 1 <= self.sessions_per_participant <= 7:
            raise SimConfigError("sessions_per_participant must be within 1..7")
        if self.n_participants < 1:
            raise SimConfigError("n_participants must be >= 1")
        if self.n_anchors < 1:
            raise SimConfigError("n_anchors must be >= 1")
        if self.audio_dim < 1 or self.textual_dim < 1:
            raise SimConfigError("embedding dims must be >= 1")
        if self.base_noise < 0 or self.noise_shift < 0:
            raise SimConfigError("noise levels must be nonnegative")
        if self.seed < 0:
            raise SimConfigError("seed must be nonnegative")
        for task in self.tasks:
            if task not in ("reading", "generation"):
                raise SimConfigError(f"unknown task {task!r}")
            if task not in self.counts:
                raise SimConfigError(f"no count model for task {task!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        doc = dict(doc)
        if "counts" in doc:
            doc["counts"] = {
                task: {
                    lab: CountModel(
                        float(m["mean"]),
                        float(m["dispersion"]),
                        float(m.get("offset", 0.0)),
                    )
                    for lab, m in per_label.items()
                }
                for task, per_label in doc["counts"].items()
            }
        if "moca" in doc:
            doc["moca"] = {
                name: ScoreModel(hc=tuple(m["HC"]), mci=tuple(m["MCI"]))
                for name, m in doc["moca"].items()
            }
        if "tasks" in doc:
            doc["tasks"] = tuple(doc["tasks"])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise SimConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path: Path | str) -> "SimConfig":
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _load_anchor_entries(cfg: SimConfig) -> list[AnchorEntry]:
    path = Path(cfg.anchor_file) if cfg.anchor_file else DEFAULT_ANCHOR_FILE
    doc = json.loads(path.read_text("utf-8"))
    entries = [
        AnchorEntry(e["anchor_text"], e["intent_text"], e.get("category", ""))
        for e in doc["entries"]
    ]
    if cfg.n_anchors > len(entries):
        entries = entries + [
            AnchorEntry(
                f"Template command {i}.", f"Intent {i}", "information"
            )
            for i in range(len(entries), cfg.n_anchors)
        ]
    return entries[: cfg.n_anchors]


def _unit_vectors(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    vec = rng.standard_normal((n, d))
    return vec / np.linalg.norm(vec, axis=1, keepdims=True)


def _draw_moca(rng: np.random.Generator, cfg: SimConfig, label: DiagnosisLabel) -> MocaAssessment:
    mean, sd = cfg.moca["total"].params(label)
    total = int(round(rng.normal(mean, sd)))
    # keep totals on the correct side of the screening threshold
    total = min(max(total, 26), 30) if label is DiagnosisLabel.HC else min(max(total, 0), 25)
    fields = {"total": total}
    for name, upper in SUBDOMAIN_RANGES:
        mean, sd = cfg.moca[name].params(label)
        fields[name] = min(max(int(round(rng.normal(mean, sd))), 0), upper)
    return MocaAssessment(**fields)


def _draw_count(rng: np.random.Generator, cfg: SimConfig, task: str, label: DiagnosisLabel) -> int:
    model = cfg.counts[task][label.value]
    mean = model.mean
    if task == "generation" and label is DiagnosisLabel.MCI:
        mean += cfg.count_shift
    nb_mean = mean - model.offset
    r = model.dispersion
    count = int(round(model.offset)) + int(rng.negative_binomial(r, r / (r + nb_mean)))
    return max(count, 3)


def simulate_cohort(cfg: SimConfig) -> tuple[Cohort, AnchorSet]:
    """Generate an in-memory cohort plus the anchor set its features use."""
    entries = _load_anchor_entries(cfg)
    anchor_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xA]))
    anchors_textual = _unit_vectors(anchor_rng, cfg.n_anchors, cfg.textual_dim)
    anchors_audio = _unit_vectors(anchor_rng, cfg.n_anchors, cfg.audio_dim)
    anchor_set = AnchorSet(
        entries=tuple(entries), embeddings=EmbeddingMatrix(anchors_textual)
    )

    sessions = []
    for p in range(cfg.n_participants):
        pid = f"p{p:03d}"
        for visit in range(1, cfg.sessions_per_participant + 1):
            visit_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, p, visit]))
            label = (
                DiagnosisLabel.MCI
                if visit_rng.random() < cfg.mci_prevalence
                else DiagnosisLabel.HC
            )
            moca = _draw_moca(visit_rng, cfg, label)
            assert label_from_moca(moca) is label
            sigma = cfg.base_noise + (
                cfg.noise_shift if label is DiagnosisLabel.MCI else 0.0
            )
            for t_idx, task in enumerate(cfg.tasks):
                rng = np.random.default_rng(
                    np.random.SeedSequence([cfg.seed, 2, p, visit, t_idx])
                )
                m = _draw_count(rng, cfg, task, label)
                chosen = rng.integers(0, cfg.n_anchors, size=m)
                textual = anchors_textual[chosen] + sigma * rng.standard_normal(
                    (m, cfg.textual_dim)
                )
                audio = anchors_audio[chosen] + sigma * rng.standard_normal(
                    (m, cfg.audio_dim)
                )
                commands = tuple(
                    Command(
                        command_id=f"{pid}_v{visit}_{task}_{j:03d}",
                        speaker=Speaker.PARTICIPANT,
                        transcript=f"{entries[chosen[j]].intent_text} please ({j + 1})",
                        status=CommandStatus.OK,
                        embedding_row=j,
                    )
                    for j in range(m)
                )
                sessions.append(
                    Session(
                        participant_id=pid,
                        session_index=visit,
                        task=Task(task),
                        commands=commands,
                        moca=moca,
                        audio_embeddings=EmbeddingMatrix(audio.astype(np.float32)),
                        textual_embeddings=EmbeddingMatrix(textual.astype(np.float32)),
                    )
                )
    return Cohort(sessions=tuple(sessions), provenance="simulated"), anchor_set


def write_cohort(cohort: Cohort, anchors: AnchorSet, out_dir: Path | str) -> None:
    """Serialize a cohort through the standard manifest and VAEF formats."""
    out_dir = Path(out_dir)
    sess_dir = out_dir / "sessions"
    sess_dir.mkdir(parents=True, exist_ok=True)
    write_embedding_path(out_dir / "anchors.vaef", anchors.embeddings)
    (out_dir / "anchors.json").write_text(
        anchor_set_to_json(anchors, "anchors.vaef"), "utf-8"
    )
    for session in cohort.sessions:
        stem = f"{session.participant_id}_v{session.session_index:02d}_{session.task.value}"
        audio_name = f"{stem}.audio.vaef"
        textual_name = f"{stem}.textual.vaef"
        write_embedding_path(sess_dir / audio_name, session.audio_embeddings)
        write_embedding_path(sess_dir / textual_name, session.textual_embeddings)
        manifest = SessionManifest(
            session=session, audio_path=audio_name, textual_path=textual_name
        )
        (sess_dir / f"{stem}.json").write_text(manifest_to_json(manifest), "utf-8")


def simulate_to_dir(cfg: SimConfig, out_dir: Path | str) -> tuple[Cohort, AnchorSet]:
    cohort, anchors = simulate_cohort(cfg)
    write_cohort(cohort, anchors, out_dir)
    return cohort, anchors


def summarize_cohort(cohort: Cohort, anchors: Optional[AnchorSet] = None) -> dict:
    """Command-count quartiles and mean similarity per (task, label)."""
    if not cohort.sessions:
        raise ValueError("cannot summarize an empty cohort")
    out: dict = {}
    for task in ("reading", "generation"):
        for label in ("HC", "MCI"):
            selected = [
                s
                for s in cohort.sessions
                if s.task.value == task and s.label.value == label
            ]
            if not selected:
                continue
            counts = np.array([len(s.commands) for s in selected], dtype=np.float64)
            cell = {
                "n_sessions": len(selected),
                "count_min": float(counts.min()),
                "count_q1": float(np.percentile(counts, 25)),
                "count_median": float(np.percentile(counts, 50)),
                "count_q3": float(np.percentile(counts, 75)),
                "count_max": float(counts.max()),
            }
            if anchors is not None:
                qlt_means = []
                for s in selected:
                    if s.textual_embeddings is None:
                        continue
                    feats = intent_features(anchors, s.textual_embeddings)
                    m = int(feats.qty.sum())
                    if m:
                        qlt_means.append(float(np.sum(feats.qty * feats.qlt) / m))
                if qlt_means:
                    cell["qlt_mean"] = float(np.mean(qlt_means))
            out[f"{task}/{label}"] = cell
    return out


def summary_table(summary: dict) -> str:
    cols = (
        "n_sessions",
        "count_min",
        "count_q1",
        "count_median",
        "count_q3",
        "count_max",
        "qlt_mean",
    )
    lines = ["\t".join(("cell",) + cols)]
    for key in sorted(summary):
        cell = summary[key]
        row = [key]
        for c in cols:
            v = cell.get(c)
            row.append("" if v is None else (f"{v:.4f}" if isinstance(v, float) else str(v)))
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"
