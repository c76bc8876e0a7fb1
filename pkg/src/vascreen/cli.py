"""Command-line pipeline driver: simulate, ingest, features, evaluate, report.

Exit codes: 0 success, 2 input/parse error, 3 validation/config error,
4 internal error. Every run is deterministic given its inputs and seed;
reports echo the full configuration for provenance.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from vascreen.core import SUBDOMAINS, Task
from vascreen.evaluation import (
    FoldError,
    aggregate_report,
    classification_table,
    dumps_report,
    nested_cv,
)
from vascreen.fusion import FeatureMode, MissingComponentError, session_feature_vector
from vascreen.ingest import (
    EmbeddingMatrix,
    EmptySessionError,
    ManifestError,
    VaefError,
    load_cohort,
    preprocess,
    read_embedding_path,
    write_embedding_path,
)
from vascreen.intent import ZeroNormError, load_anchor_set
from vascreen.learners import (
    CLASSIFIER_KINDS,
    CLASSIFY,
    DEFAULT_GRIDS,
    NEGATIVE,
    POSITIVE,
    REGRESS,
    REGRESSOR_KINDS,
    Dataset,
)
from vascreen.simulate import SimConfig, SimConfigError, simulate_to_dir, summarize_cohort, summary_table

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4

_PARSE_ERRORS = (ManifestError, VaefError, json.JSONDecodeError)
_VALIDATION_ERRORS = (
    EmptySessionError,
    MissingComponentError,
    ZeroNormError,
    SimConfigError,
    FoldError,
    FileNotFoundError,
    ValueError,
)


@dataclass
class RunConfig:
    """Evaluation settings, merged from the config file and flags."""

    seed: Optional[int] = None
    rounds: int = 10
    k: int = 10
    inner_k: int = 5
    tasks: tuple[str, ...] = ("reading", "generation")
    modes: tuple[str, ...] = tuple(m.value for m in FeatureMode)
    models: tuple[str, ...] = CLASSIFIER_KINDS
    regression_models: tuple[str, ...] = REGRESSOR_KINDS
    regression_targets: tuple[str, ...] = ("total",) + SUBDOMAINS
    regression_mode: str = "ff4"
    positive: str = "MCI"
    jobs: int = 1
    grids: dict = field(default_factory=dict)

    @classmethod
    def load(cls, args) -> "RunConfig":
        cfg = cls()
        if getattr(args, "config", None):
            doc = json.loads(Path(args.config).read_text("utf-8"))
            for key, value in doc.items():
                if not hasattr(cfg, key):
                    raise ValueError(f"config: unknown key {key!r}")
                if isinstance(getattr(cfg, key), tuple):
                    value = tuple(value)
                setattr(cfg, key, value)
        for key in ("seed", "rounds", "k", "inner_k", "jobs", "positive"):
            value = getattr(args, key, None)
            if value is not None:
                setattr(cfg, key, value)
        if getattr(args, "task", None):
            cfg.tasks = tuple(args.task)
        if getattr(args, "modes", None):
            cfg.modes = tuple(args.modes)
        if getattr(args, "models", None):
            cfg.models = tuple(args.models)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.seed is None:
            raise ValueError("a seed is required (flag --seed or config key 'seed')")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.positive not in ("MCI", "HC"):
            raise ValueError(f"positive class must be MCI or HC, got {self.positive!r}")
        for mode in self.modes + (self.regression_mode,):
            FeatureMode(mode)
        for task in self.tasks:
            Task(task)
        for kind in self.models:
            if kind not in CLASSIFIER_KINDS:
                raise ValueError(f"unknown classifier {kind!r}")
        for kind in self.regression_models:
            if kind not in REGRESSOR_KINDS:
                raise ValueError(f"unknown regressor {kind!r}")
        for target in self.regression_targets:
            if target != "total" and target not in SUBDOMAINS:
                raise ValueError(f"unknown regression target {target!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def grid_for(self, kind: str) -> list[dict]:
        return list(self.grids.get(kind, DEFAULT_GRIDS[kind]))

    def to_dict(self) -> dict:
        # jobs is deliberately not echoed: it is an execution detail and
        # reports must be byte-identical regardless of parallelism
        return {
            "seed": self.seed,
            "rounds": self.rounds,
            "k": self.k,
            "inner_k": self.inner_k,
            "tasks": list(self.tasks),
            "modes": list(self.modes),
            "models": list(self.models),
            "regression_models": list(self.regression_models),
            "regression_targets": list(self.regression_targets),
            "regression_mode": self.regression_mode,
            "positive": self.positive,
            "grids": self.grids,
        }


def _encode_label(label: str) -> int:
    return POSITIVE if label == "MCI" else NEGATIVE


def cmd_simulate(args) -> int:
    cfg = SimConfig.from_file(args.config) if args.config else SimConfig()
    if args.seed is not None:
        cfg = SimConfig.from_dict({**_simconfig_dict(cfg), "seed": args.seed})
    out = Path(args.out)
    cohort, anchors = simulate_to_dir(cfg, out)
    summary = summarize_cohort(cohort, anchors)
    sys.stdout.write(summary_table(summary))
    sys.stdout.write(f"wrote {len(cohort.sessions)} sessions to {out}\n")
    return EXIT_OK


def _simconfig_dict(cfg: SimConfig) -> dict:
    doc = {
        "n_participants": cfg.n_participants,
        "sessions_per_participant": cfg.sessions_per_participant,
        "mci_prevalence": cfg.mci_prevalence,
        "tasks": list(cfg.tasks),
        "count_shift": cfg.count_shift,
        "noise_shift": cfg.noise_shift,
        "base_noise": cfg.base_noise,
        "n_anchors": cfg.n_anchors,
        "audio_dim": cfg.audio_dim,
        "textual_dim": cfg.textual_dim,
        "anchor_file": cfg.anchor_file,
        "seed": cfg.seed,
    }
    doc["counts"] = {
        task: {
            lab: {"mean": m.mean, "dispersion": m.dispersion, "offset": m.offset}
            for lab, m in per_label.items()
        }
        for task, per_label in cfg.counts.items()
    }
    doc["moca"] = {
        name: {"HC": list(m.hc), "MCI": list(m.mci)} for name, m in cfg.moca.items()
    }
    return doc


def cmd_ingest(args) -> int:
    cohort = load_cohort(args.cohort)
    lines = ["participant\tsession\ttask\tcommands_in\tsurviving_m\tdropped"]
    for session in cohort.sessions:
        clean = preprocess(session)
        m = len(clean.commands)
        lines.append(
            f"{session.participant_id}\t{session.session_index}\t{session.task.value}"
            f"\t{len(session.commands)}\t{m}\t{len(session.commands) - m}"
        )
    sys.stdout.write("\n".join(lines) + "\n")
    sys.stdout.write(f"{len(cohort.sessions)} sessions validated\n")
    return EXIT_OK


def _feature_file(task: str, mode: str) -> str:
    return f"features_{task}_{mode}.vaef"


def _sidecar_file(task: str) -> str:
    return f"labels_{task}.json"


def cmd_features(args) -> int:
    cohort = load_cohort(args.cohort)
    anchor_path = Path(args.anchors) if args.anchors else Path(args.cohort) / "anchors.json"
    anchors = load_anchor_set(anchor_path)
    cfg_tasks = tuple(args.task) if args.task else ("reading", "generation")
    cfg_modes = tuple(args.modes) if args.modes else tuple(m.value for m in FeatureMode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    for task_name in cfg_tasks:
        sessions = [preprocess(s) for s in cohort.for_task(Task(task_name))]
        if not sessions:
            continue
        sidecar = {
            "task": task_name,
            "rows": [
                {
                    "participant_id": s.participant_id,
                    "session_index": s.session_index,
                    "label": s.label.value,
                    "moca": {
                        "total": s.moca.total,
                        **{name: s.moca.subdomain(name) for name in SUBDOMAINS},
                    },
                }
                for s in sessions
            ],
        }
        (out / _sidecar_file(task_name)).write_text(
            json.dumps(sidecar, sort_keys=True, indent=2) + "\n", "utf-8"
        )
        for mode_name in cfg_modes:
            mode = FeatureMode(mode_name)
            rows = [
                session_feature_vector(s, anchors, mode).values for s in sessions
            ]
            matrix = EmbeddingMatrix(np.asarray(rows, dtype=np.float32))
            write_embedding_path(out / _feature_file(task_name, mode_name), matrix)
            sys.stdout.write(
                f"{task_name}/{mode_name}: {matrix.rows} x {matrix.cols}\n"
            )
    return EXIT_OK


def _load_design(features_dir: Path, task: str, mode: str):
    matrix_path = features_dir / _feature_file(task, mode)
    sidecar_path = features_dir / _sidecar_file(task)
    if not matrix_path.exists() or not sidecar_path.exists():
        return None
    matrix = read_embedding_path(matrix_path)
    sidecar = json.loads(sidecar_path.read_text("utf-8"))
    rows = sidecar["rows"]
    if len(rows) != matrix.rows:
        raise ManifestError(
            f"{sidecar_path.name}: {len(rows)} rows but matrix has {matrix.rows}"
        )
    return matrix, rows


def _pool_map(jobs: int):
    if jobs <= 1:
        return None, map
    pool = ProcessPoolExecutor(max_workers=jobs)
    return pool, pool.map


def cmd_evaluate(args) -> int:
    cfg = RunConfig.load(args)
    features_dir = Path(args.features)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    positive = _encode_label(cfg.positive)
    report: dict = {
        "config": cfg.to_dict(),
        "classification": {},
        "regression": {},
    }
    pool, map_fn = _pool_map(cfg.jobs)
    try:
        for task in cfg.tasks:
            for mode in cfg.modes:
                loaded = _load_design(features_dir, task, mode)
                if loaded is None:
                    continue
                matrix, rows = loaded
                data = Dataset(
                    X=matrix.data.astype(np.float64),
                    y=np.array([_encode_label(r["label"]) for r in rows]),
                    groups=np.array([r["participant_id"] for r in rows]),
                    task=CLASSIFY,
                )
                cell_key = f"{task}/{mode}"
                report["classification"][cell_key] = {}
                for kind in cfg.models:
                    trials = nested_cv(
                        data,
                        kind,
                        grid=cfg.grid_for(kind),
                        rounds=cfg.rounds,
                        k=cfg.k,
                        inner_k=cfg.inner_k,
                        seed=cfg.seed,
                        positive=positive,
                        map_fn=map_fn,
                    )
                    agg = aggregate_report(trials)
                    agg["trials"] = [t.to_dict() for t in trials]
                    report["classification"][cell_key][kind] = agg

            reg_loaded = _load_design(features_dir, task, cfg.regression_mode)
            if reg_loaded is None:
                continue
            matrix, rows = reg_loaded
            X = matrix.data.astype(np.float64)
            groups = np.array([r["participant_id"] for r in rows])
            report["regression"][task] = {}
            for target in cfg.regression_targets:
                y = np.array([float(r["moca"][target]) for r in rows])
                data = Dataset(X=X, y=y, groups=groups, task=REGRESS)
                report["regression"][task][target] = {}
                for kind in cfg.regression_models:
                    trials = nested_cv(
                        data,
                        kind,
                        grid=cfg.grid_for(kind),
                        rounds=cfg.rounds,
                        k=cfg.k,
                        inner_k=cfg.inner_k,
                        seed=cfg.seed,
                        map_fn=map_fn,
                    )
                    agg = aggregate_report(trials)
                    agg["trials"] = [t.to_dict() for t in trials]
                    report["regression"][task][target][kind] = agg
    finally:
        if pool is not None:
            pool.shutdown()

    (out / "report.json").write_text(dumps_report(report), "utf-8")
    for task in cfg.tasks:
        for mode in cfg.modes:
            cells = report["classification"].get(f"{task}/{mode}")
            if cells:
                (out / f"classification_{task}_{mode}.tsv").write_text(
                    classification_table(cells), "utf-8"
                )
        reg = report["regression"].get(task)
        if reg:
            lines = ["target\tmodel\tmae_mean\trmse_mean\trrmse_mean"]
            for target in sorted(reg):
                for kind in sorted(reg[target]):
                    mean = reg[target][kind]["mean"]
                    rr = mean.get("rrmse")
                    lines.append(
                        f"{target}\t{kind}\t{mean['mae']:.4f}\t{mean['rmse']:.4f}"
                        f"\t{'' if rr is None else f'{rr:.4f}'}"
                    )
            (out / f"regression_{task}.tsv").write_text("\n".join(lines) + "\n", "utf-8")
    sys.stdout.write(f"report written to {out / 'report.json'}\n")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        doc = json.loads(Path(path).read_text("utf-8"))
        if "classification" not in doc:
            raise ManifestError(f"{path}: not an evaluation report")
        reports.append(doc)
    merged_class: dict = {}
    for doc in reports:
        for cell_key, models in doc["classification"].items():
            task, mode = cell_key.split("/", 1)
            for kind, agg in models.items():
                merged_class.setdefault((mode, kind), {})[task] = agg

    tasks = ("reading", "generation")
    lines = ["mode\tmodel\tmetric\treading_mean\tgeneration_mean\tdelta"]
    for (mode, kind) in sorted(merged_class):
        per_task = merged_class[(mode, kind)]
        for metric in ("accuracy", "precision", "recall", "f1"):
            vals = {
                t: per_task[t]["mean"][metric] if t in per_task else None for t in tasks
            }
            delta = (
                f"{vals['generation'] - vals['reading']:+.4f}"
                if vals["reading"] is not None and vals["generation"] is not None
                else ""
            )
            fmt = lambda v: "" if v is None else f"{v:.4f}"
            lines.append(
                f"{mode}\t{kind}\t{metric}\t{fmt(vals['reading'])}"
                f"\t{fmt(vals['generation'])}\t{delta}"
            )
    table = "\n".join(lines) + "\n"
    sys.stdout.write(table)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.tsv").write_text(table, "utf-8")
        if args.cohort:
            cohort = load_cohort(args.cohort)
            summary = summarize_cohort(cohort)
            (out / "boxplot_counts.json").write_text(
                json.dumps(summary, sort_keys=True, indent=2) + "\n", "utf-8"
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vascreen",
        description="Cognitive-screening pipeline over voice-assistant command sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic cohort")
    p_sim.add_argument("--config", help="SimConfig JSON file")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_ing = sub.add_parser("ingest", help="validate and summarize a cohort directory")
    p_ing.add_argument("--cohort", required=True)
    p_ing.set_defaults(func=cmd_ingest)

    p_feat = sub.add_parser("features", help="compute per-session feature matrices")
    p_feat.add_argument("--cohort", required=True)
    p_feat.add_argument("--anchors", help="anchor file (default: <cohort>/anchors.json)")
    p_feat.add_argument("--task", nargs="+", choices=["reading", "generation"])
    p_feat.add_argument("--modes", nargs="+", choices=[m.value for m in FeatureMode])
    p_feat.add_argument("--out", required=True)
    p_feat.set_defaults(func=cmd_features)

    p_eval = sub.add_parser("evaluate", help="nested cross-validation over feature matrices")
    p_eval.add_argument("--features", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--config", help="RunConfig JSON file")
    p_eval.add_argument("--seed", type=int, default=None)
    p_eval.add_argument("--rounds", type=int, default=None)
    p_eval.add_argument("--k", type=int, default=None)
    p_eval.add_argument("--inner-k", dest="inner_k", type=int, default=None)
    p_eval.add_argument("--task", nargs="+", choices=["reading", "generation"])
    p_eval.add_argument("--modes", nargs="+", choices=[m.value for m in FeatureMode])
    p_eval.add_argument("--models", nargs="+", choices=list(CLASSIFIER_KINDS))
    p_eval.add_argument("--positive", choices=["MCI", "HC"], default=None)
    p_eval.add_argument("--jobs", type=int, default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_rep = sub.add_parser("report", help="compare evaluation reports across tasks")
    p_rep.add_argument("reports", nargs="+", help="report.json files")
    p_rep.add_argument("--out")
    p_rep.add_argument("--cohort", help="cohort dir for command-count box data")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
