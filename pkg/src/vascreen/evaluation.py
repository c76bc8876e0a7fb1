"""Nested cross-validation, metrics, and mean/best aggregation.

Outer folds are participant-grouped (every session of a participant lands in
one fold) and, for classification, label-stratified. The inner loop selects
a grid point on the outer-train portion only; the outer test fold never
influences selection. Every random choice derives from (seed, round, fold),
so results are independent of execution order or parallelism.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from vascreen.learners import (
    CLASSIFY,
    DEFAULT_GRIDS,
    POSITIVE,
    REGRESS,
    Dataset,
    predict,
    train,
)


class FoldError(ValueError):
    """Fold construction could not satisfy its preconditions."""


@dataclass(frozen=True)
class FoldPlan:
    """Disjoint index folds covering a dataset, grouped by participant."""

    n_samples: int
    folds: tuple[tuple[int, ...], ...]
    round_index: int
    seed: int

    @property
    def k(self) -> int:
        return len(self.folds)

    def validate(self, groups: Optional[np.ndarray] = None) -> None:
        seen: set[int] = set()
        for fold in self.folds:
            if not fold:
                raise FoldError("empty fold")
            overlap = seen.intersection(fold)
            if overlap:
                raise FoldError(f"folds overlap on indices {sorted(overlap)[:5]}")
            seen.update(fold)
        if seen != set(range(self.n_samples)):
            raise FoldError("folds do not cover all indices exactly")
        if groups is not None:
            owner: dict = {}
            for fi, fold in enumerate(self.folds):
                for idx in fold:
                    g = groups[idx]
                    if owner.setdefault(g, fi) != fi:
                        raise FoldError(f"participant {g!r} split across folds")

    def train_indices(self, fold_index: int) -> np.ndarray:
        test = set(self.folds[fold_index])
        return np.array(
            [i for i in range(self.n_samples) if i not in test], dtype=np.intp
        )


def _child_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def make_outer_folds(
    groups: Sequence,
    labels: Optional[Sequence] = None,
    k: int = 10,
    round_index: int = 0,
    seed: int = 0,
) -> FoldPlan:
    """Greedy grouped k-fold: largest participant first into the smallest fold.

    Label balance breaks size ties, so folds come out stratified whenever the
    group sizes leave room for it; sizes are exactly balanced whenever a
    balanced grouped packing exists for this greedy order.
    """
    groups = np.asarray(groups)
    n = groups.shape[0]
    labels_arr = None if labels is None else np.asarray(labels)
    unique, inverse = np.unique(groups, return_inverse=True)
    if unique.shape[0] < k:
        raise FoldError(f"{unique.shape[0]} participants cannot fill {k} folds")
    if k < 2:
        raise FoldError("need at least 2 folds")

    rng = np.random.default_rng(np.random.SeedSequence([seed, round_index]))
    member_idx = [np.flatnonzero(inverse == g) for g in range(unique.shape[0])]
    order = rng.permutation(unique.shape[0])
    sizes = np.array([member_idx[g].shape[0] for g in order])
    order = order[np.argsort(-sizes, kind="stable")]

    total_pos = 0.0
    if labels_arr is not None:
        total_pos = float(np.sum(labels_arr == POSITIVE))
    global_ratio = total_pos / n if n else 0.0

    fold_members: list[list[int]] = [[] for _ in range(k)]
    fold_sizes = np.zeros(k, dtype=np.int64)
    fold_pos = np.zeros(k, dtype=np.float64)
    for g in order:
        idx = member_idx[g]
        g_pos = (
            float(np.sum(labels_arr[idx] == POSITIVE)) if labels_arr is not None else 0.0
        )
        best = None
        for f in range(k):
            new_size = fold_sizes[f] + idx.shape[0]
            dev = (
                abs((fold_pos[f] + g_pos) / new_size - global_ratio)
                if labels_arr is not None
                else 0.0
            )
            cost = (new_size, dev, f)
            if best is None or cost < best[0]:
                best = (cost, f)
        f = best[1]
        fold_members[f].extend(int(i) for i in idx)
        fold_sizes[f] += idx.shape[0]
        fold_pos[f] += g_pos

    plan = FoldPlan(
        n_samples=n,
        folds=tuple(tuple(sorted(m)) for m in fold_members),
        round_index=round_index,
        seed=seed,
    )
    plan.validate(groups)
    return plan


@dataclass(frozen=True)
class ClassificationMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    METRIC_NAMES = ("accuracy", "precision", "recall", "f1")

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }


@dataclass(frozen=True)
class RegressionMetrics:
    mae: float
    rmse: float
    rrmse: Optional[float]  # percentage; absent when mean(y_true) == 0

    METRIC_NAMES = ("mae", "rmse", "rrmse")

    def to_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "rrmse": self.rrmse}


def classification_metrics(y_true, y_pred, positive: int = POSITIVE) -> ClassificationMetrics:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D and the same length")
    if y_true.shape[0] < 1:
        raise ValueError("metrics need at least one prediction")
    tp = int(np.sum((y_pred == positive) & (y_true == positive)))
    fp = int(np.sum((y_pred == positive) & (y_true != positive)))
    fn = int(np.sum((y_pred != positive) & (y_true == positive)))
    tn = int(np.sum((y_pred != positive) & (y_true != positive)))
    n = y_true.shape[0]
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ClassificationMetrics(
        accuracy=(tp + tn) / n,
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
    )


def regression_metrics(y_true, y_pred) -> RegressionMetrics:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D and the same length")
    if y_true.shape[0] < 1:
        raise ValueError("metrics need at least one prediction")
    err = y_pred - y_true
    mae = float(np.mean(np.abs(err)))
    rmse = float(math.sqrt(np.mean(err**2)))
    mean_true = float(np.mean(y_true))
    rrmse = None if mean_true == 0.0 else 100.0 * rmse / mean_true
    return RegressionMetrics(mae=mae, rmse=rmse, rrmse=rrmse)


@dataclass(frozen=True)
class TrialResult:
    round_index: int
    fold_index: int
    hp: dict
    metrics: ClassificationMetrics | RegressionMetrics
    n_test: int
    inner_global_indices: Optional[tuple[tuple[int, ...], ...]] = None

    def to_dict(self) -> dict:
        return {
            "round": self.round_index,
            "fold": self.fold_index,
            "hp": self.hp,
            "n_test": self.n_test,
            "metrics": self.metrics.to_dict(),
        }


def _inner_score(task: str, y_true, y_pred) -> float:
    if task == CLASSIFY:
        return classification_metrics(y_true, y_pred).accuracy
    return regression_metrics(y_true, y_pred).rmse


def _run_trial(args) -> TrialResult:
    (
        dataset,
        model_kind,
        grid,
        r,
        f,
        k,
        inner_k,
        seed,
        positive,
        record_inner,
    ) = args
    labels = dataset.y if dataset.task == CLASSIFY else None
    plan = make_outer_folds(dataset.groups, labels, k=k, round_index=r, seed=seed)
    test_idx = np.asarray(plan.folds[f], dtype=np.intp)
    train_idx = plan.train_indices(f)
    outer_train = dataset.subset(train_idx)

    inner_labels = outer_train.y if dataset.task == CLASSIFY else None
    inner_plan = make_outer_folds(
        outer_train.groups,
        inner_labels,
        k=inner_k,
        round_index=_child_seed(seed, r, f, 1) % (2**31),
        seed=seed,
    )
    inner_global = tuple(
        tuple(int(train_idx[i]) for i in fold) for fold in inner_plan.folds
    )

    best_gi = 0
    best_score = None
    for gi, hp in enumerate(grid):
        scores = []
        for vf in range(inner_plan.k):
            val_idx = np.asarray(inner_plan.folds[vf], dtype=np.intp)
            fit_idx = inner_plan.train_indices(vf)
            model = train(
                model_kind,
                outer_train.subset(fit_idx),
                hp,
                seed=_child_seed(seed, r, f, 2, gi, vf),
            )
            pred = predict(model, outer_train.X[val_idx])
            scores.append(_inner_score(dataset.task, outer_train.y[val_idx], pred))
        mean_score = float(np.mean(scores))
        if best_score is None:
            better = True
        elif dataset.task == CLASSIFY:
            better = mean_score > best_score
        else:
            better = mean_score < best_score
        if better:
            best_score = mean_score
            best_gi = gi

    final = train(
        model_kind, outer_train, grid[best_gi], seed=_child_seed(seed, r, f, 3)
    )
    pred = predict(final, dataset.X[test_idx])
    if dataset.task == CLASSIFY:
        metrics = classification_metrics(dataset.y[test_idx], pred, positive=positive)
    else:
        metrics = regression_metrics(dataset.y[test_idx], pred)
    return TrialResult(
        round_index=r,
        fold_index=f,
        hp=dict(grid[best_gi]),
        metrics=metrics,
        n_test=int(test_idx.shape[0]),
        inner_global_indices=inner_global if record_inner else None,
    )


def nested_cv(
    dataset: Dataset,
    model_kind: str,
    grid: Optional[list[dict]] = None,
    rounds: int = 10,
    k: int = 10,
    inner_k: int = 5,
    seed: int = 0,
    positive: int = POSITIVE,
    map_fn: Callable = map,
    record_inner: bool = False,
) -> list[TrialResult]:
    """rounds x k outer trials, each with an inner grid search on its train split.

    ``map_fn`` lets the caller supply a parallel map; results are assembled
    in (round, fold) order regardless of scheduling.
    """
    if grid is None:
        grid = DEFAULT_GRIDS[model_kind]
    if not grid:
        raise ValueError("hyperparameter grid must be non-empty")
    tasks = [
        (dataset, model_kind, grid, r, f, k, inner_k, seed, positive, record_inner)
        for r in range(rounds)
        for f in range(k)
    ]
    return list(map_fn(_run_trial, tasks))


def aggregate_report(trials: Sequence[TrialResult]) -> dict:
    """Mean and best of each metric over the trials.

    Best is the maximum for classification metrics and the minimum for
    regression errors, taken over single trials.
    """
    if not trials:
        raise ValueError("cannot aggregate zero trials")
    first = trials[0].metrics
    out: dict = {"n_trials": len(trials), "mean": {}, "best": {}}
    if isinstance(first, ClassificationMetrics):
        for name in ClassificationMetrics.METRIC_NAMES:
            values = [getattr(t.metrics, name) for t in trials]
            out["mean"][name] = float(np.mean(values))
            out["best"][name] = float(np.max(values))
    else:
        for name in RegressionMetrics.METRIC_NAMES:
            values = [getattr(t.metrics, name) for t in trials]
            present = [v for v in values if v is not None]
            if not present:
                out["mean"][name] = None
                out["best"][name] = None
            else:
                out["mean"][name] = float(np.mean(present))
                out["best"][name] = float(np.min(present))
    return out


def dumps_report(report: dict) -> str:
    """Canonical JSON for report files; identical input gives identical bytes."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(path: Path | str, report: dict) -> None:
    Path(path).write_text(dumps_report(report), "utf-8")


def classification_table(cells: dict[str, dict], metric_names=ClassificationMetrics.METRIC_NAMES) -> str:
    """Delimited mean/best table; rows are model kinds (or feature modes)."""
    header = ["row"]
    for name in metric_names:
        header += [f"{name}_mean", f"{name}_best"]
    lines = ["\t".join(header)]
    for row_name in sorted(cells):
        agg = cells[row_name]
        cols = [row_name]
        for name in metric_names:
            mean = agg["mean"].get(name)
            best = agg["best"].get(name)
            cols.append("" if mean is None else f"{mean:.4f}")
            cols.append("" if best is None else f"{best:.4f}")
        lines.append("\t".join(cols))
    return "\n".join(lines) + "\n"
