"""Shared learner plumbing: datasets, standardization, hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

CLASSIFY = "classify"
REGRESS = "regress"

# Encoded class labels. The impaired class is positive and wins vote ties.
POSITIVE = 1
NEGATIVE = 0


class SingleClassError(ValueError):
    """Margin-based training needs both classes present."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix, targets, and the participant each row belongs to."""

    X: np.ndarray
    y: np.ndarray
    groups: np.ndarray
    task: str = CLASSIFY

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        groups = np.asarray(self.groups)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],) or groups.shape != (X.shape[0],):
            raise ValueError("X, y, and groups must agree on the sample count")
        if not np.isfinite(X).all() or not np.isfinite(y).all():
            raise ValueError("dataset contains non-finite values")
        if self.task not in (CLASSIFY, REGRESS):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == CLASSIFY and not np.isin(y, (NEGATIVE, POSITIVE)).all():
            raise ValueError("classification targets must be 0 or 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "groups", groups)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.X[idx], self.y[idx], self.groups[idx], self.task)


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature z-scoring; constant features map to exactly 0."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Standardizer":
        return cls(
            mean=np.asarray(doc["mean"], dtype=np.float64),
            scale=np.asarray(doc["scale"], dtype=np.float64),
        )


# Frozen hyperparameter defaults per model kind.
DEFAULT_HP: dict[str, dict] = {
    "dt": {"max_depth": None, "min_samples_split": 2},
    "rf": {
        "n_trees": 100,
        "max_depth": None,
        "min_samples_split": 2,
        "feat_subsample": None,  # None -> ceil(sqrt(d))
        "bootstrap": True,
    },
    "knn": {"k": 5},
    "svm": {"C": 1.0, "tol": 1e-4, "max_iter": 10000},
    "ridge": {"lam": 1.0},
    "svr": {"C": 1.0, "eps": 0.1, "tol": 1e-4, "max_iter": 10000},
}

# Inner-CV search grids, in declared order (ties pick the first point).
DEFAULT_GRIDS: dict[str, list[dict]] = {
    "dt": [{"max_depth": d} for d in (3, 5, 10, None)],
    "rf": [{"max_depth": d} for d in (3, 5, 10, None)],
    "knn": [{"k": k} for k in (3, 5, 7, 9)],
    "svm": [{"C": c} for c in (0.01, 0.1, 1.0, 10.0)],
    "ridge": [{"lam": v} for v in (0.01, 0.1, 1.0, 10.0)],
    "svr": [{"C": c} for c in (0.01, 0.1, 1.0, 10.0)],
}

CLASSIFIER_KINDS = ("dt", "svm", "knn", "rf")
REGRESSOR_KINDS = ("ridge", "dt", "svr")


def resolve_hp(kind: str, hp: Optional[dict]) -> dict:
    """Merge overrides onto the frozen defaults, rejecting unknown keys."""
    if kind not in DEFAULT_HP:
        raise ValueError(f"unknown model kind {kind!r}")
    merged = dict(DEFAULT_HP[kind])
    for key, value in (hp or {}).items():
        if key not in merged:
            raise ValueError(f"{kind}: unknown hyperparameter {key!r}")
        merged[key] = value
    _validate_hp(kind, merged)
    return merged


def _validate_hp(kind: str, hp: dict) -> None:
    def positive(name):
        if not hp[name] > 0:
            raise ValueError(f"{kind}: {name} must be positive, got {hp[name]}")

    if "max_depth" in hp and hp["max_depth"] is not None and hp["max_depth"] < 1:
        raise ValueError(f"{kind}: max_depth must be None or >= 1")
    if "min_samples_split" in hp and hp["min_samples_split"] < 2:
        raise ValueError(f"{kind}: min_samples_split must be >= 2")
    if kind == "rf":
        positive("n_trees")
        fs = hp["feat_subsample"]
        if fs is not None and fs < 1:
            raise ValueError("rf: feat_subsample must be None or >= 1")
    if kind == "knn" and hp["k"] < 1:
        raise ValueError("knn: k must be >= 1")
    if kind in ("svm", "svr"):
        positive("C")
        positive("tol")
        positive("max_iter")
    if kind == "svr" and hp["eps"] < 0:
        raise ValueError(f"svr: eps must be nonnegative, got {hp['eps']}")
    if kind == "ridge" and hp["lam"] < 0:
        raise ValueError(f"ridge: lam must be nonnegative, got {hp['lam']}")
