"""From-scratch classical learners with deterministic, seedable training."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from vascreen.learners.base import (
    CLASSIFIER_KINDS,
    CLASSIFY,
    DEFAULT_GRIDS,
    DEFAULT_HP,
    NEGATIVE,
    POSITIVE,
    REGRESS,
    REGRESSOR_KINDS,
    Dataset,
    SingleClassError,
    Standardizer,
    resolve_hp,
)
from vascreen.learners.forest import RandomForestModel, train_random_forest
from vascreen.learners.linear import (
    LinearModel,
    svm_primal_objective,
    svr_primal_objective,
    train_linear_svm,
    train_ridge,
    train_svr,
)
from vascreen.learners.neighbors import KnnModel, train_knn
from vascreen.learners.tree import DecisionTreeModel, train_decision_tree

__all__ = [
    "CLASSIFIER_KINDS",
    "CLASSIFY",
    "DEFAULT_GRIDS",
    "DEFAULT_HP",
    "Dataset",
    "DecisionTreeModel",
    "KnnModel",
    "LinearModel",
    "NEGATIVE",
    "POSITIVE",
    "REGRESS",
    "REGRESSOR_KINDS",
    "RandomForestModel",
    "SingleClassError",
    "Standardizer",
    "load_model",
    "predict",
    "resolve_hp",
    "save_model",
    "svm_primal_objective",
    "svr_primal_objective",
    "train",
    "train_decision_tree",
    "train_knn",
    "train_linear_svm",
    "train_random_forest",
    "train_ridge",
    "train_svr",
]


def train(kind: str, data: Dataset, hp: Optional[dict] = None, seed: int = 0):
    """Train any model kind through one seedable entry point."""
    if kind == "dt":
        return train_decision_tree(data, hp)
    if kind == "rf":
        return train_random_forest(data, hp, seed)
    if kind == "knn":
        return train_knn(data, hp)
    if kind == "svm":
        return train_linear_svm(data, hp, seed)
    if kind == "ridge":
        return train_ridge(data, hp)
    if kind == "svr":
        return train_svr(data, hp, seed)
    raise ValueError(f"unknown model kind {kind!r}")


def predict(model, X) -> np.ndarray:
    """Predict with any trained model, after a dimensionality check."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"model expects {model.n_features} features, got {X.shape[1]}"
        )
    return model.predict(X)


_MODEL_CLASSES = {
    "dt": DecisionTreeModel,
    "rf": RandomForestModel,
    "knn": KnnModel,
    "svm": LinearModel,
    "svr": LinearModel,
    "ridge": LinearModel,
}


def model_to_dict(model) -> dict:
    return model.to_dict()


def model_from_dict(doc: dict):
    kind = doc.get("kind")
    if kind not in _MODEL_CLASSES:
        raise ValueError(f"unknown model kind {kind!r} in model file")
    return _MODEL_CLASSES[kind].from_dict(doc)


def save_model(path: Path | str, model) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n", "utf-8"
    )


def load_model(path: Path | str):
    return model_from_dict(json.loads(Path(path).read_text("utf-8")))
