"""CART-style binary trees for classification (Gini) and regression (variance).

Splits are axis-aligned thresholds at midpoints of adjacent distinct sorted
feature values. Among exactly tied split costs, the lowest feature index and
then the lowest threshold win, which makes training fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from vascreen.learners.base import (
    CLASSIFY,
    POSITIVE,
    REGRESS,
    Dataset,
    resolve_hp,
)


@dataclass
class TreeNode:
    # leaf fields
    value: float = 0.0
    n_samples: int = 0
    # split fields (left/right set only on internal nodes)
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value, "n": self.n_samples}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        if "feature" not in doc:
            return cls(value=float(doc["value"]), n_samples=int(doc["n"]))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
        )


def _leaf(y: np.ndarray, task: str) -> TreeNode:
    if task == CLASSIFY:
        pos = int(np.sum(y == POSITIVE))
        neg = y.shape[0] - pos
        value = float(POSITIVE if pos >= neg else 1 - POSITIVE)
    else:
        value = float(np.mean(y))
    return TreeNode(value=value, n_samples=y.shape[0])


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, task: str):
    """Best (feature, threshold) over the candidate features, or None.

    Cost is the weighted child impurity; both Gini and variance reduce to
    maximizing sum(h(left) / n_left + h(right) / n_right) over boundaries,
    where h is the squared class-count norm (classification) or the squared
    label sum (regression).
    """
    n = X.shape[0]
    sub = X[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    svals = np.take_along_axis(sub, order, axis=0)
    valid = svals[1:] != svals[:-1]  # boundary between distinct values
    if not valid.any():
        return None

    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    if task == CLASSIFY:
        ysort = (y[order] == POSITIVE).astype(np.float64)
        pos_left = np.cumsum(ysort, axis=0)[:-1]
        neg_left = n_left - pos_left
        pos_total = float(np.sum(y == POSITIVE))
        pos_right = pos_total - pos_left
        neg_right = n_right - pos_right
        score = (pos_left**2 + neg_left**2) / n_left + (
            pos_right**2 + neg_right**2
        ) / n_right
    else:
        ysort = y[order]
        sum_left = np.cumsum(ysort, axis=0)[:-1]
        # accumulate the right side independently (suffix sums): subtracting
        # from the total would break exact ties between equivalent partitions
        sum_right = np.cumsum(ysort[::-1], axis=0)[::-1][1:]
        score = sum_left**2 / n_left + sum_right**2 / n_right

    score = np.where(valid, score, -np.inf)
    # first argmax = lowest boundary (ascending threshold), then lowest feature
    flat_by_feature = score.max(axis=0)
    best_f = int(np.argmax(flat_by_feature))
    if not np.isfinite(flat_by_feature[best_f]):
        return None
    best_b = int(np.argmax(score[:, best_f]))
    lo = float(svals[best_b, best_f])
    hi = float(svals[best_b + 1, best_f])
    thr = (lo + hi) / 2.0
    if thr >= hi:  # adjacent floats can round the midpoint up
        thr = lo
    return int(features[best_f]), thr


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    task: str,
    depth: int,
    max_depth: Optional[int],
    min_samples_split: int,
    rng: Optional[np.random.Generator],
    n_candidates: Optional[int],
) -> TreeNode:
    n, d = X.shape
    pure = np.all(y == y[0])
    if pure or n < min_samples_split or (max_depth is not None and depth >= max_depth):
        return _leaf(y, task)

    if n_candidates is not None and n_candidates < d:
        features = np.sort(rng.choice(d, size=n_candidates, replace=False))
    else:
        features = np.arange(d)
    split = _best_split(X, y, features, task)
    if split is None:
        return _leaf(y, task)
    feature, threshold = split
    mask = X[:, feature] <= threshold
    node = _leaf(y, task)
    node.feature = feature
    node.threshold = threshold
    node.left = _grow(
        X[mask], y[mask], task, depth + 1, max_depth, min_samples_split, rng, n_candidates
    )
    node.right = _grow(
        X[~mask], y[~mask], task, depth + 1, max_depth, min_samples_split, rng, n_candidates
    )
    return node


def _predict_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(X.shape[0], dtype=np.float64)
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.value
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


@dataclass
class DecisionTreeModel:
    kind = "dt"
    task: str
    root: TreeNode
    n_features: int
    hp: dict

    def predict(self, X: np.ndarray) -> np.ndarray:
        values = _predict_tree(self.root, X)
        if self.task == CLASSIFY:
            return values.astype(np.int64)
        return values

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "task": self.task,
            "n_features": self.n_features,
            "hp": {k: v for k, v in self.hp.items()},
            "root": self.root.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTreeModel":
        return cls(
            task=doc["task"],
            root=TreeNode.from_dict(doc["root"]),
            n_features=int(doc["n_features"]),
            hp=dict(doc["hp"]),
        )


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    task: str,
    max_depth: Optional[int],
    min_samples_split: int,
    rng: Optional[np.random.Generator] = None,
    n_candidates: Optional[int] = None,
) -> TreeNode:
    return _grow(X, y, task, 0, max_depth, min_samples_split, rng, n_candidates)


def train_decision_tree(
    data: Dataset, hp: Optional[dict] = None, task: Optional[str] = None
) -> DecisionTreeModel:
    """Grow a CART tree on the full dataset; no randomness involved."""
    task = task or data.task
    if task not in (CLASSIFY, REGRESS):
        raise ValueError(f"unknown task {task!r}")
    if data.n_samples < 1:
        raise ValueError("cannot train a tree on an empty dataset")
    params = resolve_hp("dt", hp)
    root = fit_tree(
        data.X, data.y, task, params["max_depth"], params["min_samples_split"]
    )
    return DecisionTreeModel(task=task, root=root, n_features=data.n_features, hp=params)
