"""Bagged CART ensemble with per-split feature subsampling.

Each tree gets its own generator spawned from the master seed, so forests
are reproducible and independent of any training parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from vascreen.learners.base import CLASSIFY, POSITIVE, Dataset, resolve_hp
from vascreen.learners.tree import TreeNode, _predict_tree, fit_tree


@dataclass
class RandomForestModel:
    kind = "rf"
    task: str
    trees: list[TreeNode]
    n_features: int
    hp: dict
    seed: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for root in self.trees:
            votes += _predict_tree(root, X).astype(np.int64)
        # positive wins exact vote ties
        majority = votes * 2 >= len(self.trees)
        return np.where(majority, POSITIVE, 1 - POSITIVE).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "task": self.task,
            "n_features": self.n_features,
            "hp": {k: v for k, v in self.hp.items()},
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RandomForestModel":
        return cls(
            task=doc["task"],
            trees=[TreeNode.from_dict(t) for t in doc["trees"]],
            n_features=int(doc["n_features"]),
            hp=dict(doc["hp"]),
            seed=int(doc["seed"]),
        )


def train_random_forest(
    data: Dataset, hp: Optional[dict] = None, seed: int = 0
) -> RandomForestModel:
    """Bootstrap-sampled trees voting by majority (ties go to the positive class)."""
    if data.task != CLASSIFY:
        raise ValueError("random forest is a classifier here; use dt for regression")
    if data.n_samples < 1:
        raise ValueError("cannot train a forest on an empty dataset")
    params = resolve_hp("rf", hp)
    n, d = data.X.shape
    n_candidates = params["feat_subsample"]
    if n_candidates is None:
        n_candidates = math.isqrt(d)
        if n_candidates * n_candidates < d:
            n_candidates += 1  # ceil(sqrt(d))
    n_candidates = min(n_candidates, d)

    children = np.random.SeedSequence(seed).spawn(params["n_trees"])
    trees = []
    for child in children:
        rng = np.random.default_rng(child)
        if params["bootstrap"]:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        trees.append(
            fit_tree(
                data.X[idx],
                data.y[idx],
                CLASSIFY,
                params["max_depth"],
                params["min_samples_split"],
                rng=rng,
                n_candidates=n_candidates,
            )
        )
    return RandomForestModel(
        task=CLASSIFY,
        trees=trees,
        n_features=d,
        hp=params,
        seed=seed,
    )
