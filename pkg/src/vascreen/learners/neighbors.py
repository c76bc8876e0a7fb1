"""k-nearest-neighbour classification over standardized features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from vascreen.learners.base import CLASSIFY, POSITIVE, Dataset, Standardizer, resolve_hp


@dataclass
class KnnModel:
    kind = "knn"
    task: str
    X: np.ndarray  # standardized training features
    y: np.ndarray
    k: int
    scaler: Standardizer

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def predict(self, X: np.ndarray) -> np.ndarray:
        Z = self.scaler.transform(X)
        out = np.empty(Z.shape[0], dtype=np.int64)
        for i, z in enumerate(Z):
            d2 = np.sum((self.X - z) ** 2, axis=1)
            # stable sort: equal distances resolve to the lower training index
            neighbours = np.argsort(d2, kind="stable")[: self.k]
            pos = int(np.sum(self.y[neighbours] == POSITIVE))
            out[i] = POSITIVE if 2 * pos >= self.k else 1 - POSITIVE
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "task": self.task,
            "k": self.k,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "scaler": self.scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "KnnModel":
        return cls(
            task=doc["task"],
            X=np.asarray(doc["X"], dtype=np.float64),
            y=np.asarray(doc["y"], dtype=np.float64),
            k=int(doc["k"]),
            scaler=Standardizer.from_dict(doc["scaler"]),
        )


def train_knn(data: Dataset, hp: Optional[dict] = None) -> KnnModel:
    """Store the standardized training set; all work happens at predict time."""
    if data.task != CLASSIFY:
        raise ValueError("knn is a classifier here")
    params = resolve_hp("knn", hp)
    k = params["k"]
    if k > data.n_samples:
        raise ValueError(f"k={k} exceeds the {data.n_samples} training samples")
    scaler = Standardizer.fit(data.X)
    return KnnModel(
        task=CLASSIFY, X=scaler.transform(data.X), y=data.y.copy(), k=k, scaler=scaler
    )
