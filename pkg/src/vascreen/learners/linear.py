"""Linear margin models (hinge SVM, epsilon-insensitive SVR) and ridge.

The SVM and SVR both reduce to the box-constrained quadratic dual

    min  0.5 a' Q a + p' a    s.t.  sum_i s_i a_i = 0,  0 <= a_i <= C

with Q_ij = s_i s_j x_i . x_j, solved by pairwise coordinate updates on the
maximal violating pair. For the SVR the 2m mirrored samples (s = +1 block,
s = -1 block) carry the two sides of the insensitivity tube, so one solver
serves both models. Selection uses first-occurrence argmax/argmin and the
step is an exact 1-D minimization, which makes training deterministic and
the recorded dual objective non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from vascreen.learners.base import (
    CLASSIFY,
    NEGATIVE,
    POSITIVE,
    REGRESS,
    Dataset,
    SingleClassError,
    Standardizer,
    resolve_hp,
)


@dataclass
class SmoResult:
    alpha: np.ndarray
    w: np.ndarray
    b: float
    converged: bool
    n_iter: int
    objective_history: list[float] = field(default_factory=list)


def _solve_smo(
    X: np.ndarray,
    s: np.ndarray,
    p: np.ndarray,
    C: float,
    tol: float,
    max_iter: int,
) -> SmoResult:
    L, d = X.shape
    alpha = np.zeros(L)
    g = p.copy()  # gradient of the dual objective, Q a + p
    w = np.zeros(d)
    sq = np.einsum("ij,ij->i", X, X)
    history: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        crit = -s * g
        up = ((s > 0) & (alpha < C)) | ((s < 0) & (alpha > 0))
        low = ((s > 0) & (alpha > 0)) | ((s < 0) & (alpha < C))
        history.append(0.5 * float(alpha @ (g + p)))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, crit, -np.inf)))
        j = int(np.argmin(np.where(low, crit, np.inf)))
        gap = crit[i] - crit[j]
        if gap <= tol:
            converged = True
            break
        xi = X[i]
        xj = X[j]
        curv = sq[i] + sq[j] - 2.0 * float(xi @ xj)
        if curv <= 0.0:
            curv = 1e-12
        bound_i = (C - alpha[i]) if s[i] > 0 else alpha[i]
        bound_j = alpha[j] if s[j] > 0 else (C - alpha[j])
        delta = min(gap / curv, bound_i, bound_j)
        if delta <= 0.0:
            converged = True
            break
        alpha[i] = min(max(alpha[i] + s[i] * delta, 0.0), C)
        alpha[j] = min(max(alpha[j] - s[j] * delta, 0.0), C)
        diff = xi - xj
        g += delta * s * (X @ diff)
        w += delta * diff

    crit = -s * g
    up = ((s > 0) & (alpha < C)) | ((s < 0) & (alpha > 0))
    low = ((s > 0) & (alpha > 0)) | ((s < 0) & (alpha < C))
    if up.any() and low.any():
        b = 0.5 * (float(np.max(crit[up])) + float(np.min(crit[low])))
    elif up.any():
        b = float(np.max(crit[up]))
    elif low.any():
        b = float(np.min(crit[low]))
    else:
        b = 0.0
    return SmoResult(
        alpha=alpha, w=w, b=b, converged=converged, n_iter=it, objective_history=history
    )


@dataclass
class LinearModel:
    """Weight vector plus intercept over standardized features."""

    kind: str  # "svm" | "svr" | "ridge"
    task: str
    w: np.ndarray
    b: float
    scaler: Standardizer
    hp: dict
    seed: int = 0
    converged: bool = True
    n_iter: int = 0
    objective_history: list[float] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return self.w.shape[0]

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        return self.scaler.transform(X) @ self.w + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        scores = self.decision_values(X)
        if self.task == CLASSIFY:
            return np.where(scores >= 0.0, POSITIVE, NEGATIVE).astype(np.int64)
        return scores

    def raw_coefficients(self) -> tuple[np.ndarray, float]:
        """Equivalent (w, b) in the original feature space."""
        w_raw = self.w / self.scaler.scale
        b_raw = self.b - float(np.sum(self.w * self.scaler.mean / self.scaler.scale))
        return w_raw, b_raw

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "task": self.task,
            "w": self.w.tolist(),
            "b": self.b,
            "scaler": self.scaler.to_dict(),
            "hp": {k: v for k, v in self.hp.items()},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearModel":
        return cls(
            kind=doc["kind"],
            task=doc["task"],
            w=np.asarray(doc["w"], dtype=np.float64),
            b=float(doc["b"]),
            scaler=Standardizer.from_dict(doc["scaler"]),
            hp=dict(doc["hp"]),
            seed=int(doc["seed"]),
        )


def svm_primal_objective(Z: np.ndarray, y_signed: np.ndarray, C: float, w, b) -> float:
    margins = y_signed * (Z @ w + b)
    return 0.5 * float(w @ w) + C * float(np.sum(np.maximum(0.0, 1.0 - margins)))


def svr_primal_objective(Z: np.ndarray, y: np.ndarray, C: float, eps: float, w, b) -> float:
    residuals = np.abs(y - (Z @ w + b))
    return 0.5 * float(w @ w) + C * float(np.sum(np.maximum(0.0, residuals - eps)))


def train_linear_svm(data: Dataset, hp: Optional[dict] = None, seed: int = 0) -> LinearModel:
    """Hinge-loss linear classifier on standardized features."""
    if data.task != CLASSIFY:
        raise ValueError("svm here is a classifier; use svr for regression")
    if data.n_samples < 2:
        raise ValueError("svm needs at least two samples")
    classes = np.unique(data.y)
    if classes.size < 2:
        raise SingleClassError("svm needs both classes present")
    params = resolve_hp("svm", hp)
    scaler = Standardizer.fit(data.X)
    Z = scaler.transform(data.X)
    y_signed = np.where(data.y == POSITIVE, 1.0, -1.0)
    result = _solve_smo(
        Z,
        y_signed,
        -np.ones(data.n_samples),
        params["C"],
        params["tol"],
        params["max_iter"],
    )
    return LinearModel(
        kind="svm",
        task=CLASSIFY,
        w=result.w,
        b=result.b,
        scaler=scaler,
        hp=params,
        seed=seed,
        converged=result.converged,
        n_iter=result.n_iter,
        objective_history=result.objective_history,
    )


def train_svr(data: Dataset, hp: Optional[dict] = None, seed: int = 0) -> LinearModel:
    """Epsilon-insensitive linear regression on standardized features."""
    if data.task != REGRESS:
        raise ValueError("svr is a regressor")
    if data.n_samples < 2:
        raise ValueError("svr needs at least two samples")
    params = resolve_hp("svr", hp)
    scaler = Standardizer.fit(data.X)
    Z = scaler.transform(data.X)
    n = data.n_samples
    X2 = np.vstack([Z, Z])
    s = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([params["eps"] - data.y, params["eps"] + data.y])
    result = _solve_smo(X2, s, p, params["C"], params["tol"], params["max_iter"])
    return LinearModel(
        kind="svr",
        task=REGRESS,
        w=result.w,
        b=result.b,
        scaler=scaler,
        hp=params,
        seed=seed,
        converged=result.converged,
        n_iter=result.n_iter,
        objective_history=result.objective_history,
    )


def train_ridge(data: Dataset, hp: Optional[dict] = None) -> LinearModel:
    """Closed-form ridge on standardized features and centered targets."""
    if data.task != REGRESS:
        raise ValueError("ridge is a regressor")
    if data.n_samples < 1:
        raise ValueError("ridge needs at least one sample")
    params = resolve_hp("ridge", hp)
    lam = float(params["lam"])
    scaler = Standardizer.fit(data.X)
    Z = scaler.transform(data.X)
    y_mean = float(np.mean(data.y))
    y_c = data.y - y_mean
    d = Z.shape[1]
    if lam > 0.0:
        w = np.linalg.solve(Z.T @ Z + lam * np.eye(d), Z.T @ y_c)
    else:
        w, *_ = np.linalg.lstsq(Z, y_c, rcond=None)
    return LinearModel(
        kind="ridge",
        task=REGRESS,
        w=w,
        b=y_mean,
        scaler=scaler,
        hp=params,
    )
