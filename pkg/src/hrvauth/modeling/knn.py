from __future__ import annotations

import numpy as np


class KNNClassifier:
    """Majority-fraction kNN; the score is the share of genuine labels among
    the ``k`` nearest training rows (Euclidean). Distance ties go to the
    lower training-row index."""

    kind = "knn"

    def __init__(self, k: int = 3):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.X = None
        self.y = None

    def fit(self, X, y) -> "KNNClassifier":
        self.X = np.array(X, dtype=np.float64)
        self.y = np.array(y, dtype=np.int64)
        return self

    def neighbors(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        d2 = ((Q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        k = min(self.k, len(self.X))
        return np.argsort(d2, axis=1, kind="stable")[:, :k]

    def score(self, Q) -> np.ndarray:
        return self.y[self.neighbors(Q)].mean(axis=1)

    def get_params(self) -> dict:
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_params(cls, p: dict) -> "KNNClassifier":
        m = cls(int(p["k"]))
        n_cols = len(p["X"][0]) if p["X"] else 0
        m.X = np.array(p["X"], dtype=np.float64).reshape(-1, n_cols)
        m.y = np.array(p["y"], dtype=np.int64)
        return m
