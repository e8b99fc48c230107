"""One-hidden-layer sigmoid perceptron trained on squared error with momentum."""

from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True)
def _sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@numba.njit(cache=True)
def _train(X, y, W1, b1, W2, b2, perms, batch_size, lr, momentum):
    n, d = X.shape
    h = W1.shape[0]
    vW1 = np.zeros_like(W1)
    vb1 = np.zeros_like(b1)
    vW2 = np.zeros_like(W2)
    vb2 = 0.0
    gW1 = np.zeros_like(W1)
    gb1 = np.zeros_like(b1)
    gW2 = np.zeros_like(W2)
    hid = np.zeros(h)
    for epoch in range(perms.shape[0]):
        for start in range(0, n, batch_size):
            stop = min(start + batch_size, n)
            gW1[:, :] = 0.0
            gb1[:] = 0.0
            gW2[:] = 0.0
            gb2 = 0.0
            for s in range(start, stop):
                r = perms[epoch, s]
                z2 = b2
                for j in range(h):
                    z = b1[j]
                    for c in range(d):
                        z += W1[j, c] * X[r, c]
                    hid[j] = _sigmoid(z)
                    z2 += W2[j] * hid[j]
                out = _sigmoid(z2)
                delta_out = (out - y[r]) * out * (1.0 - out)
                for j in range(h):
                    delta_h = delta_out * W2[j] * hid[j] * (1.0 - hid[j])
                    gW2[j] += delta_out * hid[j]
                    gb1[j] += delta_h
                    for c in range(d):
                        gW1[j, c] += delta_h * X[r, c]
                gb2 += delta_out
            m = stop - start
            for j in range(h):
                vW2[j] = momentum * vW2[j] - lr * gW2[j] / m
                W2[j] += vW2[j]
                vb1[j] = momentum * vb1[j] - lr * gb1[j] / m
                b1[j] += vb1[j]
                for c in range(d):
                    vW1[j, c] = momentum * vW1[j, c] - lr * gW1[j, c] / m
                    W1[j, c] += vW1[j, c]
            vb2 = momentum * vb2 - lr * gb2 / m
            b2 += vb2
    return b2


@numba.njit(cache=True)
def _forward(X, W1, b1, W2, b2, out):
    h = W1.shape[0]
    for r in range(X.shape[0]):
        z2 = b2
        for j in range(h):
            z = b1[j]
            for c in range(X.shape[1]):
                z += W1[j, c] * X[r, c]
            z2 += W2[j] * _sigmoid(z)
        out[r] = _sigmoid(z2)


class MLPClassifier:
    """``d -> hidden sigmoid units -> 1 sigmoid output``.

    Trained by mini-batch gradient descent on ``0.5 * (out - y)^2`` with
    momentum; ``batch_size=1`` gives per-instance updates. Weights start
    uniform in [-0.05, 0.05].
    """

    kind = "mlp"

    def __init__(
        self,
        hidden: int = 5,
        learning_rate: float = 0.3,
        momentum: float = 0.2,
        epochs: int = 500,
        batch_size: int = 1,
        seed: int = 0,
    ):
        if hidden < 1 or epochs < 1 or batch_size < 1:
            raise ValueError("hidden, epochs and batch_size must be >= 1")
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.W1 = self.b1 = self.W2 = None
        self.b2 = 0.0

    def fit(self, X, y) -> "MLPClassifier":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        n, d = X.shape
        rng = np.random.default_rng(self.seed)
        self.W1 = rng.uniform(-0.05, 0.05, size=(self.hidden, d))
        self.b1 = rng.uniform(-0.05, 0.05, size=self.hidden)
        self.W2 = rng.uniform(-0.05, 0.05, size=self.hidden)
        b2 = float(rng.uniform(-0.05, 0.05))
        perms = np.vstack([rng.permutation(n) for _ in range(self.epochs)])
        self.b2 = float(
            _train(X, y, self.W1, self.b1, self.W2, b2, perms,
                   self.batch_size, self.learning_rate, self.momentum)
        )
        return self

    def score(self, Q) -> np.ndarray:
        Q = np.ascontiguousarray(np.atleast_2d(Q), dtype=np.float64)
        out = np.empty(Q.shape[0])
        _forward(Q, self.W1, self.b1, self.W2, self.b2, out)
        return out

    def get_params(self) -> dict:
        return {
            "hidden": self.hidden,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2,
        }

    @classmethod
    def from_params(cls, p: dict) -> "MLPClassifier":
        m = cls(p["hidden"], p["learning_rate"], p["momentum"], p["epochs"], p["batch_size"], p["seed"])
        m.W1 = np.array(p["W1"], dtype=np.float64).reshape(p["hidden"], -1)
        m.b1 = np.array(p["b1"], dtype=np.float64)
        m.W2 = np.array(p["W2"], dtype=np.float64)
        m.b2 = float(p["b2"])
        return m
