from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

RIDGE_FACTOR = 1e-6
_COND_LIMIT = 1e12


class LDAClassifier:
    """Two-class linear discriminant with a pooled covariance.

    ``score`` is the posterior probability of the genuine class. Priors are the
    training class frequencies unless ``priors="equal"``. A singular pooled
    covariance gets ``lambda * I`` added, ``lambda = 1e-6 * trace / d``.
    """

    kind = "lda"

    def __init__(self, priors: str = "empirical"):
        if priors not in ("empirical", "equal"):
            raise ValueError("priors must be 'empirical' or 'equal'")
        self.priors = priors
        self.coef = None
        self.intercept = None
        self.regularized = False

    def fit(self, X, y) -> "LDAClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        g, i = X[y == 1], X[y == 0]
        if len(g) == 0 or len(i) == 0:
            raise ValueError("LDA needs both classes")
        mu1, mu0 = g.mean(axis=0), i.mean(axis=0)
        d = X.shape[1]
        scatter = (g - mu1).T @ (g - mu1) + (i - mu0).T @ (i - mu0)
        dof = max(len(X) - 2, 1)
        cov = scatter / dof
        self.regularized = bool(np.linalg.cond(cov) > _COND_LIMIT) if d else False
        if self.regularized:
            lam = RIDGE_FACTOR * np.trace(cov) / d
            cov = cov + (lam if lam > 0 else RIDGE_FACTOR) * np.eye(d)
        w = np.linalg.solve(cov, mu1 - mu0)
        if self.priors == "equal":
            log_prior = 0.0
        else:
            log_prior = math.log(len(g) / len(i))
        self.coef = w
        self.intercept = float(-0.5 * (mu1 + mu0) @ w + log_prior)
        return self

    def decision_function(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        return Q @ self.coef + self.intercept

    def score(self, Q) -> np.ndarray:
        return expit(self.decision_function(Q))

    def get_params(self) -> dict:
        return {
            "priors": self.priors,
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "regularized": self.regularized,
        }

    @classmethod
    def from_params(cls, p: dict) -> "LDAClassifier":
        m = cls(p["priors"])
        m.coef = np.array(p["coef"], dtype=np.float64)
        m.intercept = float(p["intercept"])
        m.regularized = bool(p["regularized"])
        return m
