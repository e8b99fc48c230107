"""Standardised PCA retaining the fewest components that reach a variance target."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

# absorbs round-off when the target is 1.0 and the spectrum sums to 1 - eps
_CUMULATIVE_SLACK = 1e-12


class ConstantFeatureWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class PCAModel:
    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray  # (k, d), rows orthonormal
    explained_variance_ratio: np.ndarray  # (d,), descending
    threshold: float

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]

    def transform(self, X) -> np.ndarray:
        return transform(self, X)

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "components": self.components.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PCAModel":
        n = len(d["mean"])
        return cls(
            np.array(d["mean"], dtype=np.float64),
            np.array(d["scale"], dtype=np.float64),
            np.array(d["components"], dtype=np.float64).reshape(-1, n),
            np.array(d["explained_variance_ratio"], dtype=np.float64),
            float(d["threshold"]),
        )


def fit_pca(train_rows, variance_threshold: float = 0.9) -> PCAModel:
    """Fit on training rows only.

    Columns are standardised with the training mean and sample standard
    deviation; a zero-variance column keeps scale 1 (with a warning) and
    therefore contributes nothing to the covariance.
    """
    X = np.asarray(train_rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("fit_pca needs a 2-D array with at least 2 rows")
    if not 0.0 < variance_threshold <= 1.0:
        raise ValueError("variance_threshold must be in (0, 1]")
    # identical values count as constant even though the float mean of repeated
    # 4.2 leaves ~1e-16 of std; so does a spread whose std underflows to 0
    scale = X.std(axis=0, ddof=1)
    identical = np.all(X == X[0], axis=0)
    constant = identical | ~(scale > 0)
    mean = np.where(identical, X[0], X.mean(axis=0))
    if constant.any():
        warnings.warn(
            f"zero-variance feature column(s) {np.flatnonzero(constant).tolist()}; scale set to 1",
            ConstantFeatureWarning,
            stacklevel=2,
        )
        scale = np.where(constant, 1.0, scale)
    Z = (X - mean) / scale
    cov = Z.T @ Z / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order].T
    # deterministic sign: largest-magnitude loading positive
    flip = evecs[np.arange(len(evecs)), np.argmax(np.abs(evecs), axis=1)] < 0
    evecs[flip] *= -1.0
    total = evals.sum()
    if total == 0:
        ratio = np.zeros_like(evals)
        k = 1
    else:
        ratio = evals / total
        k = int(np.searchsorted(np.cumsum(ratio), variance_threshold - _CUMULATIVE_SLACK) + 1)
        k = min(k, len(ratio))
    return PCAModel(mean, scale, np.ascontiguousarray(evecs[:k]), ratio, float(variance_threshold))


def transform(pca: PCAModel, row) -> np.ndarray:
    """Standardise then project; accepts one row or a 2-D batch."""
    X = np.asarray(row, dtype=np.float64)
    if X.shape[-1] != pca.n_features:
        raise ValueError(f"row has {X.shape[-1]} features, PCA was fitted on {pca.n_features}")
    return ((X - pca.mean) / pca.scale) @ pca.components.T
