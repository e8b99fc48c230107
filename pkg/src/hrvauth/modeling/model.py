"""Trained one-vs-all models: PCA front-end + classifier, with a JSON container."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import ModelFormatError, ModelVersionError
from .balance import BinaryLabeledSet
from .forest import RandomForest
from .knn import KNNClassifier
from .lda import LDAClassifier
from .mlp import MLPClassifier
from .pca import PCAModel, fit_pca

FORMAT_TAG = "hrvauth.model"
FORMAT_VERSION = 1

CLASSIFIERS = {
    "knn": KNNClassifier,
    "lda": LDAClassifier,
    "rf": RandomForest,
    "mlp": MLPClassifier,
}
KINDS = tuple(CLASSIFIERS)

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    "knn": {"k": 3},
    "lda": {"priors": "empirical"},
    "rf": {"n_trees": 100, "max_features": None},
    "mlp": {"hidden": 5, "learning_rate": 0.3, "momentum": 0.2, "epochs": 500, "batch_size": 1},
}
_SEEDED = {"rf", "mlp"}


def check_kind(kind: str) -> str:
    if kind not in CLASSIFIERS:
        raise ValueError(f"unknown classifier {kind!r} (expected one of {', '.join(KINDS)})")
    return kind


def resolve_hyperparameters(kind: str, overrides: dict | None = None) -> dict:
    params = dict(DEFAULT_HYPERPARAMETERS[check_kind(kind)])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ValueError(f"unknown hyperparameter {key!r} for {kind}")
        params[key] = value
    return params


@dataclass(eq=False)
class TrainedModel:
    kind: str
    pca: PCAModel
    classifier: Any
    hyperparameters: dict
    seed: int
    metadata: dict = field(default_factory=dict)

    def score(self, features) -> np.ndarray | float:
        """Genuine score in [0, 1] for one raw feature row (or a batch)."""
        x = features.as_array() if hasattr(features, "as_array") else np.asarray(features, dtype=np.float64)
        single = x.ndim == 1
        s = np.clip(self.classifier.score(self.pca.transform(np.atleast_2d(x))), 0.0, 1.0)
        return float(s[0]) if single else s

    def to_dict(self) -> dict:
        return {
            "format": FORMAT_TAG,
            "version": FORMAT_VERSION,
            "kind": self.kind,
            "seed": self.seed,
            "hyperparameters": self.hyperparameters,
            "metadata": self.metadata,
            "pca": self.pca.to_dict(),
            "params": self.classifier.get_params(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format") != FORMAT_TAG:
            raise ModelFormatError(f"not a model container (format tag {d.get('format')!r})")
        if d.get("version") != FORMAT_VERSION:
            raise ModelVersionError(d.get("version"), FORMAT_VERSION)
        kind = d["kind"]
        if kind not in CLASSIFIERS:
            raise ModelFormatError(f"unknown classifier kind {kind!r}")
        return cls(
            kind,
            PCAModel.from_dict(d["pca"]),
            CLASSIFIERS[kind].from_params(d["params"]),
            d["hyperparameters"],
            int(d["seed"]),
            d.get("metadata", {}),
        )

    @classmethod
    def loads(cls, text: str) -> "TrainedModel":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from None
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.loads(Path(path).read_text())


def make_classifier(kind: str, hyperparameters: dict, seed: int):
    params = dict(hyperparameters)
    if kind in _SEEDED:
        params["seed"] = seed
    return CLASSIFIERS[kind](**params)


def _require_both_classes(y):
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("training set must contain both genuine and imposter rows")


def train_classifier(kind: str, X, y, *, seed: int = 0, hyperparameters: dict | None = None):
    """Fit a bare classifier on already-transformed rows."""
    y = np.asarray(y, dtype=np.int64)
    _require_both_classes(y)
    params = resolve_hyperparameters(kind, hyperparameters)
    return make_classifier(kind, params, seed).fit(X, y), params


def fit_model(
    kind: str,
    X,
    y,
    *,
    variance: float = 0.9,
    seed: int = 0,
    hyperparameters: dict | None = None,
    metadata: dict | None = None,
) -> TrainedModel:
    """PCA on ``X`` (raw features), then the classifier on the projection."""
    X = np.asarray(X, dtype=np.float64)
    pca = fit_pca(X, variance)
    clf, params = train_classifier(kind, pca.transform(X), y, seed=seed, hyperparameters=hyperparameters)
    return TrainedModel(kind, pca, clf, params, seed, dict(metadata or {}))


def _train(kind, data: BinaryLabeledSet, pca, seed, **hyper) -> TrainedModel:
    clf, params = train_classifier(kind, data.X, data.y, seed=seed, hyperparameters=hyper)
    if pca is None:
        d = data.X.shape[1]
        pca = PCAModel(np.zeros(d), np.ones(d), np.eye(d), np.full(d, 1.0 / d), 1.0)
    return TrainedModel(kind, pca, clf, params, seed, {"genuine_subject": data.genuine_subject})


def train_knn(data: BinaryLabeledSet, k: int = 3, pca: PCAModel | None = None) -> TrainedModel:
    """``data.X`` holds transformed rows; ``pca`` (identity if None) is attached."""
    return _train("knn", data, pca, 0, k=k)


def train_lda(data: BinaryLabeledSet, pca: PCAModel | None = None, priors: str = "empirical") -> TrainedModel:
    return _train("lda", data, pca, 0, priors=priors)


def train_rf(data: BinaryLabeledSet, trees: int = 100, seed: int = 0, pca: PCAModel | None = None) -> TrainedModel:
    return _train("rf", data, pca, seed, n_trees=trees)


def train_mlp(data: BinaryLabeledSet, hidden: int = 5, seed: int = 0, pca: PCAModel | None = None, **opts) -> TrainedModel:
    return _train("mlp", data, pca, seed, hidden=hidden, **opts)


def score(model: TrainedModel, features):
    return model.score(features)
