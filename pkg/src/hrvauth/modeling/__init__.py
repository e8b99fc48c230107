"""PCA, class balancing and the four one-vs-all classifiers."""

from .balance import BinaryLabeledSet, one_vs_all_set, subsample_majority, subsample_per_subject
from .forest import RandomForest
from .knn import KNNClassifier
from .lda import LDAClassifier
from .mlp import MLPClassifier
from .model import (
    KINDS,
    TrainedModel,
    fit_model,
    score,
    train_classifier,
    train_knn,
    train_lda,
    train_mlp,
    train_rf,
)
from .pca import ConstantFeatureWarning, PCAModel, fit_pca, transform

__all__ = [
    "BinaryLabeledSet",
    "ConstantFeatureWarning",
    "KINDS",
    "KNNClassifier",
    "LDAClassifier",
    "MLPClassifier",
    "PCAModel",
    "RandomForest",
    "TrainedModel",
    "fit_model",
    "fit_pca",
    "one_vs_all_set",
    "score",
    "subsample_majority",
    "subsample_per_subject",
    "train_classifier",
    "train_knn",
    "train_lda",
    "train_mlp",
    "train_rf",
    "transform",
]
