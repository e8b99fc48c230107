"""Per-subject window subsampling and one-vs-all label sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class BinaryLabeledSet:
    X: np.ndarray
    y: np.ndarray  # 1 = genuine, 0 = imposter
    genuine_subject: str

    def __post_init__(self):
        if len(self.X) != len(self.y):
            raise ValueError("X and y lengths differ")

    @property
    def n_genuine(self) -> int:
        return int(np.count_nonzero(self.y == 1))

    @property
    def n_imposter(self) -> int:
        return int(np.count_nonzero(self.y == 0))


def subsample_per_subject(subject_ids, cap: int = 35, seed: int = 0) -> np.ndarray:
    """Indices (sorted) keeping at most ``cap`` rows per subject.

    Subjects are visited in sorted order and sampled without replacement from
    one seeded generator, so the selection depends only on (ids, cap, seed).
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    ids = np.asarray(subject_ids, dtype=object)
    rng = np.random.default_rng(seed)
    keep = []
    for subject in sorted(set(ids.tolist())):
        rows = np.flatnonzero(ids == subject)
        if len(rows) > cap:
            rows = np.sort(rng.choice(rows, size=cap, replace=False))
        keep.append(rows)
    return np.sort(np.concatenate(keep)) if keep else np.empty(0, dtype=np.int64)


def one_vs_all_set(X, subject_ids, genuine: str) -> BinaryLabeledSet:
    ids = np.asarray(subject_ids, dtype=object)
    y = (ids == genuine).astype(np.int64)
    return BinaryLabeledSet(np.asarray(X, dtype=np.float64), y, genuine)


def subsample_majority(X, subject_ids, genuine: str, cap: int = 35, seed: int = 0) -> BinaryLabeledSet:
    """Cap every subject at ``cap`` windows, then label ``genuine`` as 1."""
    keep = subsample_per_subject(subject_ids, cap, seed)
    ids = np.asarray(subject_ids, dtype=object)[keep]
    return one_vs_all_set(np.asarray(X)[keep], ids, genuine)
