"""Random forest of unpruned Gini CART trees, built in numba kernels.

Each tree is stored as flat arrays (``feature``, ``threshold``, ``left``,
``right``, ``value``); ``feature == -1`` marks a leaf. Rows with
``x[feature] <= threshold`` go left.
"""

from __future__ import annotations

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _best_split(X, y, idx, start, end, f):
    n = end - start
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    for i in range(n):
        vals[i] = X[idx[start + i], f]
        labs[i] = y[idx[start + i]]
    order = np.argsort(vals, kind="mergesort")
    total_pos = 0
    for i in range(n):
        total_pos += labs[i]
    best = np.inf
    best_thr = 0.0
    pos_left = 0
    for i in range(n - 1):
        pos_left += labs[order[i]]
        a = vals[order[i]]
        b = vals[order[i + 1]]
        if a < b:
            nl = i + 1
            nr = n - nl
            pr = total_pos - pos_left
            # weighted Gini: sum over children of n_c * 2 p_c (1 - p_c)
            imp = 2.0 * pos_left * (nl - pos_left) / nl + 2.0 * pr * (nr - pr) / nr
            if imp < best:
                best = imp
                thr = 0.5 * (a + b)
                if thr >= b:
                    thr = a
                best_thr = thr
    return best, best_thr


@numba.njit(cache=True)
def _build_tree(X, y, idx, mtry, seed):
    np.random.seed(seed)
    n = idx.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        pos = 0
        for i in range(lo, hi):
            pos += y[idx[i]]
        value[node] = pos / (hi - lo)
        if pos == 0 or pos == hi - lo:
            continue
        perm = np.random.permutation(d)
        best = np.inf
        best_f = -1
        best_thr = 0.0
        for j in range(d):
            # past the mtry candidates, keep drawing only until some split is valid
            if j >= mtry and best_f >= 0:
                break
            f = perm[j]
            imp, thr = _best_split(X, y, idx, lo, hi, f)
            if imp < best:
                best = imp
                best_f = f
                best_thr = thr
        if best_f < 0:
            continue
        # partition idx[lo:hi] in place
        i = lo
        k = hi - 1
        while i <= k:
            if X[idx[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[k]
                idx[k] = tmp
                k -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top] = n_nodes + 1
        stack_lo[top] = i
        stack_hi[top] = hi
        top += 1
        stack_node[top] = n_nodes
        stack_lo[top] = lo
        stack_hi[top] = i
        top += 1
        n_nodes += 2
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@numba.njit(cache=True)
def _predict_tree(X, feature, threshold, left, right, value, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]


class DecisionTree:
    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict_proba(self, X) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        out = np.empty(X.shape[0])
        _predict_tree(X, self.feature, self.threshold, self.left, self.right, self.value, out)
        return out

    def vote(self, X) -> np.ndarray:
        """1 where the leaf majority is genuine (a 50/50 leaf votes imposter)."""
        return (self.predict_proba(X) > 0.5).astype(np.int64)

    def get_params(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_params(cls, p: dict) -> "DecisionTree":
        return cls(p["feature"], p["threshold"], p["left"], p["right"], p["value"])


def tree_seeds(seed: int, n_trees: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(n_trees, dtype=np.uint32)


class RandomForest:
    """Bagged CART trees with ``ceil(sqrt(d))`` candidate features per split,
    unlimited depth and leaves of size 1. The score is the fraction of trees
    voting genuine."""

    kind = "rf"

    def __init__(self, n_trees: int = 100, seed: int = 0, max_features: int | None = None):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = n_trees
        self.seed = seed
        self.max_features = max_features
        self.trees: list[DecisionTree] = []

    def fit(self, X, y) -> "RandomForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.int64)
        n, d = X.shape
        mtry = self.max_features or max(1, math.ceil(math.sqrt(d)))
        self.trees = []
        for ts in tree_seeds(self.seed, self.n_trees):
            rng = np.random.default_rng(int(ts))
            boot = rng.integers(0, n, size=n)
            arrays = _build_tree(X, y, boot, mtry, int(ts))
            self.trees.append(DecisionTree(*arrays))
        return self

    def votes(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        total = np.zeros(Q.shape[0], dtype=np.int64)
        for tree in self.trees:
            total += tree.vote(Q)
        return total

    def score(self, Q) -> np.ndarray:
        return self.votes(Q) / len(self.trees)

    def get_params(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "seed": self.seed,
            "max_features": self.max_features,
            "trees": [t.get_params() for t in self.trees],
        }

    @classmethod
    def from_params(cls, p: dict) -> "RandomForest":
        m = cls(int(p["n_trees"]), int(p["seed"]), p["max_features"])
        m.trees = [DecisionTree.from_params(t) for t in p["trees"]]
        return m
