"""k-nearest-neighbors scoring with tie-aware neighbor averaging.

Score = expected positive fraction among the k nearest training rows. Rows
tied exactly at the k-th distance are averaged collectively (each
boundary row contributes its share of the remaining slots), which makes
predictions invariant under any permutation of the training data even when
encoded rows collide.
"""

from __future__ import annotations

import numpy as np

VALID_METRICS = ("minkowski", "euclidean", "manhattan")

# test rows are processed in blocks; full n_test x n_train matrices get big
_BLOCK = 256


def _distances(block: np.ndarray, train: np.ndarray, metric: str) -> np.ndarray:
    diff = np.abs(block[:, None, :] - train[None, :, :])
    if metric == "euclidean":
        return np.sqrt(np.sum(diff * diff, axis=2))
    if metric == "manhattan":
        return np.sum(diff, axis=2)
    if metric == "minkowski":  # exponent 3, distinct from the other two
        return np.cbrt(np.sum(diff ** 3, axis=2))
    raise ValueError(f"unknown metric {metric!r}")


class Knn:
    def __init__(self, n_neighbors: int, metric: str = "euclidean"):
        if n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if metric not in VALID_METRICS:
            raise ValueError(f"metric must be one of {VALID_METRICS}")
        self.n_neighbors = n_neighbors
        self.metric = metric
        self._X: np.ndarray | None = None
        self._y: np.ndarray | None = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "Knn":
        self._X = X
        self._y = y.astype(np.float64)
        return self

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        if self._X is None:
            raise RuntimeError("not fitted")
        if X.shape[1] != self._X.shape[1]:
            raise ValueError(f"expected {self._X.shape[1]} features, got {X.shape[1]}")
        k = min(self.n_neighbors, self._X.shape[0])
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], _BLOCK):
            block = X[start:start + _BLOCK]
            d = _distances(block, self._X, self.metric)
            kth = np.sort(d, axis=1)[:, k - 1]
            closer = d < kth[:, None]
            boundary = d == kth[:, None]
            n_closer = closer.sum(axis=1)
            pos_closer = closer @ self._y
            n_bound = boundary.sum(axis=1)
            pos_bound = boundary @ self._y
            out[start:start + _BLOCK] = (
                pos_closer + (k - n_closer) * pos_bound / n_bound
            ) / k
        return out
