"""Module for Euclidean distances and nearest-neighbor search in min-max scaled space"""
import numpy as np
from scipy.spatial.distance import cdist

from .dataset import feature_stats, scale_matrix
from .errors import DimensionError

QUERY_CHUNK = 512


def euclidean(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"vectors of shape {a.shape} and {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pairwise_euclidean(left, right):
    left = np.atleast_2d(np.asarray(left, dtype=np.float64))
    right = np.atleast_2d(np.asarray(right, dtype=np.float64))
    if left.shape[1] != right.shape[1]:
        raise DimensionError(f"{left.shape[1]} features against {right.shape[1]}")
    return cdist(left, right, "euclidean")


class MinMaxSpace:
    """Scales matrices with min/max taken from a training split"""

    def __init__(self, stats):
        self.stats = stats

    @classmethod
    def from_dataset(cls, ds):
        return cls(feature_stats(ds))

    def transform(self, matrix):
        return scale_matrix(matrix, self.stats)


def k_nearest(query, reference, k, exclude=None):
    """
    Indices of the k nearest reference rows for every query row.

    Ties are broken by the lower reference index. `exclude[i]` names a reference
    row that query row i may not select (its own position), or -1 for none.
    """
    query = np.atleast_2d(np.asarray(query, dtype=np.float64))
    reference = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    available = reference.shape[0] - (0 if exclude is None else 1)
    if not 1 <= k <= available:
        raise DimensionError(f"cannot take {k} neighbors out of {available} rows")

    indices = np.empty((query.shape[0], k), dtype=np.int64)
    distances = np.empty((query.shape[0], k), dtype=np.float64)
    for start in range(0, query.shape[0], QUERY_CHUNK):
        stop = min(start + QUERY_CHUNK, query.shape[0])
        block = pairwise_euclidean(query[start:stop], reference)
        if exclude is not None:
            rows = np.arange(stop - start)
            own = np.asarray(exclude[start:stop], dtype=np.int64)
            keep = own >= 0
            block[rows[keep], own[keep]] = np.inf
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        indices[start:stop] = order
        distances[start:stop] = np.take_along_axis(block, order, axis=1)
    return indices, distances
