"""Intercluster distances from empirical Mahalanobis pair distributions.

For clusters ``i`` and ``j`` the sample ``p_ij`` holds the distances from
points of ``i`` to points of ``j`` measured in the metric of ``j``'s
covariance.  The two orientations differ when the covariances differ, so
the symmetric distance takes the larger of their 5th percentiles.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import EmptyClusterError
from .gmm import MixtureModel
from .numerics import derive_rng, percentile, whitening_matrix

PAIR_CAP = 100_000
PERCENT = 5.0


@dataclass(frozen=True, eq=False)
class ClusterDistanceMatrix:
    """Symmetric distances between the non-empty clusters of a hard assignment.

    ``retained[m]`` is the original mixture index of row ``m``; ``dropped``
    lists mixture components that received no points.
    """

    entries: np.ndarray
    member_counts: np.ndarray
    retained: np.ndarray
    dropped: tuple = ()

    @property
    def n_clusters(self) -> int:
        return int(self.entries.shape[0])


def pair_samples(X, assignment, model: MixtureModel, i: int, j: int,
                 pair_cap: int = PAIR_CAP, seed: int = 0, ridge: float = 0.0) -> np.ndarray:
    """Mahalanobis distances from points of cluster ``i`` to points of cluster ``j``.

    Distances use the inverse covariance of component ``j``; self-pairs are
    excluded when ``i == j``. When more than ``pair_cap`` pairs exist, exactly
    ``pair_cap`` of them are drawn uniformly without replacement from a stream
    keyed on ``(seed, i, j)``.
    """
    X = np.asarray(X, dtype=float)
    assignment = np.asarray(assignment)
    xi = X[assignment == i]
    xj = X[assignment == j]
    if len(xi) == 0 or len(xj) == 0:
        raise EmptyClusterError(f"cluster {i if len(xi) == 0 else j} has no assigned points")
    w = whitening_matrix(model.covariances[j], ridge)
    a = xi @ w.T
    b = xj @ w.T
    ni, nj = len(a), len(b)
    same = i == j
    total = ni * (nj - 1) if same else ni * nj
    if total == 0:
        return np.empty(0)

    if total <= pair_cap:
        dist = cdist(a, b)
        if same:
            return dist[~np.eye(ni, dtype=bool)]
        return dist.ravel()

    rng = derive_rng(seed, "pairs", i, j)
    flat = rng.choice(total, size=pair_cap, replace=False)
    if same:
        rows, cols = np.divmod(flat, nj - 1)
        cols = cols + (cols >= rows)
    else:
        rows, cols = np.divmod(flat, nj)
    return np.sqrt(((a[rows] - b[cols]) ** 2).sum(axis=1))


def intercluster_distance(sample_ij, sample_ji, q: float = PERCENT) -> float:
    return max(percentile(sample_ij, q), percentile(sample_ji, q))


def cluster_distance_matrix(X, assignment, model: MixtureModel, pair_cap: int = PAIR_CAP,
                            seed: int = 0, ridge: float = 0.0,
                            n_jobs: int = 1) -> ClusterDistanceMatrix:
    """Distance matrix over the clusters that received at least one point.

    Each ordered pair draws from its own stream, so the result does not
    depend on ``n_jobs`` or on the order pairs are evaluated in.
    """
    assignment = np.asarray(assignment)
    counts = np.bincount(assignment, minlength=model.n_components)
    retained = np.flatnonzero(counts > 0)
    dropped = tuple(int(k) for k in np.flatnonzero(counts == 0))
    m = len(retained)

    def percentile_of(pair):
        a, b = pair
        sample = pair_samples(X, assignment, model, retained[a], retained[b],
                              pair_cap=pair_cap, seed=seed, ridge=ridge)
        return percentile(sample, PERCENT)

    ordered = [(a, b) for a in range(m) for b in range(m) if a != b]
    if n_jobs == 1:
        values = [percentile_of(p) for p in ordered]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(percentile_of, ordered))

    directed = np.zeros((m, m))
    for (a, b), v in zip(ordered, values):
        directed[a, b] = v
    entries = np.maximum(directed, directed.T)
    return ClusterDistanceMatrix(
        entries=entries,
        member_counts=counts[retained],
        retained=retained,
        dropped=dropped,
    )


def cluster_sizes(X, assignment, model: MixtureModel, pair_cap: int = PAIR_CAP,
                  seed: int = 0, q: float = 50.0) -> np.ndarray:
    """Percentile ``q`` of the within-cluster distance samples, for diagnostics.

    Single-point clusters have no distinct pairs and report NaN.
    """
    assignment = np.asarray(assignment)
    sizes = np.full(model.n_components, np.nan)
    for k in np.unique(assignment):
        sample = pair_samples(X, assignment, model, k, k, pair_cap=pair_cap, seed=seed)
        if sample.size:
            sizes[k] = percentile(sample, q)
    return sizes
