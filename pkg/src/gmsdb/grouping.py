"""Grouping of mixture components into superclusters.

DBSCAN runs over the precomputed intercluster distance matrix for an
increasing sequence of neighbourhood radii; each partition is scored by
the fraction of superclusters whose nearest neighbour lies beyond the
chi-squared separability threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DegenerateMatrixError
from .numerics import chi2_cdf, chi2_quantile


@dataclass(frozen=True, eq=False)
class SuperclusterPartition:
    labels: np.ndarray  # cluster index -> supercluster id

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def members(self, supercluster: int) -> np.ndarray:
        return np.flatnonzero(self.labels == supercluster)

    def __eq__(self, other):
        if not isinstance(other, SuperclusterPartition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)


class McRecord(NamedTuple):
    epsilon: float
    n_superclusters: int
    mc: float


def _as_matrix(R) -> np.ndarray:
    return np.asarray(getattr(R, "entries", R), dtype=float)


def epsilon_schedule(R) -> np.ndarray:
    """Midpoints between consecutive sorted unique distances, starting from 0.

    The largest distance itself is appended last so the final radius always
    joins every cluster into one group.
    """
    R = _as_matrix(R)
    n = R.shape[0]
    if n < 2:
        raise DegenerateMatrixError("need at least two clusters for a schedule")
    off = R[~np.eye(n, dtype=bool)]
    eps = np.unique(off[off > 0])
    if eps.size == 0:
        raise DegenerateMatrixError("distance matrix has no positive off-diagonal entries")
    lower = np.concatenate(([0.0], eps[:-1]))
    midpoints = (lower + eps) / 2.0
    return np.concatenate((midpoints, eps[-1:]))


def dbscan_precomputed(R, eps: float, min_pts: int = 1) -> SuperclusterPartition:
    """DBSCAN over objects ``0..N-1`` with neighbourhoods ``{m : R[n, m] <= eps}``.

    Neighbourhoods include the object itself. Ids are handed out in order of
    the first object reached. Noise objects (only possible for
    ``min_pts > 1``) each become their own singleton group so that every
    cluster still belongs to a supercluster.
    """
    R = _as_matrix(R)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be at least 1")
    n = R.shape[0]
    neighbours = [np.flatnonzero(R[k] <= eps) for k in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbours])
    labels = np.full(n, -1)
    next_id = 0
    for start in range(n):
        if labels[start] != -1:
            continue
        if not core[start]:
            continue
        labels[start] = next_id
        queue = [start]
        while queue:
            k = queue.pop()
            if not core[k]:
                continue
            for m in neighbours[k]:
                if labels[m] == -1:
                    labels[m] = next_id
                    queue.append(m)
        next_id += 1

    if (labels == -1).any():
        # relabel so singleton noise groups also follow first-index order
        for k in np.flatnonzero(labels == -1):
            labels[k] = next_id
            next_id += 1
        _, first = np.unique(labels, return_index=True)
        order = np.argsort(first)
        remap = np.empty(next_id, dtype=int)
        remap[np.unique(labels)[order]] = np.arange(next_id)
        labels = remap[labels]
    return SuperclusterPartition(labels)


def super_distance_matrix(R, partition: SuperclusterPartition) -> np.ndarray:
    """Minimum cluster distance between the members of each pair of groups."""
    R = _as_matrix(R)
    k = partition.count
    D = np.zeros((k, k))
    members = [partition.members(s) for s in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            D[a, b] = D[b, a] = R[np.ix_(members[a], members[b])].min()
    return D


def delta_d(alpha: float, dim: int) -> float:
    """Separability threshold ``sqrt(2 * Q_{1-alpha})`` of chi-squared(dim)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    return math.sqrt(2.0 * chi2_quantile(1.0 - alpha, dim))


def matrix_quality(D, threshold: float) -> float:
    """Fraction of groups whose nearest other group lies beyond ``threshold``.

    A single group has no neighbour to violate separability and scores 1.
    """
    D = np.asarray(D, dtype=float)
    k = D.shape[0]
    if k <= 1:
        return 1.0
    off = D + np.diag(np.full(k, np.inf))
    return float(np.count_nonzero(off.min(axis=1) > threshold)) / k


def pvalue(D, dim: int):
    """Upper-tail probability of a within-cluster distance exceeding ``D``."""
    D = np.asarray(D, dtype=float)
    return 1.0 - chi2_cdf(D * D / 2.0, dim)


def matrix_quality_pvalue(D, alpha: float, dim: int) -> float:
    """Matrix quality from p-values: a group counts when even its closest
    neighbour is separated at significance ``alpha``.
    """
    D = np.asarray(D, dtype=float)
    k = D.shape[0]
    if k <= 1:
        return 1.0
    p = pvalue(D, dim)
    np.fill_diagonal(p, -np.inf)
    return float(np.count_nonzero(p.max(axis=1) < alpha)) / k
