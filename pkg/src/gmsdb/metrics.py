"""Pair-counting agreement between a reference labeling and a clustering."""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

import numpy as np


class PairCounts(NamedTuple):
    """Unordered point pairs classified against reference labels ``a``.

    ``tp``: together in both; ``tn``: apart in both; ``fp``: together only in
    ``b``; ``fn``: together only in ``a``.
    """

    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def _pairs(counts) -> int:
    counts = np.asarray(counts, dtype=np.int64)
    return int((counts * (counts - 1) // 2).sum())


def pair_counts(a, b) -> PairCounts:
    """Pair confusion counts from the contingency table of ``a`` against ``b``."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ValueError(f"labelings differ in length: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("pairwise metrics need at least two points")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    tp = _pairs(table)
    same_a = _pairs(table.sum(axis=1))
    same_b = _pairs(table.sum(axis=0))
    total = a.size * (a.size - 1) // 2
    fn = same_a - tp
    fp = same_b - tp
    return PairCounts(tp, total - tp - fp - fn, fp, fn)


def pwtp_fraction(a, b) -> Fraction:
    c = pair_counts(a, b)
    return Fraction(c.tp, c.total)


def pwtn_fraction(a, b) -> Fraction:
    c = pair_counts(a, b)
    return Fraction(c.tn, c.total)


def rand_index_fraction(a, b) -> Fraction:
    c = pair_counts(a, b)
    return Fraction(c.tp + c.tn, c.total)


def rand_index(a, b) -> float:
    return float(rand_index_fraction(a, b))


def pwtp(a, b) -> float:
    return float(pwtp_fraction(a, b))


def pwtn(a, b) -> float:
    return float(pwtn_fraction(a, b))


def run_interval(values, coverage: float = 0.95) -> tuple[float, float]:
    """Empirical central interval of repeated-run values."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2:
        raise ValueError("an interval needs at least two run values")
    if not 0.0 < coverage < 1.0:
        raise ValueError("coverage must lie in (0, 1)")
    tail = 50.0 * (1.0 - coverage)
    low, high = np.percentile(values, [tail, 100.0 - tail], method="linear")
    return float(low), float(high)
