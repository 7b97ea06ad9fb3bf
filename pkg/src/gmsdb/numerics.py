"""Scalar statistical primitives: chi-squared quantiles, percentiles,
Mahalanobis distances and regularized inversion of covariance matrices.
"""

from __future__ import annotations

import math
import zlib

import numpy as np
from scipy import linalg
from scipy.special import gammainc, gammaincc

from .exceptions import SingularMatrixError

DEFAULT_RIDGE = 1e-6


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Return an independent generator for the stream named by ``keys``.

    String keys are hashed with CRC32 so stream names stay stable across
    interpreter runs (``hash()`` is salted).
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            entropy.append(zlib.crc32(key.encode("utf-8")))
        else:
            entropy.append(int(key))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def chi2_cdf(x, k: int):
    """Lower-tail chi-squared CDF with ``k`` degrees of freedom."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return gammainc(k / 2.0, x / 2.0)


def chi2_quantile(p: float, k: int, tol: float = 1e-12) -> float:
    """Quantile of the chi-squared(k) distribution by bisection.

    The CDF is the regularized lower incomplete gamma function
    P(k/2, x/2), so the search bracket ``[0, k + 40*sqrt(2k)]`` (forty
    standard deviations above the mean) always contains the root for any
    ``p`` representable below 1. Upper quantiles are located on the
    complementary function, which keeps full precision as ``p`` nears 1;
    ``tol`` is relative to the current bracket.
    """
    if not (0.0 < p < 1.0) or math.isnan(p):
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    if int(k) != k or k < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {k!r}")
    a = int(k) / 2.0
    if p <= 0.5:
        below = lambda x: gammainc(a, x / 2.0) < p  # noqa: E731
    else:
        below = lambda x: gammaincc(a, x / 2.0) > 1.0 - p  # noqa: E731
    lo, hi = 0.0, k + 40.0 * math.sqrt(2.0 * k)
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if below(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def percentile(sample, q: float) -> float:
    """Linear-interpolation percentile, rank ``(q/100)*(n-1)``."""
    values = np.asarray(sample, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("percentile of an empty sample")
    if not 0.0 <= q <= 100.0:
        raise ValueError(f"percent must lie in [0, 100], got {q!r}")
    return float(np.percentile(values, q, method="linear"))


def mahalanobis(x, y, s_inv) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s_inv = np.asarray(s_inv, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or s_inv.shape != (x.size, x.size):
        raise ValueError(
            f"dimension mismatch: x{x.shape}, y{y.shape}, inverse covariance {s_inv.shape}"
        )
    diff = x - y
    return float(math.sqrt(max(diff @ s_inv @ diff, 0.0)))


def _regularize(s: np.ndarray, ridge: float) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {s.shape}")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    d = s.shape[0]
    s = 0.5 * (s + s.T)
    if ridge:
        s = s + (ridge * np.trace(s) / d) * np.eye(d)
    return s


def cholesky_factor(s, ridge: float = 0.0) -> np.ndarray:
    """Lower Cholesky factor of ``s + ridge*trace(s)/d*I``."""
    s = _regularize(s, ridge)
    try:
        return linalg.cholesky(s, lower=True)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError(f"matrix is not positive definite: {exc}") from None


def whitening_matrix(s, ridge: float = 0.0) -> np.ndarray:
    """Matrix ``W`` with ``W.T @ W`` equal to the regularized inverse of ``s``.

    ``||W @ (x - y)||`` is then the Mahalanobis distance in the metric of ``s``.
    """
    chol = cholesky_factor(s, ridge)
    return linalg.solve_triangular(chol, np.eye(chol.shape[0]), lower=True)


def regularized_inverse(s, ridge: float = DEFAULT_RIDGE) -> np.ndarray:
    w = whitening_matrix(s, ridge)
    inv = w.T @ w
    return 0.5 * (inv + inv.T)
