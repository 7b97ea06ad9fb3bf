"""Full-covariance Gaussian mixtures fitted by EM and selected by BIC."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .exceptions import SingularMatrixError
from .numerics import DEFAULT_RIDGE, derive_rng

LOG_2PI = math.log(2.0 * math.pi)


class GaussianComponent(NamedTuple):
    weight: float
    mean: np.ndarray
    covariance: np.ndarray


@dataclass(frozen=True)
class EMConfig:
    max_iter: int = 200
    tol: float = 1e-6
    ridge: float = DEFAULT_RIDGE


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """A fitted mixture plus the diagnostics of the EM run that produced it.

    ``covariances`` already include the ridge term, so densities are
    evaluated from them directly.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood: float
    bic: float
    n_samples: int
    n_iter: int = 0
    converged: bool = True
    requested_components: int = 0
    ll_trace: tuple = field(default=(), repr=False)
    drop_iterations: tuple = ()

    @property
    def n_components(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.means.shape[1])

    @property
    def n_dropped(self) -> int:
        return max(self.requested_components - self.n_components, 0)

    @property
    def components(self) -> list[GaussianComponent]:
        return [
            GaussianComponent(float(w), m, c)
            for w, m, c in zip(self.weights, self.means, self.covariances)
        ]

    def subset(self, keep) -> "MixtureModel":
        """Mixture restricted to components ``keep`` with renormalized weights."""
        keep = np.asarray(keep, dtype=int)
        weights = self.weights[keep]
        return MixtureModel(
            weights=weights / weights.sum(),
            means=self.means[keep],
            covariances=self.covariances[keep],
            log_likelihood=self.log_likelihood,
            bic=self.bic,
            n_samples=self.n_samples,
            n_iter=self.n_iter,
            converged=self.converged,
            requested_components=self.requested_components,
            ll_trace=self.ll_trace,
            drop_iterations=self.drop_iterations,
        )


def parameter_count(n_components: int, n_features: int) -> int:
    """Free parameters of a full-covariance mixture: weights, means, covariances."""
    n, d = n_components, n_features
    return (n - 1) + n * d + n * d * (d + 1) // 2


def _check_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"expected an (n, d) data matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite values")
    return X


def _check_dim(model: MixtureModel, X: np.ndarray) -> None:
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"dimension mismatch: model has d={model.n_features}, data has d={X.shape[1]}"
        )


def _log_gaussians(X: np.ndarray, means: np.ndarray, covariances: np.ndarray) -> np.ndarray:
    """``log N(x_j | mean_i, cov_i)`` as an (n, N) array."""
    d = X.shape[1]
    try:
        chol = np.linalg.cholesky(covariances)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"component covariance not positive definite: {exc}") from None
    chol_inv = np.linalg.inv(chol)
    # (N, n, d): whitened offsets of every point from every mean
    z = X[None, :, :] @ chol_inv.transpose(0, 2, 1)
    z -= (chol_inv @ means[:, :, None])[:, None, :, 0]
    maha2 = np.einsum("kni,kni->kn", z, z)
    log_det = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
    return (-0.5 * (d * LOG_2PI + log_det[:, None] + maha2)).T


def weighted_log_prob(model: MixtureModel, X) -> np.ndarray:
    """``log(A_i * N(x_j | theta_i))`` as an (n, N) array."""
    X = _check_data(X)
    _check_dim(model, X)
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    return _log_gaussians(X, model.means, model.covariances) + log_w


def log_likelihood(model: MixtureModel, X) -> float:
    X = _check_data(X)
    _check_dim(model, X)
    return float(logsumexp(weighted_log_prob(model, X), axis=1).sum())


def bic(model: MixtureModel, X) -> float:
    """``k*ln(n) - 2*ln(L)`` of ``X`` under ``model``."""
    X = _check_data(X)
    k = parameter_count(model.n_components, model.n_features)
    return k * math.log(X.shape[0]) - 2.0 * log_likelihood(model, X)


def responsibilities(model: MixtureModel, X) -> np.ndarray:
    X = _check_data(X)
    _check_dim(model, X)
    log_prob = weighted_log_prob(model, X)
    return np.exp(log_prob - logsumexp(log_prob, axis=1, keepdims=True))


def hard_assign(resp) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest component index."""
    return np.argmax(np.asarray(resp), axis=1)


def kmeans_plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``k`` seeds drawn by D^2 weighting."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((X - X[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        closest = np.minimum(closest, ((X - X[idx]) ** 2).sum(axis=1))
    return np.asarray(chosen)


def _biased_covariance(X: np.ndarray) -> np.ndarray:
    diff = X - X.mean(axis=0)
    return diff.T @ diff / X.shape[0]


def fit_gmm(X, n_components: int, seed: int = 0, config: EMConfig | None = None,
            restart: int = 0) -> MixtureModel:
    """Fit one mixture by EM from a k-means++ start.

    The run draws from its own stream derived from ``(seed, n_components,
    restart)``. Components whose weight falls below ``1/(10n)`` are dropped
    and the fit continues with the remaining ones.
    """
    config = config or EMConfig()
    X = _check_data(X)
    n, d = X.shape
    if n_components < 1:
        raise ValueError("n_components must be at least 1")
    if n < n_components:
        raise ValueError(f"need at least {n_components} points, got {n}")
    rng = derive_rng(seed, "gmm", n_components, restart)

    # EM runs on centred data so the expanded quadratic forms below do not
    # lose precision to a large common offset.
    center = X.mean(axis=0)
    Xc = X - center
    outer = (Xc[:, :, None] * Xc[:, None, :]).reshape(n, d * d)
    global_cov = Xc.T @ Xc / n
    scale = np.trace(global_cov) / d
    if not scale > 0:
        raise SingularMatrixError("data has zero variance; covariance cannot be regularized")
    reg = config.ridge * scale * np.eye(d)
    min_count = 0.1  # weight < 1/(10n)

    means = Xc[kmeans_plus_plus(Xc, n_components, rng)].copy()
    covs = np.repeat((global_cov + reg)[None], n_components, axis=0)
    weights = np.full(n_components, 1.0 / n_components)

    def e_step(weights, means, covs):
        try:
            chol = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"component covariance not positive definite: {exc}") from None
        chol_inv = np.linalg.inv(chol)
        prec = chol_inv.transpose(0, 2, 1) @ chol_inv
        prec_mean = (prec @ means[:, :, None])[:, :, 0]
        maha2 = outer @ prec.reshape(-1, d * d).T
        maha2 -= 2.0 * (Xc @ prec_mean.T)
        maha2 += np.einsum("ki,ki->k", means, prec_mean)
        np.maximum(maha2, 0.0, out=maha2)
        log_det = 2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        maha2 += d * LOG_2PI + log_det
        maha2 *= -0.5
        maha2 += np.log(weights)
        top = maha2.max(axis=1)
        np.subtract(maha2, top[:, None], out=maha2)
        dens = np.exp(maha2, out=maha2)
        total = dens.sum(axis=1)
        dens /= total[:, None]
        return float((top + np.log(total)).sum()), dens

    ll, resp = e_step(weights, means, covs)
    trace = [ll]
    drops = []
    converged = False
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        counts = resp.sum(axis=0)
        keep = counts >= min_count
        if not keep.all():
            drops.append(n_iter)
            resp = resp[:, keep]
            counts = counts[keep]
        weights = counts / n
        weights /= weights.sum()
        means = (resp.T @ Xc) / counts[:, None]
        second = ((resp.T @ outer) / counts[:, None]).reshape(-1, d, d)
        covs = second - means[:, :, None] * means[:, None, :]
        covs = 0.5 * (covs + covs.transpose(0, 2, 1)) + reg

        prev = ll
        ll, resp = e_step(weights, means, covs)
        trace.append(ll)
        if abs(ll - prev) < config.tol * abs(prev):
            converged = True
            break

    k = parameter_count(len(weights), d)
    return MixtureModel(
        weights=weights,
        means=means + center,
        covariances=covs,
        log_likelihood=ll,
        bic=k * math.log(n) - 2.0 * ll,
        n_samples=n,
        n_iter=n_iter,
        converged=converged,
        requested_components=n_components,
        ll_trace=tuple(trace),
        drop_iterations=tuple(drops),
    )


def _best_of_restarts(X, n_components, restarts, seed, config) -> MixtureModel:
    best = None
    for r in range(restarts):
        model = fit_gmm(X, n_components, seed=seed, config=config, restart=r)
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    return best


def bic_sweep(X, n_min: int, n_max: int, restarts: int = 3, seed: int = 0,
              config: EMConfig | None = None, n_jobs: int = 1,
              patience: int | None = None) -> list[MixtureModel]:
    """Best-of-``restarts`` fit for every component count in ``[n_min, n_max]``.

    With ``patience`` set, the sweep stops once BIC has not improved for that
    many consecutive counts (sequential sweeps only).
    """
    X = _check_data(X)
    if n_min < 1 or n_max < n_min:
        raise ValueError(f"invalid component range [{n_min}, {n_max}]")
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    counts = range(n_min, n_max + 1)
    if n_jobs != 1 and patience is None:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(_best_of_restarts, X, k, restarts, seed, config)
                       for k in counts]
            return [f.result() for f in futures]
    sweep = []
    best, since_best = math.inf, 0
    for k in counts:
        model = _best_of_restarts(X, k, restarts, seed, config)
        sweep.append(model)
        if model.bic < best:
            best, since_best = model.bic, 0
        else:
            since_best += 1
        if patience is not None and since_best >= patience:
            break
    return sweep


def select_by_bic(X, n_min: int = 2, n_max: int = 50, restarts: int = 3, seed: int = 0,
                  config: EMConfig | None = None, n_jobs: int = 1,
                  patience: int | None = None) -> MixtureModel:
    """Model with minimal BIC over the sweep; ties go to the smaller count."""
    sweep = bic_sweep(X, n_min, n_max, restarts, seed, config, n_jobs, patience)
    return min(sweep, key=lambda m: (m.bic, m.requested_components))
