"""End-to-end superclustering: BIC-optimal mixture, intercluster distances,
and the radius search that stops once every supercluster is separable.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .distance import PAIR_CAP, cluster_distance_matrix
from .exceptions import DegenerateMatrixError, ModelFormatError, VersionMismatchError
from .gmm import (
    EMConfig,
    MixtureModel,
    bic_sweep,
    hard_assign,
    responsibilities,
    weighted_log_prob,
)
from .grouping import (
    McRecord,
    SuperclusterPartition,
    dbscan_precomputed,
    delta_d,
    epsilon_schedule,
    matrix_quality,
    super_distance_matrix,
)
from .numerics import DEFAULT_RIDGE

FORMAT_NAME = "gmsdb-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GmsdbConfig:
    alpha: float = 0.1
    n_min: int = 2
    n_max: int = 50
    restarts: int = 3
    pair_cap: int = PAIR_CAP
    ridge: float = DEFAULT_RIDGE
    seed: int = 0
    single_cluster_patience: int = 10
    max_iter: int = 200
    tol: float = 1e-6
    bic_patience: int | None = None
    record_full_trace: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 2 <= self.n_min <= self.n_max:
            raise ValueError(f"need 2 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        if self.single_cluster_patience < 1:
            raise ValueError("single_cluster_patience must be at least 1")
        if self.restarts < 1 or self.pair_cap < 1:
            raise ValueError("restarts and pair_cap must be positive")


@dataclass(frozen=True, eq=False)
class GmsdbModel:
    """A trained superclusterer.

    ``mixture`` holds only the components that received training points;
    ``dropped_clusters`` lists the original indices of the others.
    """

    mixture: MixtureModel
    partition: SuperclusterPartition
    chosen_epsilon: float
    delta_d: float
    alpha: float
    mc_trace: tuple[McRecord, ...]
    dropped_clusters: tuple = ()
    bic_curve: tuple = ()
    stage_timings: dict = field(default_factory=dict)

    @property
    def n_superclusters(self) -> int:
        return self.partition.count

    @property
    def n_features(self) -> int:
        return self.mixture.n_features


def select_iteration(trace) -> int:
    """Index of the record to keep from a radius search.

    The first record with MC equal to 1 wins. Otherwise the highest MC is
    taken, preferring more superclusters and then the smaller radius.
    """
    for k, rec in enumerate(trace):
        if rec.mc == 1.0:
            return k
    return min(range(len(trace)),
               key=lambda k: (-trace[k].mc, -trace[k].n_superclusters, trace[k].epsilon))


def search_partition(R, threshold: float, patience: int = 10, full_trace: bool = False):
    """Run DBSCAN over the radius schedule of ``R`` and score every partition.

    Returns ``(partition, epsilon, trace)``.
    """
    schedule = epsilon_schedule(R)
    trace = []
    partitions = []
    singles = 0
    for eps in schedule:
        part = dbscan_precomputed(R, eps)
        D = super_distance_matrix(R, part)
        trace.append(McRecord(float(eps), part.count, matrix_quality(D, threshold)))
        partitions.append(part)
        singles = singles + 1 if part.count == 1 else 0
        if trace[-1].mc == 1.0 and not full_trace:
            break
        if singles >= patience:
            break
    k = select_iteration(trace)
    return partitions[k], trace[k].epsilon, tuple(trace)


def fit(X, config: GmsdbConfig | None = None) -> GmsdbModel:
    config = config or GmsdbConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 points to cluster, got {n}")
    threshold = delta_d(config.alpha, d)
    em = EMConfig(max_iter=config.max_iter, tol=config.tol, ridge=config.ridge)

    t0 = time.perf_counter()
    n_max = min(config.n_max, n)
    n_min = min(config.n_min, n_max)
    sweep = bic_sweep(X, n_min, n_max, config.restarts, config.seed, em, config.n_jobs,
                      config.bic_patience)
    mixture = min(sweep, key=lambda m: (m.bic, m.requested_components))
    curve = tuple((m.requested_components, m.n_components, m.bic) for m in sweep)
    t1 = time.perf_counter()

    labels = hard_assign(responsibilities(mixture, X))
    R = cluster_distance_matrix(X, labels, mixture, pair_cap=config.pair_cap,
                                seed=config.seed, n_jobs=config.n_jobs)
    retained = mixture.subset(R.retained)
    t2 = time.perf_counter()

    try:
        if R.n_clusters < 2:
            raise DegenerateMatrixError("single retained cluster")
        partition, eps, trace = search_partition(
            R, threshold, config.single_cluster_patience, config.record_full_trace)
    except DegenerateMatrixError:
        partition = SuperclusterPartition(np.zeros(R.n_clusters, dtype=int))
        eps, trace = 0.0, (McRecord(0.0, 1, 1.0),)
    t3 = time.perf_counter()

    return GmsdbModel(
        mixture=retained,
        partition=partition,
        chosen_epsilon=eps,
        delta_d=threshold,
        alpha=config.alpha,
        mc_trace=trace,
        dropped_clusters=R.dropped,
        bic_curve=curve,
        stage_timings={"stage1": t1 - t0, "stage2": t2 - t1, "stage34": t3 - t2,
                       "total": t3 - t0},
    )


def _check_input(model: GmsdbModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"dimension mismatch: model expects d={model.n_features}, input has "
            f"d={X.shape[1] if X.ndim == 2 else X.shape}"
        )
    return X


def predict_soft(model: GmsdbModel, X) -> np.ndarray:
    """Supercluster probabilities: component responsibilities summed per group."""
    X = _check_input(model, X)
    log_prob = weighted_log_prob(model.mixture, X)
    norm = logsumexp(log_prob, axis=1)
    out = np.empty((X.shape[0], model.n_superclusters))
    for s in range(model.n_superclusters):
        members = model.partition.members(s)
        out[:, s] = np.exp(logsumexp(log_prob[:, members], axis=1) - norm)
    return out


def predict_hard(model: GmsdbModel, X) -> np.ndarray:
    return np.argmax(predict_soft(model, X), axis=1)


def _finite_list(a, name):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ModelFormatError(f"non-finite values in {name}")
    return a.tolist()


def model_to_dict(model: GmsdbModel) -> dict:
    mix = model.mixture
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dimension": mix.n_features,
        "alpha": model.alpha,
        "delta_d": model.delta_d,
        "chosen_epsilon": model.chosen_epsilon,
        "mixture": {
            "n_samples": mix.n_samples,
            "log_likelihood": mix.log_likelihood,
            "bic": mix.bic,
            "requested_components": mix.requested_components,
            "weights": _finite_list(mix.weights, "weights"),
            "means": _finite_list(mix.means, "means"),
            "covariances": _finite_list(mix.covariances.reshape(mix.n_components, -1),
                                        "covariances"),
        },
        "supercluster_of_cluster": [int(v) for v in model.partition.labels],
        "dropped_clusters": [int(v) for v in model.dropped_clusters],
        "mc_trace": [[r.epsilon, r.n_superclusters, r.mc] for r in model.mc_trace],
        "bic_curve": [[int(a), int(b), float(c)] for a, b, c in model.bic_curve],
    }


def model_from_dict(doc: dict) -> GmsdbModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a gmsdb model document")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"model format version {doc.get('version')!r} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    try:
        d = int(doc["dimension"])
        mix = doc["mixture"]
        weights = np.asarray(mix["weights"], dtype=float)
        k = weights.shape[0]
        means = np.asarray(mix["means"], dtype=float).reshape(k, d)
        covs = np.asarray(mix["covariances"], dtype=float).reshape(k, d, d)
        labels = np.asarray(doc["supercluster_of_cluster"], dtype=int)
        mixture = MixtureModel(
            weights=weights,
            means=means,
            covariances=covs,
            log_likelihood=float(mix["log_likelihood"]),
            bic=float(mix["bic"]),
            n_samples=int(mix["n_samples"]),
            requested_components=int(mix["requested_components"]),
        )
        model = GmsdbModel(
            mixture=mixture,
            partition=SuperclusterPartition(labels),
            chosen_epsilon=float(doc["chosen_epsilon"]),
            delta_d=float(doc["delta_d"]),
            alpha=float(doc["alpha"]),
            mc_trace=tuple(McRecord(float(e), int(s), float(m)) for e, s, m in doc["mc_trace"]),
            dropped_clusters=tuple(int(v) for v in doc["dropped_clusters"]),
            bic_curve=tuple((int(a), int(b), float(c)) for a, b, c in doc["bic_curve"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from None
    if labels.shape != (k,) or (k and sorted(set(labels.tolist())) != list(range(labels.max() + 1))):
        raise ModelFormatError("supercluster map does not cover the mixture components")
    for name, arr in (("weights", weights), ("means", means), ("covariances", covs)):
        if not np.all(np.isfinite(arr)):
            raise ModelFormatError(f"non-finite values in {name}")
    return model


def save_model(model: GmsdbModel, path) -> None:
    """Write ``model`` as a JSON document.

    Floats are written with ``repr`` precision so loading reproduces them
    bit for bit. Timings are run metadata and are not stored.
    """
    text = json.dumps(model_to_dict(model), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_model(path) -> GmsdbModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"),
                         parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from None
    return model_from_dict(doc)


def _reject_constant(name):
    raise ModelFormatError(f"non-finite value {name} in model file")


def log_summary(model: GmsdbModel) -> str:
    last = model.mc_trace[-1]
    return (f"N_BIC={model.mixture.n_components} N_S={model.n_superclusters} "
            f"eps={model.chosen_epsilon:.4g} deltaD={model.delta_d:.4g} "
            f"iterations={len(model.mc_trace)} last MC={last.mc:.3g}")


__all__ = [
    "GmsdbConfig",
    "GmsdbModel",
    "fit",
    "predict_soft",
    "predict_hard",
    "save_model",
    "load_model",
    "search_partition",
    "select_iteration",
]
