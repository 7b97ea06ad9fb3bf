"""Acceptance criteria, one test per criterion.

Every test appends a ``PASS``/``FAIL`` line to the summary printed at the
end of the pytest run, then asserts. The seeded preset fits are shared
between criteria through a module cache.
"""

import math
import time
from collections import Counter
from statistics import median

import numpy as np
import pytest
from scipy.sparse.csgraph import connected_components

from gmsdb.cli import main
from gmsdb.datasets import make_preset, preset_names
from gmsdb.distance import PERCENT, cluster_distance_matrix, pair_samples
from gmsdb.gmm import EMConfig, bic_sweep, fit_gmm, hard_assign, responsibilities
from gmsdb.grouping import (
    dbscan_precomputed,
    delta_d,
    matrix_quality,
    matrix_quality_pvalue,
)
from gmsdb.metrics import pwtn_fraction, pwtp_fraction, rand_index_fraction, run_interval
from gmsdb.numerics import percentile
from gmsdb.pipeline import GmsdbConfig, fit, predict_hard, predict_soft

SEEDS = range(10)
_FITS = {}


def fitted(preset, seed):
    """Default-configuration fit (alpha 0.1, n-max 50) of a seeded preset."""
    key = (preset, seed)
    if key not in _FITS:
        ds = make_preset(preset, seed=seed)
        start = time.perf_counter()
        model = fit(ds.points, GmsdbConfig(seed=seed))
        wall = time.perf_counter() - start
        ri = float(rand_index_fraction(ds.labels, predict_hard(model, ds.points)))
        _FITS[key] = (ds, model, ri, wall)
    return _FITS[key]


def record(report, number, ok, detail):
    report.append(f"criterion {number:2d}  {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_01_grains(acceptance_report):
    runs = [fitted("grains", s) for s in SEEDS]
    ris = [r[2] for r in runs]
    low, high = run_interval(ris)
    slowest = max(r[3] for r in runs)
    ok = low <= 1.0 <= high and median(ris) >= 0.99 and slowest <= 120.0
    detail = (f"grains: RI interval {low:.4f}..{high:.4f}, median {median(ris):.4f}, "
              f"slowest run {slowest:.1f}s")
    assert record(acceptance_report, 1, ok, detail), detail


def test_criterion_02_two_rings(acceptance_report):
    runs = [fitted("rings2", s) for s in SEEDS]
    ris = [r[2] for r in runs]
    twos = sum(r[1].n_superclusters == 2 for r in runs)
    ok = median(ris) >= 0.95 and twos >= 8
    detail = (f"rings2: median RI {median(ris):.4f}, N_S=2 in {twos}/10 "
              f"(N_S {[r[1].n_superclusters for r in runs]})")
    assert record(acceptance_report, 2, ok, detail), detail


def test_criterion_03_three_rings_noise(acceptance_report):
    runs = [fitted("rings3+noise", s) for s in SEEDS]
    ris = [r[2] for r in runs]
    counts = [r[1].n_superclusters for r in runs]
    tally = Counter(counts)
    top = max(tally.values())
    modes = sorted(k for k, v in tally.items() if v == top)
    ok = modes == [4] and 0.90 <= median(ris) <= 1.0
    detail = f"rings3+noise: N_S {counts} (mode {modes}), median RI {median(ris):.4f}"
    assert record(acceptance_report, 3, ok, detail), detail


def test_criterion_04_chi2_threshold_and_mc_forms(acceptance_report):
    closed = math.sqrt(-4.0 * math.log(0.1))
    dd = delta_d(0.1, 2)
    agree = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 9))
        upper = np.triu(rng.uniform(0.5 * dd, 1.5 * dd, (k, k)), 1)
        D = upper + upper.T
        agree += matrix_quality(D, dd) == matrix_quality_pvalue(D, 0.1, 2)
    ok = abs(dd - closed) <= 1e-5 and agree == 100
    detail = f"deltaD(0.1,2)={dd:.6f} vs closed form {closed:.6f}; MC forms agree {agree}/100"
    assert record(acceptance_report, 4, ok, detail), detail


def _canonical(labels):
    seen = {}
    return [seen.setdefault(int(v), len(seen)) for v in labels]


def test_criterion_05_dbscan_oracle(acceptance_report):
    matches = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 9))
        upper = np.triu(rng.integers(1, 6, (n, n)).astype(float), 1)
        R = upper + upper.T
        eps = float(rng.choice(R[R > 0])) if n > 1 else 1.0
        ours = dbscan_precomputed(R, eps, min_pts=1).labels
        # brute force: union-find over all pairs within eps
        parent = list(range(n))

        def root(a):
            while parent[a] != a:
                a = parent[a]
            return a

        for i in range(n):
            for j in range(n):
                if R[i, j] <= eps:
                    parent[root(i)] = root(j)
        brute = [root(i) for i in range(n)]
        _, scipy_cc = connected_components((R <= eps).astype(int), directed=False)
        matches += _canonical(ours) == _canonical(brute) == _canonical(scipy_cc)
    ok = matches == 100
    detail = f"DBSCAN(minPts=1) equals connected components on {matches}/100 matrices"
    assert record(acceptance_report, 5, ok, detail), detail


def test_criterion_06_rand_index_oracle(acceptance_report):
    exact = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 51))
        a = rng.integers(0, rng.integers(1, 7), n)
        b = rng.integers(0, rng.integers(1, 7), n)
        tp = tn = 0
        for i in range(n):
            for j in range(i + 1, n):
                same_a, same_b = a[i] == a[j], b[i] == b[j]
                tp += bool(same_a and same_b)
                tn += bool(not same_a and not same_b)
        pairs = n * (n - 1) // 2
        ri, p, q = rand_index_fraction(a, b), pwtp_fraction(a, b), pwtn_fraction(a, b)
        exact += (p * pairs == tp and q * pairs == tn and ri * pairs == tp + tn
                  and ri == p + q)
    ok = exact == 100
    detail = f"RI/PWTP/PWTN equal pair enumeration and RI = PWTP + PWTN on {exact}/100"
    assert record(acceptance_report, 6, ok, detail), detail


def test_criterion_07_em_properties(acceptance_report):
    worst_drop, mle_err, picks = 0.0, 0.0, []
    for seed in SEEDS:
        rng = np.random.default_rng(1000 + seed)
        X = np.vstack([rng.normal([0.0, 0.0], 1.0, (200, 2)),
                       rng.normal([10.0, 0.0], 1.0, (200, 2))])
        sweep = bic_sweep(X, 1, 10, restarts=3, seed=seed)
        for m in sweep:
            trace = np.asarray(m.ll_trace)
            drops = (trace[:-1] - trace[1:]) / np.abs(trace[:-1])
            worst_drop = max(worst_drop, float(drops.max(initial=0.0)))
        picks.append(min(sweep, key=lambda m: (m.bic, m.requested_components)).n_components)

        single = fit_gmm(X, 1, seed=seed, config=EMConfig(ridge=0.0))
        mean = X.mean(axis=0)
        cov = (X - mean).T @ (X - mean) / len(X)
        mle_err = max(mle_err,
                      float(np.max(np.abs(single.means[0] - mean) / np.abs(mean).max())),
                      float(np.max(np.abs(single.covariances[0] - cov) / np.abs(cov).max())))
    twos = picks.count(2)
    ok = worst_drop <= 1e-9 and mle_err <= 1e-9 and twos >= 9
    detail = (f"largest relative LL decrease {worst_drop:.2e}, N=1 MLE relative error "
              f"{mle_err:.2e}, BIC picks N=2 in {twos}/10 (picks {picks})")
    assert record(acceptance_report, 7, ok, detail), detail


def test_criterion_08_soft_conservation(acceptance_report):
    models = [fitted("grains", 0)[1], fitted("rings2", 0)[1], fitted("rings3+noise", 0)[1]]
    worst, argmax_ok = 0.0, True
    for k, model in enumerate(models):
        rng = np.random.default_rng(k)
        Q = rng.uniform(-15, 25, size=(1000, 2))
        soft = predict_soft(model, Q)
        worst = max(worst, float(np.abs(soft.sum(axis=1) - 1.0).max()))
        argmax_ok &= bool(np.array_equal(predict_hard(model, Q), soft.argmax(axis=1)))
    ok = worst <= 1e-9 and argmax_ok
    detail = (f"max |row sum - 1| = {worst:.1e} over 3 models x 1000 queries; "
              f"hard == argmax(soft): {argmax_ok}")
    assert record(acceptance_report, 8, ok, detail), detail


def test_criterion_09_determinism(acceptance_report, tmp_path):
    data = tmp_path / "grains.csv"
    main(["gen", "--preset", "grains", "--seed", "5", "--out", str(data)])
    for name in ("a.json", "b.json"):
        assert main(["fit", "--in", str(data), "--model", str(tmp_path / name)]) == 0
    same_file = (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    ds, model, _, _ = fitted("rings3+noise", 1)
    X = ds.points
    labels = hard_assign(responsibilities(model.mixture, X))
    mix = model.mixture
    serial = cluster_distance_matrix(X, labels, mix, seed=1, n_jobs=1).entries
    threaded = cluster_distance_matrix(X, labels, mix, seed=1, n_jobs=4).entries
    # evaluate the ordered pairs in a shuffled order and assemble by hand
    m = mix.n_components
    pairs = [(a, b) for a in range(m) for b in range(m) if a != b]
    np.random.default_rng(0).shuffle(pairs)
    directed = np.zeros((m, m))
    for a, b in pairs:
        directed[a, b] = percentile(pair_samples(X, labels, mix, a, b, seed=1), PERCENT)
    shuffled = np.maximum(directed, directed.T)
    same_matrix = np.array_equal(serial, threaded) and np.array_equal(serial, shuffled)
    ok = same_file and same_matrix
    detail = (f"identical fit model files: {same_file}; Stage-2 matrix identical across "
              f"serial, 4 threads and shuffled pair order: {same_matrix}")
    assert record(acceptance_report, 9, ok, detail), detail


def test_criterion_10_stage_timing_ratio(acceptance_report):
    ratios = {}
    for name in preset_names():
        _, model, _, _ = fitted(name, 0)
        t = model.stage_timings
        ratios[name] = t["stage34"] / t["total"]
    worst = max(ratios, key=ratios.get)
    ok = all(r < 0.10 for r in ratios.values())
    detail = (f"Stage 3-4 share of total time below 10% on {sum(r < 0.1 for r in ratios.values())}"
              f"/{len(ratios)} presets (largest {ratios[worst]:.2%} on {worst})")
    assert record(acceptance_report, 10, ok, detail), detail
