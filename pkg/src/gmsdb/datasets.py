"""Seeded synthetic test sets with ground-truth labels.

Blobs, interlocking horseshoes and nested rings, each optionally overlaid
with uniform background noise that carries its own label (``NOISE_LABEL``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import derive_rng

NOISE_LABEL = -1
DEFAULT_NOISE = 0.1


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    spec: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.labels)


def _padded_bbox(points: np.ndarray, pad: float = 0.1) -> list[list[float]]:
    lo, hi = points.min(axis=0), points.max(axis=0)
    margin = pad * (hi - lo)
    return [(lo - margin).tolist(), (hi + margin).tolist()]


def _with_noise(points, labels, noise_frac, bbox, rng):
    if not 0.0 <= noise_frac < 1.0:
        raise ValueError(f"noise fraction must lie in [0, 1), got {noise_frac!r}")
    n_noise = int(round(noise_frac * len(points)))
    if n_noise == 0:
        return points, labels, bbox
    if bbox is None:
        bbox = _padded_bbox(points)
    lo, hi = np.asarray(bbox[0], dtype=float), np.asarray(bbox[1], dtype=float)
    if lo.shape != (points.shape[1],) or np.any(hi <= lo):
        raise ValueError(f"invalid noise bounding box {bbox!r}")
    noise = rng.uniform(lo, hi, size=(n_noise, points.shape[1]))
    return (np.vstack([points, noise]),
            np.concatenate([labels, np.full(n_noise, NOISE_LABEL)]),
            [lo.tolist(), hi.tolist()])


def gen_blobs(centers, std=1.0, n_per=200, seed: int = 0) -> LabeledDataset:
    """Isotropic Gaussian blobs, labelled by center index."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    k, d = centers.shape
    if k < 1 or n_per < 1:
        raise ValueError("need at least one center and one point per blob")
    stds = np.broadcast_to(np.asarray(std, dtype=float), (k,))
    rng = derive_rng(seed, "generator", "blobs")
    points = np.vstack([rng.normal(c, s, size=(n_per, d)) for c, s in zip(centers, stds)])
    labels = np.repeat(np.arange(k), n_per)
    spec = {"generator": "blobs", "centers": centers.tolist(), "std": stds.tolist(),
            "n_per": int(n_per), "seed": int(seed)}
    return LabeledDataset(points, labels, spec)


def gen_nested_rings(radii, n=300, radial_jitter=0.05, noise_frac=0.0, bbox=None,
                     seed: int = 0) -> LabeledDataset:
    """Concentric 2-D rings with Gaussian radial jitter and optional uniform noise.

    ``n`` is the point count per ring (scalar or one value per ring).
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 1 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be a strictly increasing sequence")
    counts = np.broadcast_to(np.asarray(n, dtype=int), radii.shape)
    if np.any(counts < 1):
        raise ValueError("each ring needs at least one point")
    rng = derive_rng(seed, "generator", "rings")
    parts = []
    for r, m in zip(radii, counts):
        angle = rng.uniform(0.0, 2.0 * np.pi, m)
        radius = r + radial_jitter * rng.standard_normal(m) if radial_jitter > 0 else np.full(m, r)
        parts.append(np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]))
    points = np.vstack(parts)
    labels = np.repeat(np.arange(radii.size), counts)
    if bbox is None and noise_frac > 0:
        edge = radii[-1] * 1.2
        bbox = [[-edge, -edge], [edge, edge]]
    points, labels, bbox = _with_noise(points, labels, noise_frac, bbox, rng)
    spec = {"generator": "rings", "radii": radii.tolist(), "n": counts.tolist(),
            "radial_jitter": float(radial_jitter), "noise_frac": float(noise_frac),
            "bbox": bbox, "seed": int(seed)}
    return LabeledDataset(points, labels, spec)


def gen_horseshoes(arcs=2, n=300, jitter=0.05, offset=(1.0, 0.5), noise_frac=0.0,
                   bbox=None, seed: int = 0) -> LabeledDataset:
    """Interlocking unit half-circles.

    Arc ``k`` is centred at ``(k*dx, (k % 2)*dy)`` and opens downward for even
    ``k``, upward for odd ``k``, so neighbouring arcs interlock as in the
    familiar two-moons layout.
    """
    if arcs < 1 or n < 1:
        raise ValueError("need at least one arc and one point per arc")
    dx, dy = offset
    rng = derive_rng(seed, "generator", "horseshoes")
    parts = []
    for k in range(arcs):
        t = rng.uniform(0.0, np.pi, n)
        sign = 1.0 if k % 2 == 0 else -1.0
        center = np.array([k * dx, (k % 2) * dy])
        arc = center + sign * np.column_stack([np.cos(t), np.sin(t)])
        if jitter > 0:
            arc = arc + jitter * rng.standard_normal(arc.shape)
        parts.append(arc)
    points = np.vstack(parts)
    labels = np.repeat(np.arange(arcs), n)
    points, labels, bbox = _with_noise(points, labels, noise_frac, bbox, rng)
    spec = {"generator": "horseshoes", "arcs": int(arcs), "n": int(n), "jitter": float(jitter),
            "offset": [float(dx), float(dy)], "noise_frac": float(noise_frac), "bbox": bbox,
            "seed": int(seed)}
    return LabeledDataset(points, labels, spec)


def _blob_noise(ds: LabeledDataset, noise_frac: float, seed: int) -> LabeledDataset:
    rng = derive_rng(seed, "generator", "blob-noise")
    points, labels, bbox = _with_noise(ds.points, ds.labels, noise_frac, None, rng)
    return LabeledDataset(points, labels, {**ds.spec, "noise_frac": float(noise_frac),
                                           "bbox": bbox})


def _triangle(side):
    return [[0.0, 0.0], [side, 0.0], [side / 2.0, side * np.sqrt(3.0) / 2.0]]


def _pentagon(radius):
    angles = np.pi / 2 + 2 * np.pi * np.arange(5) / 5
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles)]).tolist()


def _square(half):
    return [[-half, -half], [half, half]]


PRESETS = {
    "grains": lambda noise, seed: _blob_noise(
        gen_blobs(_triangle(10.0), 1.0, 200, seed), noise, seed),
    "big-blobs": lambda noise, seed: _blob_noise(
        gen_blobs(_triangle(3.5), 1.0, 200, seed), noise, seed),
    "medium-blobs": lambda noise, seed: _blob_noise(
        gen_blobs(_triangle(7.0), 1.0, 200, seed), noise, seed),
    "small-blobs": lambda noise, seed: _blob_noise(
        gen_blobs(_pentagon(4.0), 0.4, 120, seed), noise, seed),
    "horseshoes2": lambda noise, seed: gen_horseshoes(2, 300, 0.05, noise_frac=noise, seed=seed),
    "horseshoes3": lambda noise, seed: gen_horseshoes(3, 300, 0.05, noise_frac=noise, seed=seed),
    # ring noise spans 1.4x the outer radius so corner noise stays sparse
    "rings2": lambda noise, seed: gen_nested_rings(
        [0.5, 1.0], 500, 0.05, noise, _square(1.4), seed=seed),
    "rings3": lambda noise, seed: gen_nested_rings(
        [0.25, 0.75, 1.25], 500, 0.05, noise, _square(1.75), seed=seed),
}


def preset_names() -> list[str]:
    return sorted(PRESETS) + sorted(f"{name}+noise" for name in PRESETS)


def make_preset(name: str, seed: int = 0, noise: float | None = None) -> LabeledDataset:
    """Build a named preset. A ``+noise`` suffix selects the default noise
    fraction; an explicit ``noise`` overrides either form.
    """
    base, plus, suffix = name.partition("+")
    if base not in PRESETS or (plus and suffix != "noise"):
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")
    if noise is None:
        noise = DEFAULT_NOISE if plus else 0.0
    ds = PRESETS[base](noise, seed)
    return LabeledDataset(ds.points, ds.labels, {"preset": name, **ds.spec})
