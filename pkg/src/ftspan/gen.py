"""Deterministic point-set generators (uniform, clustered, grid, line)."""

from __future__ import annotations

import numpy as np

from ftspan.errors import InputError
from ftspan.metric import Metric

KINDS = ("uniform", "clustered", "grid", "line")


def generate(kind: str, n: int, dim: int = 2, seed: int = 0) -> np.ndarray:
    """Generate n duplicate-free points of the given distribution."""
    if n < 1:
        raise InputError("n must be >= 1")
    if dim < 1:
        raise InputError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        coords = rng.random((n, dim))
    elif kind == "clustered":
        k = max(1, n // 32)
        centers = rng.random((k, dim))
        which = rng.integers(0, k, size=n)
        coords = centers[which] + rng.normal(0.0, 0.03, size=(n, dim))
    elif kind == "grid":
        side = 1
        while side ** dim < n:
            side += 1
        axes = np.arange(side, dtype=np.float64)
        mesh = np.stack(np.meshgrid(*([axes] * dim), indexing="ij"), axis=-1)
        coords = mesh.reshape(-1, dim)[:n]
    elif kind == "line":
        xs = np.sort(rng.random(n))
        coords = xs.reshape(n, 1)
        dim = 1
    else:
        raise InputError(f"unknown distribution {kind!r} (choose from {KINDS})")
    coords = _reject_duplicates(coords, rng)
    if kind == "line":
        coords = np.sort(coords, axis=0)
    return coords


def _reject_duplicates(coords: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    for _ in range(64):
        order = np.lexsort(coords.T[::-1])
        same = np.all(coords[order][1:] == coords[order][:-1], axis=1)
        if not same.any():
            return coords
        dup_rows = order[1:][same]
        coords = coords.copy()
        coords[dup_rows] += rng.normal(0.0, 1e-9, size=(len(dup_rows), coords.shape[1]))
    raise InputError("could not de-duplicate generated points")


def instance(kind: str, n: int, dim: int = 2, seed: int = 0) -> Metric:
    """Generated, not yet normalized metric."""
    return Metric(coords=generate(kind, n, dim, seed))
