"""Lloyd's k-means with k-means++ seeding, written for determinism.

A fixed seed plus identical input yields an identical clustering. Empty
clusters that appear mid-iteration are re-seeded from the point farthest
from its assigned centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class KMeansResult:
    k: int
    centroids: np.ndarray          # (k, d)
    labels: np.ndarray             # (n,) int
    inertia: float
    n_iter: int
    inertia_history: list[float]

    def assign(self, points: np.ndarray) -> np.ndarray:
        """Nearest-centroid labels for arbitrary points."""
        return _nearest(points, self.centroids)[0]


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared euclidean distances.
    return (
        np.einsum("nd,nd->n", points, points)[:, None]
        - 2.0 * points @ centroids.T
        + np.einsum("kd,kd->k", centroids, centroids)[None, :]
    )


def _nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = _sq_dists(points, centroids)
    labels = np.argmin(d2, axis=1)
    return labels, np.maximum(d2[np.arange(len(points)), labels], 0.0)


def _plus_plus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = np.maximum(((points - centroids[0]) ** 2).sum(axis=1), 0.0)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centroids[i] = points[rng.integers(n)]
            continue
        idx = rng.choice(n, p=d2 / total)
        centroids[i] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[i]) ** 2).sum(axis=1))
        d2 = np.maximum(d2, 0.0)
    return centroids


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-6,
) -> KMeansResult:
    """Cluster points into k mutually exclusive groups.

    Iterates until the largest centroid shift falls below tol or max_iter
    is reached. Inertia is non-increasing across iterations.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2:
        raise ValueError("points must be a 2-d array")
    if k < 1:
        raise ValueError("k must be positive")
    if len(np.unique(points, axis=0)) < k:
        raise ValueError("k exceeds the number of distinct points")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(points, k, rng)
    labels, d2 = _nearest(points, centroids)
    history = [float(d2.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_centroids = centroids.copy()
        for c in range(k):
            mask = labels == c
            if mask.any():
                new_centroids[c] = points[mask].mean(axis=0)
            else:
                # Re-seed a dead centroid from the farthest point.
                far = int(np.argmax(d2))
                new_centroids[c] = points[far]
                d2[far] = 0.0
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        labels, d2 = _nearest(points, centroids)
        history.append(float(d2.sum()))
        if shift < tol:
            break
    return KMeansResult(
        k=k,
        centroids=centroids,
        labels=labels,
        inertia=history[-1],
        n_iter=n_iter,
        inertia_history=history,
    )


def is_lloyd_fixed_point(points: np.ndarray, result: KMeansResult, atol: float = 1e-9) -> bool:
    """True when every point sits with its nearest centroid and every
    non-empty centroid equals its cluster mean."""
    labels, _ = _nearest(points, result.centroids)
    d2 = _sq_dists(points, result.centroids)
    own = d2[np.arange(len(points)), result.labels]
    if np.any(own > d2.min(axis=1) + atol):
        return False
    for c in range(result.k):
        mask = result.labels == c
        if mask.any():
            if not np.allclose(result.centroids[c], points[mask].mean(axis=0), atol=1e-8):
                return False
    return True
