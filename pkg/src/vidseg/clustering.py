"""K-Means over first-frame features, producing the initial coarse mask.

Plain Lloyd iterations with k-means++ seeding. Everything is exact and
seeded: two runs with the same inputs and seed produce bit-identical
centroids and labels, and the recorded inertia trace is non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatch, NonFiniteInput, TooFewPoints


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray  # (L, C) float64
    L: int
    seed: int
    inertia: float
    inertia_history: tuple[float, ...]


def _sq_dist_to_centroids(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, L) squared Euclidean distances, direct form for tie stability."""
    return np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=-1)


def _plusplus_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=-1)
    for i in range(1, k):
        probs = d2 / d2.sum()
        centroids[i] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centroids[i]) ** 2, axis=-1))
    return centroids


def kmeans_fit(
    points: np.ndarray,
    k: int,
    seed: int,
    max_iter: int = 300,
    tol: float = 1e-4,
) -> tuple[ClusterModel, np.ndarray]:
    """Cluster points into k groups.

    Returns the fitted model and one label per point. Empty clusters are
    re-seeded to the point farthest from its assigned centroid so the
    cluster count stays fixed. Raises TooFewPoints when k exceeds the
    number of distinct points and NonFiniteInput on NaN/inf coordinates.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"points must be (n, C), got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise NonFiniteInput("points contain NaN or inf")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = np.unique(pts, axis=0).shape[0]
    if k > n_distinct:
        raise TooFewPoints(f"k={k} exceeds {n_distinct} distinct points")

    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(pts, k, rng)

    history: list[float] = []
    labels = np.zeros(pts.shape[0], dtype=np.int64)
    for _ in range(max_iter):
        d2 = _sq_dist_to_centroids(pts, centroids)
        labels = np.argmin(d2, axis=1)
        inertia = float(np.sum(d2[np.arange(pts.shape[0]), labels]))
        if history:
            assert inertia <= history[-1], "inertia increased during Lloyd iteration"
        history.append(inertia)

        # re-seed empty clusters to the point farthest from its own centroid
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            own = d2[np.arange(pts.shape[0]), labels].copy()
            for empty in np.flatnonzero(counts == 0):
                far = int(np.argmax(own))
                labels[far] = empty
                centroids[empty] = pts[far]
                own[far] = -1.0  # do not steal the same point twice

        new_centroids = centroids.copy()
        for l in range(k):
            members = labels == l
            if members.any():
                new_centroids[l] = pts[members].mean(axis=0)
        movement = float(np.max(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1))))
        centroids = new_centroids
        if movement < tol:
            break

    # final assignment against the converged centroids
    d2 = _sq_dist_to_centroids(pts, centroids)
    labels = np.argmin(d2, axis=1)
    inertia = float(np.sum(d2[np.arange(pts.shape[0]), labels]))
    assert inertia <= history[-1], "final inertia increased"
    history.append(inertia)

    model = ClusterModel(
        centroids=centroids,
        L=k,
        seed=seed,
        inertia=inertia,
        inertia_history=tuple(history),
    )
    return model, labels.astype(np.int32)


def kmeans_assign(model: ClusterModel, grid: np.ndarray) -> np.ndarray:
    """Label every cell of an (h, w, C) grid by its nearest centroid.

    Ties break toward the lowest centroid index.
    """
    grid = np.asarray(grid)
    if grid.ndim != 3 or grid.shape[2] != model.centroids.shape[1]:
        raise ChannelMismatch(
            f"grid has shape {grid.shape}, model expects (h, w, {model.centroids.shape[1]})"
        )
    flat = grid.reshape(-1, grid.shape[2]).astype(np.float64)
    labels = np.argmin(_sq_dist_to_centroids(flat, model.centroids), axis=1)
    return labels.reshape(grid.shape[:2]).astype(np.int32)
