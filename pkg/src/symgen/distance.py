"""Nearest-neighbour distances between point clouds."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree


def as_cloud(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point array, got shape {arr.shape}")
    return arr


def bbox_diagonal(points) -> float:
    pts = as_cloud(points)
    if len(pts) == 0:
        return 0.0
    return float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))


def centroid_span(points) -> float:
    """Diameter of the smallest centroid-centred ball holding the cloud.

    Unlike the bounding-box diagonal this does not change when the cloud is
    rotated, and it lies between the true diameter and twice that.
    """
    pts = as_cloud(points)
    if len(pts) == 0:
        return 0.0
    return 2.0 * float(np.sqrt(np.max(np.sum((pts - pts.mean(axis=0)) ** 2, axis=1))))


def chamfer(p, q, squared: bool = True, tree_p: cKDTree | None = None) -> float:
    """Symmetric Chamfer distance.

    Mean over ``p`` of the (squared) distance to the nearest point of ``q``
    plus the same term with the roles swapped.  ``squared=False`` uses plain
    Euclidean nearest distances instead.  A prebuilt tree for ``p`` can be
    passed in when ``p`` is compared against many clouds.
    """
    p = as_cloud(p)
    q = as_cloud(q)
    if len(p) == 0 or len(q) == 0:
        raise ValueError("chamfer distance needs two non-empty clouds")
    if tree_p is None:
        tree_p = cKDTree(p)
    d_qp, _ = tree_p.query(q)
    d_pq, _ = cKDTree(q).query(p)
    if squared:
        return float(np.mean(d_pq ** 2) + np.mean(d_qp ** 2))
    return float(np.mean(d_pq) + np.mean(d_qp))
