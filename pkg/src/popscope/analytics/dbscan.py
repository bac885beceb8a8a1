"""Textbook DBSCAN on 2-D projections.

Neighborhoods are inclusive (distance <= eps) and contain the point
itself. Border points join the first core cluster that reaches them in
scan order; cluster ids count up in first-touch order over ascending
point index. Fixing both makes results exactly reproducible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class DbscanParams:
    eps: float
    min_pts: int

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be positive")


@dataclass(frozen=True)
class ClusterAssignment:
    labels: tuple[int, ...]  # -1 = noise
    n_clusters: int

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(v) for v in self.labels))
        present = {v for v in self.labels if v >= 0}
        if present != set(range(self.n_clusters)):
            raise ValueError("labels must cover 0..n_clusters-1 exactly")

    def cluster_sizes(self) -> dict[int, int]:
        sizes: dict[int, int] = {}
        for label in self.labels:
            sizes[label] = sizes.get(label, 0) + 1
        return sizes


def dbscan(points: np.ndarray, params: DbscanParams) -> ClusterAssignment:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if not np.all(np.isfinite(points)):
        raise ValueError("non-finite points")
    n = points.shape[0]
    if n == 0:
        return ClusterAssignment(labels=(), n_clusters=0)

    D = kernels.pairwise_sq_dists(points)
    within = D <= params.eps * params.eps  # includes self (diagonal is 0)
    neighbor_counts = within.sum(axis=1)
    core = neighbor_counts >= params.min_pts

    labels = np.full(n, -1, dtype=int)
    cluster_id = 0
    for seed in range(n):
        if not core[seed] or labels[seed] != -1:
            continue
        labels[seed] = cluster_id
        queue = deque([seed])
        while queue:
            point = queue.popleft()
            for neighbor in np.flatnonzero(within[point]):
                if labels[neighbor] == -1:
                    labels[neighbor] = cluster_id
                    if core[neighbor]:
                        queue.append(neighbor)
        cluster_id += 1
    return ClusterAssignment(labels=tuple(labels), n_clusters=cluster_id)
