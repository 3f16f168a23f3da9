"""Native k-means over feature vectors with deterministic seeding and proximities.

Distances are unweighted squared Euclidean on raw feature values: the
encoders already place related objects at close values, so normalisation
would destroy that geometry.  Results are canonical: inputs are processed in
objectId order and clusters are renumbered by smallest member id, making runs
reproducible and independent of input order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, KTooLarge, TooFewObjects
from .termfeatures import FeatureVector


@dataclass
class ClusterConfig:
    granularity: int = 3
    seed: int = 0
    max_iterations: int = 100
    restarts: int = 5

    def __post_init__(self):
        if not 1 <= self.granularity <= 5:
            raise ValueError("granularity must be in 1..5")


@dataclass
class Clustering:
    k: int
    assignment: dict[str, int]
    centroids: list[list[float]]
    proximities: dict[str, float]
    inertia: float
    max_distances: dict[int, float] = field(default_factory=dict)

    def members(self, cluster_id: int) -> list[str]:
        return sorted(i for i, c in self.assignment.items() if c == cluster_id)

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(
            frozenset(self.members(c)) for c in range(self.k)
        )

    def report(self) -> dict:
        return {
            "k": self.k,
            "clusters": [
                {
                    "id": c,
                    "members": [
                        {"objectId": m, "proximity": self.proximities[m]}
                        for m in self.members(c)
                    ],
                }
                for c in range(self.k)
            ],
        }


def cluster_count(object_count: int, granularity: int) -> int:
    """Heuristic cluster count: grows with corpus size and with granularity."""
    if object_count < 2:
        raise TooFewObjects(f"cannot cluster {object_count} objects")
    if not 1 <= granularity <= 5:
        raise ValueError("granularity must be in 1..5")
    return max(2, math.ceil(object_count / (10 - granularity)))


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = np.sum((X - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[c] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centroids[c]) ** 2, axis=1))
    return centroids


def _assign(X: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = np.sum((X[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2


def _repair_empty(X, centroids, labels, d2):
    # re-seed each empty centroid at the point farthest from its own centroid
    k = centroids.shape[0]
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels
        own = d2[np.arange(X.shape[0]), labels]
        far = int(np.argmax(own))
        centroids[empty[0]] = X[far]
        labels, d2 = _assign(X, centroids)


def _lloyd(X, k, rng, max_iterations):
    centroids = _kmeanspp(X, k, rng)
    labels = None
    prev_inertia = math.inf
    for _ in range(max_iterations):
        new_labels, d2 = _assign(X, centroids)
        new_labels = _repair_empty(X, centroids, new_labels, d2)
        for j in range(k):
            centroids[j] = X[new_labels == j].mean(axis=0)
        inertia = float(np.sum((X - centroids[new_labels]) ** 2))
        assert inertia <= prev_inertia * (1 + 1e-12) + 1e-9, "WCSS increased"
        prev_inertia = inertia
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    return labels, centroids, prev_inertia


def kmeans(vectors: list[FeatureVector], k: int, config: ClusterConfig) -> Clustering:
    """Best-of-restarts Lloyd iteration, deterministic for fixed inputs and seed.

    When the input holds fewer distinct vectors than k, k shrinks to the
    number of distinct vectors so no cluster comes back empty.
    """
    if not vectors:
        raise TooFewObjects("no vectors to cluster")
    lengths = {len(v.values) for v in vectors}
    if len(lengths) != 1:
        raise DimensionMismatch(f"mixed vector lengths {sorted(lengths)}")
    ids = [v.object_id for v in vectors]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate object ids")
    if k > len(vectors):
        raise KTooLarge(f"k={k} exceeds {len(vectors)} vectors")
    if k < 1:
        raise ValueError("k must be positive")

    order = sorted(range(len(vectors)), key=lambda i: ids[i])
    sorted_ids = [ids[i] for i in order]
    X = np.array([vectors[i].values for i in order], dtype=float)
    k_eff = min(k, np.unique(X, axis=0).shape[0])

    rng = np.random.default_rng(config.seed)
    best = None
    for _ in range(max(1, config.restarts)):
        labels, centroids, inertia = _lloyd(X, k_eff, rng, config.max_iterations)
        if best is None or inertia < best[2]:
            best = (labels, centroids, inertia)
    labels, centroids, inertia = best

    # renumber clusters by smallest contained objectId
    cluster_min = {}
    for oid, lab in zip(sorted_ids, labels):
        cluster_min.setdefault(int(lab), oid)
    relabel = {
        old: new
        for new, old in enumerate(sorted(cluster_min, key=cluster_min.get))
    }
    assignment = {oid: relabel[int(lab)] for oid, lab in zip(sorted_ids, labels)}
    new_centroids = [[0.0] * X.shape[1] for _ in range(k_eff)]
    for old, new in relabel.items():
        new_centroids[new] = [float(x) for x in centroids[old]]

    dists = {
        oid: float(np.linalg.norm(np.array(v) - np.array(new_centroids[assignment[oid]])))
        for oid, v in zip(sorted_ids, (X[i] for i in range(len(sorted_ids))))
    }
    max_d = {
        c: max((dists[oid] for oid, cc in assignment.items() if cc == c), default=0.0)
        for c in range(k_eff)
    }
    proximities = {
        oid: 1.0 if max_d[c] == 0.0 else 1.0 - dists[oid] / max_d[c]
        for oid, c in assignment.items()
    }
    return Clustering(k_eff, assignment, new_centroids, proximities, inertia, max_d)


def proximity(vector: FeatureVector, cluster_id: int, clustering: Clustering) -> float:
    """1 at the centroid, 0 at the cluster's farthest member, 1 for singletons."""
    d = float(
        np.linalg.norm(np.array(vector.values) - np.array(clustering.centroids[cluster_id]))
    )
    big = clustering.max_distances.get(cluster_id, 0.0)
    if big == 0.0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - d / big))
