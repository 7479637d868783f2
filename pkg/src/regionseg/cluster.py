"""Clustering under a weighted Euclidean metric.

The metric is sqrt(sum_i w_i (x_i - y_i)^2) with non-negative weights on
the unit simplex, which equals the plain Euclidean distance after scaling
every feature by sqrt(w_i). The estimators exploit that internally: they
work on the scaled matrix while keeping centroids in the original space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from ._validation import (
    as_feature_matrix,
    check_weights,
    derive_seed,
    uniform_weights,
)


@dataclass(frozen=True)
class KMeansConfig:
    k: int | None = None
    max_iter: int = 300
    tol: float = 1e-4
    n_init: int = 10
    seed: int | None = None

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")


@dataclass(frozen=True)
class DbscanConfig:
    eps: float | str = "auto"
    min_samples: int | None = None

    def __post_init__(self):
        if not isinstance(self.eps, str) and self.eps <= 0:
            raise ValueError("explicit eps must be > 0")


def weighted_distance(x, y, weights) -> float:
    """Weighted Euclidean distance between two points."""
    return math.sqrt(weighted_sq_distance(x, y, weights))


def weighted_sq_distance(x, y, weights) -> float:
    """Squared variant used by inner loops."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"point shapes differ: {x.shape} vs {y.shape}")
    w = check_weights(weights, x.shape[-1])
    diff = x - y
    return float((w * diff * diff).sum())


def _pairwise_sq(Za: np.ndarray, Zb: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between scaled row sets, clipped at 0."""
    sq = (
        (Za * Za).sum(axis=1)[:, None]
        + (Zb * Zb).sum(axis=1)[None, :]
        - 2.0 * (Za @ Zb.T)
    )
    return np.maximum(sq, 0.0)


class WeightedKMeans(BaseEstimator, ClusterMixin):
    """Lloyd k-means under the weighted metric with k-means++ seeding.

    Runs ``n_init`` restarts (substream seeds derived from random_state, so
    the result never depends on scheduling) and keeps the lowest-inertia
    one. Empty clusters are repaired by reseeding them at the point
    currently farthest from its assigned centroid. Iteration stops when the
    maximum centroid coordinate shift drops below ``tol``.

    Attributes after fit: ``cluster_centers_``, ``labels_``, ``inertia_``,
    ``davies_bouldin_`` (None for a single cluster, may be ``inf`` when
    centroids coincide), ``n_iter_``, ``inertia_history_``.
    """

    def __init__(self, n_clusters: int = 2, weights=None, n_init: int = 10,
                 max_iter: int = 300, tol: float = 1e-4, random_state=None):
        self.n_clusters = n_clusters
        self.weights = weights
        self.n_init = n_init
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _resolve_weights(self, d: int) -> np.ndarray:
        if self.weights is None:
            return uniform_weights(d)
        return check_weights(self.weights, d)

    def fit(self, X, y=None):
        X = as_feature_matrix(X)
        n, d = X.shape
        k = int(self.n_clusters)
        if k < 1:
            raise ValueError("n_clusters must be >= 1")
        if self.max_iter < 1 or self.n_init < 1:
            raise ValueError("max_iter and n_init must be >= 1")
        if n < k:
            raise ValueError(f"{n} rows cannot support {k} clusters")
        w = self._resolve_weights(d)
        sqrt_w = np.sqrt(w)
        Z = X * sqrt_w

        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_init)
        best = None
        for child in seeds:
            rng = np.random.default_rng(child)
            result = self._single_run(X, Z, sqrt_w, k, rng)
            if best is None or result[2] < best[2]:
                best = result
        labels, centers, inertia, n_iter, history = best
        self.weights_ = w
        self.cluster_centers_ = centers
        self.labels_ = labels
        self.inertia_ = inertia
        self.n_iter_ = n_iter
        self.inertia_history_ = history
        if k >= 2:
            self.davies_bouldin_ = davies_bouldin(X, labels, centers, w)
        else:
            self.davies_bouldin_ = None
        return self

    def _single_run(self, X, Z, sqrt_w, k, rng):
        n = X.shape[0]
        centers = X[self._kmeanspp(Z, k, rng)].copy()
        history = []
        labels = None
        for it in range(1, self.max_iter + 1):
            labels, sq = self._assign(Z, centers, sqrt_w)
            labels, centers = self._repair_empty(X, labels, centers, sq, k)
            history.append(self._inertia(sq, labels))
            new_centers = self._update(X, labels, centers, k)
            shift = float(np.abs(new_centers - centers).max())
            centers = new_centers
            if shift < self.tol:
                break
        labels, sq = self._assign(Z, centers, sqrt_w)
        labels, centers = self._repair_empty(X, labels, centers, sq, k)
        inertia = self._inertia_exact(Z, centers, sqrt_w, labels)
        history.append(inertia)
        return labels, centers, inertia, it, np.array(history)

    @staticmethod
    def _assign(Z, centers, sqrt_w):
        sq = _pairwise_sq(Z, centers * sqrt_w)
        return sq.argmin(axis=1), sq

    @staticmethod
    def _inertia(sq, labels):
        return float(sq[np.arange(sq.shape[0]), labels].sum())

    @staticmethod
    def _inertia_exact(Z, centers, sqrt_w, labels):
        diff = Z - centers[labels] * sqrt_w
        return float((diff * diff).sum())

    @staticmethod
    def _repair_empty(X, labels, centers, sq, k):
        counts = np.bincount(labels, minlength=k)
        while np.any(counts == 0):
            empty = int(np.flatnonzero(counts == 0)[0])
            point_sq = sq[np.arange(X.shape[0]), labels]
            movable = np.flatnonzero(counts[labels] > 1)
            if movable.size == 0:
                break
            pick = movable[np.argmax(point_sq[movable])]
            counts[labels[pick]] -= 1
            labels = labels.copy()
            labels[pick] = empty
            counts[empty] = 1
            centers = centers.copy()
            centers[empty] = X[pick]
        return labels, centers

    @staticmethod
    def _update(X, labels, centers, k):
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        mask = counts > 0
        new[mask] /= counts[mask, None]
        new[~mask] = centers[~mask]
        return new

    @staticmethod
    def _kmeanspp(Z, k, rng):
        """Classical D^2-sampling seeding in the scaled space."""
        n = Z.shape[0]
        chosen = np.empty(k, dtype=np.intp)
        chosen[0] = rng.integers(n)
        d2 = ((Z - Z[chosen[0]]) ** 2).sum(axis=1)
        for j in range(1, k):
            total = float(d2.sum())
            if total <= 0.0:
                remaining = np.setdiff1d(np.arange(n), chosen[:j])
                chosen[j] = remaining[0]
            else:
                r = rng.random() * total
                idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
                idx = min(idx, n - 1)
                if d2[idx] == 0.0:
                    idx = int(np.argmax(d2))
                chosen[j] = idx
            d2 = np.minimum(d2, ((Z - Z[chosen[j]]) ** 2).sum(axis=1))
        return chosen

    def predict(self, X):
        if not hasattr(self, "cluster_centers_"):
            raise NotFittedError("WeightedKMeans is not fitted")
        X = as_feature_matrix(X)
        sqrt_w = np.sqrt(self.weights_)
        labels, _ = self._assign(X * sqrt_w, self.cluster_centers_, sqrt_w)
        return labels


def davies_bouldin(X, labels, centers, weights) -> float:
    """Davies-Bouldin index under the weighted metric; lower is better.

    DB = mean over clusters of max_{j != i} (S_i + S_j) / M_ij where S is
    the mean member-to-centroid distance and M the centroid distance.
    Coincident centroids make the index undefined; returns ``inf`` then.
    """
    X = as_feature_matrix(X)
    labels = np.asarray(labels)
    centers = np.asarray(centers, dtype=np.float64)
    k = centers.shape[0]
    if k < 2:
        raise ValueError("Davies-Bouldin needs at least 2 clusters")
    w = check_weights(weights, X.shape[1])
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise ValueError("every cluster must be non-empty")
    sqrt_w = np.sqrt(w)
    Z = X * sqrt_w
    Cz = centers * sqrt_w
    member_dist = np.sqrt(((Z - Cz[labels]) ** 2).sum(axis=1))
    scatter = np.zeros(k)
    np.add.at(scatter, labels, member_dist)
    scatter /= counts
    sep = np.sqrt(_pairwise_sq(Cz, Cz))
    off_diag = ~np.eye(k, dtype=bool)
    if np.any(sep[off_diag] == 0.0):
        return math.inf
    ratio = (scatter[:, None] + scatter[None, :]) / np.where(off_diag, sep, 1.0)
    ratio[~off_diag] = -np.inf
    return float(ratio.max(axis=1).mean())


class WeightedDBSCAN(BaseEstimator, ClusterMixin):
    """Density-reachability clustering under the weighted metric.

    Noise points get the label -1; clusters are numbered in discovery
    order while scanning rows by index. ``eps="auto"`` resolves the radius
    from the knee (maximum second difference) of the sorted
    (min_samples - 1)-nearest-neighbor distance curve. ``min_samples``
    defaults to max(5, 2 * n_features); a point's own position counts
    toward its neighborhood size.
    """

    def __init__(self, eps: float | str = "auto", min_samples: int | None = None,
                 weights=None):
        self.eps = eps
        self.min_samples = min_samples
        self.weights = weights

    def fit(self, X, y=None):
        X = as_feature_matrix(X)
        n, d = X.shape
        if self.weights is None:
            w = uniform_weights(d)
        else:
            w = check_weights(self.weights, d)
        min_samples = self.min_samples
        if min_samples is None:
            min_samples = max(5, 2 * d)
        if min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if n < min_samples:
            raise ValueError(
                f"{n} rows cannot support min_samples={min_samples}")
        Z = X * np.sqrt(w)

        if isinstance(self.eps, str):
            if self.eps != "auto":
                raise ValueError(f"unknown eps mode {self.eps!r}")
            if min_samples < 2:
                raise ValueError("auto eps needs min_samples >= 2")
            eps = self._auto_eps(Z, min_samples)
        else:
            eps = float(self.eps)
            if eps <= 0:
                raise ValueError("eps must be > 0")

        labels = np.full(n, -2, dtype=np.int64)  # -2 = unvisited
        cluster = -1
        for i in range(n):
            if labels[i] != -2:
                continue
            neighbors = self._query(Z, i, eps)
            if neighbors.size < min_samples:
                labels[i] = -1
                continue
            cluster += 1
            labels[i] = cluster
            queue = list(neighbors)
            qi = 0
            while qi < len(queue):
                j = queue[qi]
                qi += 1
                if labels[j] == -1:
                    labels[j] = cluster  # noise becomes a border point
                if labels[j] != -2:
                    continue
                labels[j] = cluster
                nbrs = self._query(Z, j, eps)
                if nbrs.size >= min_samples:
                    queue.extend(nbrs)

        self.labels_ = labels
        self.n_clusters_ = cluster + 1
        self.eps_ = eps
        self.min_samples_ = min_samples
        return self

    @staticmethod
    def _query(Z, i, eps):
        diff = Z - Z[i]
        dist = np.sqrt((diff * diff).sum(axis=1))
        return np.flatnonzero(dist <= eps)

    @staticmethod
    def _auto_eps(Z, min_samples, chunk: int = 2048) -> float:
        """Knee of the sorted (min_samples-1)-NN distance curve."""
        n = Z.shape[0]
        kth = min_samples - 1
        kdist = np.empty(n)
        for start in range(0, n, chunk):
            block = slice(start, min(start + chunk, n))
            sq = _pairwise_sq(Z[block], Z)
            sq[np.arange(block.stop - block.start),
               np.arange(block.start, block.stop)] = np.inf
            kdist[block] = np.sqrt(np.partition(sq, kth - 1, axis=1)[:, kth - 1])
        s = np.sort(kdist)
        if s.size < 3:
            eps = float(s[-1])
        else:
            second_diff = s[2:] - 2.0 * s[1:-1] + s[:-2]
            eps = float(s[1 + int(np.argmax(second_diff))])
        if eps <= 0.0:
            positive = s[s > 0]
            eps = float(positive[0]) if positive.size else 1e-12
        return eps


@dataclass(frozen=True)
class KSelection:
    """Outcome of the cluster-count search around the density estimate."""

    k: int
    k_density: int
    candidates: tuple[int, ...]
    db_scores: dict[int, float] = field(default_factory=dict)


def select_cluster_count(
    X,
    weights=None,
    dbscan: DbscanConfig | None = None,
    kmeans: KMeansConfig | None = None,
    radius: int = 2,
    k_density: int | None = None,
    max_k: int | None = None,
) -> KSelection:
    """Pick k: seed from the DBSCAN cluster count, then search its
    neighborhood for the Davies-Bouldin minimizer (ties to smaller k).

    Pass ``k_density`` to reuse a density estimate computed elsewhere
    (e.g. on a subsample) instead of running DBSCAN here; ``max_k`` caps
    the candidate range for small row counts.
    """
    X = as_feature_matrix(X)
    n, d = X.shape
    if n < 4:
        raise ValueError("k selection needs at least 4 rows")
    dbscan = dbscan or DbscanConfig()
    kmeans = kmeans or KMeansConfig()
    w = uniform_weights(d) if weights is None else check_weights(weights, d)

    if k_density is None:
        density = WeightedDBSCAN(
            eps=dbscan.eps, min_samples=dbscan.min_samples, weights=w,
        ).fit(X)
        k_density = density.n_clusters_
    k_density = max(2, int(k_density))
    lo = max(2, k_density - radius)
    hi = k_density + radius
    candidates = tuple(
        k for k in range(lo, hi + 1)
        if k <= n and (max_k is None or k <= max_k))
    if not candidates:
        candidates = (min(2, n),) if n >= 2 else ()
    if not candidates:
        raise ValueError("no feasible candidate k")

    best_k = None
    best_db = math.inf
    scores: dict[int, float] = {}
    for k in candidates:
        model = WeightedKMeans(
            n_clusters=k, weights=w, n_init=kmeans.n_init,
            max_iter=kmeans.max_iter, tol=kmeans.tol,
            random_state=derive_seed(kmeans.seed or 0, k),
        ).fit(X)
        db = model.davies_bouldin_
        scores[k] = db
        if db < best_db:
            best_db = db
            best_k = k
    if best_k is None:
        best_k = candidates[0]
    return KSelection(best_k, k_density, candidates, scores)
