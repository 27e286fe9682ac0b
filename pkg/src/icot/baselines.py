"""Benchmark reference methods: K-Means and the two-step supervised tree.

The two-step baseline mirrors the common interpretability workaround: cluster
first (K-Means), then fit a greedy Gini classification tree to the cluster
labels and treat its leaves as clusters. The tree here is a plain greedy
CART-style tree, standing in for proprietary optimal-tree software.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .metrics import Assignment, evaluate_assignment
from .tree import Branch, ClusterTree, Leaf, SplitRule, assign_all, relabel_leaves


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    labels: Assignment
    inertia: float


def _kmeans_pp_init(X, k, rng):
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    d2 = np.sum((X - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total == 0:
            centroids[c] = X[rng.integers(n)]
        else:
            centroids[c] = X[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((X - centroids[c]) ** 2, axis=1))
    return centroids


def _lloyd(X, centroids, max_iter):
    k = centroids.shape[0]
    labels = None
    for _ in range(max_iter):
        d2 = (
            np.sum(X * X, axis=1)[:, None]
            - 2.0 * X @ centroids.T
            + np.sum(centroids * centroids, axis=1)[None, :]
        )
        new_labels = d2.argmin(axis=1)
        for c in range(k):
            members = new_labels == c
            if not members.any():
                # reseed an empty cluster to the point farthest from its centroid
                far = d2[np.arange(X.shape[0]), new_labels].argmax()
                centroids[c] = X[far]
                new_labels[far] = c
            else:
                centroids[c] = X[members].mean(axis=0)
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    inertia = float(np.sum((X - centroids[labels]) ** 2))
    return centroids, labels, inertia


def kmeans(dataset, k, seed, max_iter=300, n_init=10):
    """Best-of-n_init Lloyd iteration with k-means++ seeding."""
    X = dataset.features
    if not 1 <= k <= dataset.n:
        raise ValidationError(f"k must be in [1, {dataset.n}], got {k}")
    best = None
    for init in range(n_init):
        rng = np.random.default_rng([seed, init])
        centroids = _kmeans_pp_init(X, k, rng)
        centroids, labels, inertia = _lloyd(X, centroids.copy(), max_iter)
        if best is None or inertia < best[0]:
            best = (inertia, centroids, labels)
    inertia, centroids, labels = best
    return KMeansResult(
        centroids=centroids, labels=Assignment(labels), inertia=inertia
    )


# ---------------------------------------------------------------------------
# two-step baseline: greedy Gini classification tree on given labels
# ---------------------------------------------------------------------------


def _gini(counts):
    total = counts.sum()
    if total == 0:
        return 0.0
    frac = counts / total
    return 1.0 - float(np.sum(frac * frac))


def _best_gini_split(X, y, subset, n_classes, min_bucket):
    """(impurity_decrease, feature, threshold, lower_idx, upper_idx) or None."""
    parent = np.bincount(y[subset], minlength=n_classes)
    parent_gini = _gini(parent)
    best = None
    m = subset.size
    for feature in range(X.shape[1]):
        col = X[subset, feature]
        values = np.unique(col)
        for b in (values[:-1] + values[1:]) / 2.0:
            mask = col < b
            lo = int(mask.sum())
            if lo < min_bucket or m - lo < min_bucket:
                continue
            lo_counts = np.bincount(y[subset[mask]], minlength=n_classes)
            up_counts = parent - lo_counts
            decrease = parent_gini - (
                lo * _gini(lo_counts) + (m - lo) * _gini(up_counts)
            ) / m
            if best is None or decrease > best[0] + 1e-15:
                best = (decrease, feature, float(b), subset[mask], subset[~mask])
    return best


def two_step_tree(dataset, labels, config):
    """Fit a greedy Gini tree to cluster labels, then score its leaves as clusters.

    Returns the tree and the criterion score of the leaf-induced assignment,
    evaluated with the criterion named in ``config``.
    """
    if isinstance(labels, Assignment):
        y = labels.cluster_of
    else:
        y = np.asarray(labels, dtype=int)
    if y.shape != (dataset.n,):
        raise ValidationError("labels must match the dataset length")
    _, y = np.unique(y, return_inverse=True)
    n_classes = int(y.max()) + 1
    X = dataset.features

    def grow(subset, depth):
        counts = np.bincount(y[subset], minlength=n_classes)
        if (
            depth >= config.max_depth
            or subset.size < 2 * config.min_bucket
            or _gini(counts) == 0.0
        ):
            return Leaf(size=subset.size)
        best = _best_gini_split(X, y, subset, n_classes, config.min_bucket)
        if best is None or best[0] <= 0.0:
            return Leaf(size=subset.size)
        _, feature, b, lo_idx, up_idx = best
        return Branch(SplitRule(feature, b), grow(lo_idx, depth + 1), grow(up_idx, depth + 1))

    root = grow(np.arange(dataset.n), 0)
    tree = relabel_leaves(
        ClusterTree(root=root, n_features=dataset.p, feature_names=dataset.feature_names)
    )
    assignment = assign_all(tree, dataset)
    score = evaluate_assignment(config.criterion, dataset.distances, assignment)
    return tree, score


def score_truth(labeled, criterion):
    """Criterion score of the ground-truth labels themselves."""
    return evaluate_assignment(
        criterion, labeled.data.distances, Assignment(labeled.truth)
    )
