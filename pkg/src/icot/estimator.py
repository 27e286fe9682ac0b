"""Scikit-learn style estimator wrapper around the tree clustering search."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from .dataset import Dataset
from .errors import ValidationError
from .search import SearchConfig, auto_cluster_count, fit as fit_tree
from .tree import route_matrix


def _validate_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D array")
    if X.shape[0] < 2:
        raise ValidationError("X must contain at least 2 observations")
    if not np.all(np.isfinite(X)):
        raise ValidationError("X contains non-finite entries")
    return X


class ICOT(ClusterMixin, BaseEstimator):
    """Interpretable tree clustering optimized by multi-start local search.

    Fits an axis-parallel binary tree whose leaves are the clusters,
    maximizing an internal validity criterion (silhouette or dunn). The
    number of clusters is not a parameter: the tree stops splitting when the
    criterion stops improving, bounded by ``max_depth``.

    Parameters
    ----------
    criterion : {"silhouette", "dunn"}
        Objective maximized by the search.
    max_depth : int
        Maximum tree depth (caps the cluster count at 2**max_depth).
    min_bucket : int
        Minimum observations per leaf.
    restarts : int
        Independent random restarts; the best final tree wins.
    random_state : int
        Seed; fully determines the fitted tree for a given X.
    tolerance : float
        Minimum objective improvement for a move to be accepted.
    max_passes : int
        Safety cap on local-search sweeps per restart.
    threshold_quantiles : int or None
        Optional cap on thresholds scanned per (node, feature) for large n.

    Attributes
    ----------
    labels_ : ndarray
        Cluster id per training observation.
    tree_ : ClusterTree
        The fitted clustering tree.
    score_ : float
        Final objective value.
    n_clusters_ : int
        Number of leaves of the fitted tree.
    """

    def __init__(
        self,
        criterion="silhouette",
        max_depth=4,
        min_bucket=2,
        restarts=10,
        random_state=0,
        tolerance=1e-8,
        max_passes=100,
        threshold_quantiles=None,
    ):
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_bucket = min_bucket
        self.restarts = restarts
        self.random_state = random_state
        self.tolerance = tolerance
        self.max_passes = max_passes
        self.threshold_quantiles = threshold_quantiles

    def _config(self):
        return SearchConfig(
            criterion=self.criterion,
            max_depth=self.max_depth,
            min_bucket=self.min_bucket,
            restarts=self.restarts,
            seed=self.random_state,
            tolerance=self.tolerance,
            max_passes=self.max_passes,
            threshold_quantiles=self.threshold_quantiles,
        )

    def fit(self, X, y=None):
        X = _validate_matrix(X)
        dataset = Dataset.from_matrix(X)
        tree, score, trace = fit_tree(dataset, self._config())
        self.dataset_ = dataset
        self.tree_ = tree
        self.score_ = score.value
        self.trace_ = trace
        self.labels_ = route_matrix(tree, dataset.features)
        self.n_clusters_ = auto_cluster_count(tree)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "tree_"):
            raise ValidationError("estimator is not fitted; call fit first")
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"X must be 2-D with {self.n_features_in_} features"
            )
        encoded = self.dataset_.encode([list(row) for row in X])
        return route_matrix(self.tree_, encoded)
