"""Internal cluster-validity criteria used as search objectives.

Both criteria are computed from a precomputed pairwise distance matrix and a
global assignment; higher is better for both. Degenerate cases get sentinel
values so that the search can score a single-leaf tree: Silhouette -1 and
Dunn 0 when only one cluster exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

CRITERIA = ("silhouette", "dunn")

# floor for the max intra-cluster diameter when every cluster is a singleton
_DIAMETER_FLOOR = 1e-12


@dataclass(frozen=True)
class Assignment:
    """Partition of n observations into nonempty clusters."""

    cluster_of: np.ndarray
    clusters: dict = field(init=False, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.cluster_of, dtype=int)
        if labels.size == 0:
            raise ValidationError("empty assignment")
        if labels.min() < 0:
            raise ValidationError("cluster identifiers must be nonnegative")
        object.__setattr__(self, "cluster_of", labels)
        clusters = {
            int(c): np.flatnonzero(labels == c) for c in np.unique(labels)
        }
        object.__setattr__(self, "clusters", clusters)

    @property
    def n(self) -> int:
        return self.cluster_of.size

    @property
    def k(self) -> int:
        return len(self.clusters)


@dataclass(frozen=True)
class CriterionScore:
    value: float
    criterion: str


def _check(distances, assignment):
    D = np.asarray(distances, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValidationError("distance matrix must be square")
    if D.shape[0] != assignment.n:
        raise ValidationError("distance matrix and assignment sizes differ")
    return D


def silhouette_value(distances, labels):
    """Mean silhouette over all observations, from a distance matrix.

    Per-point score is (b - a) / max(a, b) with a the mean distance to the
    point's own cluster (self excluded) and b the smallest mean distance to
    any other cluster. Singleton members score 0, as does a zero
    denominator; a single-cluster partition scores the sentinel -1.
    """
    labels = np.asarray(labels)
    n = labels.size
    uniq, inv, counts = np.unique(labels, return_inverse=True, return_counts=True)
    k = uniq.size
    if k == 1:
        return -1.0
    member = np.zeros((n, k))
    member[np.arange(n), inv] = 1.0
    sums = distances @ member  # n x k: total distance to each cluster
    own_count = counts[inv]
    own_sum = sums[np.arange(n), inv]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = own_sum / (own_count - 1)
    means = sums / counts[None, :]
    means[np.arange(n), inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = (b - a) / denom
    s[own_count == 1] = 0.0
    s[denom == 0] = 0.0
    return float(s.mean())


def dunn_value(distances, labels):
    """Minimum inter-cluster separation over maximum intra-cluster diameter.

    Sentinels: 0 for a single cluster; when every cluster is a singleton the
    diameter is floored at 1e-12 so the value stays finite and ordered.
    """
    labels = np.asarray(labels)
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    if len(groups) == 1:
        return 0.0
    diameter = 0.0
    for g in groups:
        if g.size > 1:
            diameter = max(diameter, float(distances[np.ix_(g, g)].max()))
    separation = np.inf
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            separation = min(
                separation, float(distances[np.ix_(groups[i], groups[j])].min())
            )
    return separation / max(diameter, _DIAMETER_FLOOR)


def silhouette(distances, assignment):
    D = _check(distances, assignment)
    return CriterionScore(silhouette_value(D, assignment.cluster_of), "silhouette")


def dunn(distances, assignment):
    D = _check(distances, assignment)
    return CriterionScore(dunn_value(D, assignment.cluster_of), "dunn")


_DISPATCH = {"silhouette": silhouette, "dunn": dunn}
_VALUE_DISPATCH = {"silhouette": silhouette_value, "dunn": dunn_value}


def criterion_value(criterion, distances, labels):
    """Raw objective value for a label vector; the search engine's hot path."""
    try:
        return _VALUE_DISPATCH[criterion](distances, labels)
    except KeyError:
        raise ValueError(
            f"unknown criterion {criterion!r}; choose from {CRITERIA}"
        ) from None


def evaluate_assignment(criterion, distances, assignment):
    """Dispatch to the named criterion; the single seam the search calls."""
    if criterion not in _DISPATCH:
        raise ValueError(f"unknown criterion {criterion!r}; choose from {CRITERIA}")
    return _DISPATCH[criterion](distances, assignment)
