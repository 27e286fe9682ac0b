"""Axis-parallel binary clustering trees: routing, assignment, serialization.

A tree is a nested structure of Branch/Leaf nodes. A Branch sends a point to
its lower child iff x[feature] < threshold (strictly); boundary points go
upper. Leaves are clusters; cluster ids are reassigned in left-to-right leaf
order after every structural change so serialization is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParseError, ValidationError
from .metrics import Assignment

TREE_SCHEMA = "icot-tree/1"


@dataclass(frozen=True)
class SplitRule:
    feature: int
    threshold: float

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError(
                f"threshold {self.threshold} outside [0, 1]"
            )


@dataclass(frozen=True)
class Leaf:
    cluster_id: int = 0
    size: int = 0


@dataclass(frozen=True)
class Branch:
    rule: SplitRule
    lower: object
    upper: object


@dataclass(frozen=True)
class ClusterTree:
    root: object
    n_features: int
    feature_names: tuple = ()

    def __post_init__(self):
        if not self.feature_names:
            object.__setattr__(
                self,
                "feature_names",
                tuple(f"x{j + 1}" for j in range(self.n_features)),
            )
        for node in iter_nodes(self.root):
            if isinstance(node, Branch) and not (
                0 <= node.rule.feature < self.n_features
            ):
                raise ValidationError(
                    f"split feature {node.rule.feature} out of range"
                )

    @property
    def depth(self) -> int:
        return _depth(self.root)

    @property
    def n_leaves(self) -> int:
        return sum(1 for nd in iter_nodes(self.root) if isinstance(nd, Leaf))

    def leaves(self):
        return [nd for nd in iter_nodes(self.root) if isinstance(nd, Leaf)]


def _depth(node):
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.lower), _depth(node.upper))


def iter_nodes(node):
    """Preorder traversal (node, then lower subtree, then upper subtree)."""
    yield node
    if isinstance(node, Branch):
        yield from iter_nodes(node.lower)
        yield from iter_nodes(node.upper)


def single_leaf_tree(n_features, feature_names=(), size=0):
    return ClusterTree(
        root=Leaf(cluster_id=0, size=size),
        n_features=n_features,
        feature_names=tuple(feature_names),
    )


def relabel_leaves(tree, sizes=None):
    """Reassign cluster ids 0..k-1 in left-to-right leaf order.

    ``sizes``, when given, is the per-leaf member count in the same order.
    """
    counter = {"next": 0}

    def rebuild(node):
        if isinstance(node, Leaf):
            cid = counter["next"]
            counter["next"] += 1
            size = sizes[cid] if sizes is not None else node.size
            return Leaf(cluster_id=cid, size=size)
        return Branch(node.rule, rebuild(node.lower), rebuild(node.upper))

    return replace(tree, root=rebuild(tree.root))


def route(tree, observation):
    """Cluster id reached by one observation."""
    x = np.asarray(observation, dtype=float)
    if x.shape != (tree.n_features,):
        raise ValidationError(
            f"expected {tree.n_features} features, got {x.shape}"
        )
    node = tree.root
    while isinstance(node, Branch):
        node = node.lower if x[node.rule.feature] < node.rule.threshold else node.upper
    return node.cluster_id


def route_matrix(tree, X):
    """Vectorized routing of an n x p matrix to leaf cluster ids."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ValidationError(
            f"expected an n x {tree.n_features} matrix, got {X.shape}"
        )
    out = np.empty(X.shape[0], dtype=int)

    def descend(node, idx):
        if isinstance(node, Leaf):
            out[idx] = node.cluster_id
            return
        mask = X[idx, node.rule.feature] < node.rule.threshold
        descend(node.lower, idx[mask])
        descend(node.upper, idx[~mask])

    descend(tree.root, np.arange(X.shape[0]))
    return out


def assign_all(tree, dataset):
    """Assignment induced by routing every dataset row; empty leaves drop out."""
    return Assignment(route_matrix(tree, dataset.features))


def candidate_thresholds(dataset, feature, observation_subset):
    """Midpoints between consecutive distinct values of one feature.

    Restricted to the given observation subset; every achievable strict
    bipartition of the subset on this feature is induced by exactly one
    midpoint.
    """
    if not 0 <= feature < dataset.p:
        raise ValidationError(f"feature index {feature} out of range")
    subset = np.asarray(observation_subset, dtype=int)
    if subset.size == 0:
        raise ValidationError("empty observation subset")
    values = np.unique(dataset.features[subset, feature])
    return ((values[:-1] + values[1:]) / 2.0).tolist()


# ---------------------------------------------------------------------------
# Serialization ("icot-tree/1" JSON documents)
# ---------------------------------------------------------------------------


def _node_to_dict(node, feature_names):
    if isinstance(node, Leaf):
        return {
            "node_type": "leaf",
            "cluster_id": node.cluster_id,
            "size": node.size,
        }
    return {
        "node_type": "branch",
        "feature": node.rule.feature,
        "feature_name": feature_names[node.rule.feature],
        "threshold": node.rule.threshold,
        "lower": _node_to_dict(node.lower, feature_names),
        "upper": _node_to_dict(node.upper, feature_names),
    }


def serialize(tree):
    """Render a tree as a deterministic JSON document (schema icot-tree/1)."""
    doc = {
        "schema": TREE_SCHEMA,
        "n_features": tree.n_features,
        "feature_names": list(tree.feature_names),
        "root": _node_to_dict(tree.root, tree.feature_names),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _node_from_dict(d, where):
    if not isinstance(d, dict) or "node_type" not in d:
        raise ParseError(f"malformed node at {where}")
    if d["node_type"] == "leaf":
        try:
            return Leaf(cluster_id=int(d["cluster_id"]), size=int(d.get("size", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed leaf at {where}: {exc}") from exc
    if d["node_type"] == "branch":
        try:
            rule = SplitRule(int(d["feature"]), float(d["threshold"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed branch at {where}: {exc}") from exc
        return Branch(
            rule,
            _node_from_dict(d["lower"], where + "/lower"),
            _node_from_dict(d["upper"], where + "/upper"),
        )
    raise ParseError(f"unknown node_type {d['node_type']!r} at {where}")


def deserialize(text):
    """Parse a tree document produced by ``serialize`` (round-trip identity)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"invalid JSON: {exc.msg}", row=exc.lineno, column=exc.colno
        ) from exc
    if not isinstance(doc, dict) or doc.get("schema") != TREE_SCHEMA:
        raise ParseError(f"expected schema {TREE_SCHEMA!r}")
    try:
        n_features = int(doc["n_features"])
        names = tuple(doc["feature_names"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed header: {exc}") from exc
    root = _node_from_dict(doc["root"], "root")
    tree = ClusterTree(root=root, n_features=n_features, feature_names=names)
    leaf_ids = [leaf.cluster_id for leaf in tree.leaves()]
    if len(set(leaf_ids)) != len(leaf_ids):
        raise ParseError("duplicate leaf cluster ids")
    return tree


def decision_paths(tree):
    """Human-readable rule path for every leaf, in left-to-right order."""
    lines = []

    def walk(node, conds):
        if isinstance(node, Leaf):
            rule = " and ".join(conds) if conds else "(all observations)"
            lines.append(
                f"cluster {node.cluster_id} (n={node.size}): {rule}"
            )
            return
        name = tree.feature_names[node.rule.feature]
        walk(node.lower, conds + [f"{name} < {node.rule.threshold:.6g}"])
        walk(node.upper, conds + [f"{name} >= {node.rule.threshold:.6g}"])

    walk(tree.root, [])
    return lines
