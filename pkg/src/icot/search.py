"""Tree clustering by greedy initialization plus coordinate-descent local search.

Each restart grows a greedy tree (one randomly drawn feature per leaf, full
threshold scan, split kept only if the global objective improves), then
repeatedly sweeps all nodes in random order applying the best improving move
per node: delete a branch (keeping its lower or upper subtree), replace a
branch's split rule, or split a leaf. A restart converges when a full sweep
applies no move. The best tree across restarts wins, ties broken by fewer
leaves then lower restart index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .metrics import CRITERIA, CriterionScore, criterion_value
from .tree import (
    Branch,
    ClusterTree,
    Leaf,
    SplitRule,
    relabel_leaves,
    route_matrix,
    single_leaf_tree,
)


@dataclass(frozen=True)
class SearchConfig:
    criterion: str = "silhouette"
    max_depth: int = 4
    min_bucket: int = 2
    restarts: int = 10
    seed: int = 0
    tolerance: float = 1e-8
    max_passes: int = 100
    # optional cap on thresholds scanned per (node, feature); None = full scan
    threshold_quantiles: int | None = None

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(
                f"unknown criterion {self.criterion!r}; choose from {CRITERIA}"
            )
        if self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1")
        if self.min_bucket < 1:
            raise ValidationError("min_bucket must be >= 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.tolerance <= 0:
            raise ValidationError("tolerance must be > 0")
        if self.max_passes < 1:
            raise ValidationError("max_passes must be >= 1")


@dataclass
class SearchTrace:
    """Objective history: one (pass index, objective) sequence per restart."""

    restarts: list = field(default_factory=list)
    final_objective: float = float("-inf")
    winner: int = -1
    capped_restarts: list = field(default_factory=list)
    # per restart: objective value after every applied move (greedy + local)
    move_log: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# internal helpers operating on label vectors
# ---------------------------------------------------------------------------


class _Evaluator:
    """Scores candidate label vectors against one criterion."""

    def __init__(self, dataset, config):
        self.X = dataset.features
        self.D = dataset.distances
        self.cfg = config

    def score(self, labels):
        return criterion_value(self.cfg.criterion, self.D, labels)

    def thresholds(self, subset, feature):
        values = np.unique(self.X[subset, feature])
        if values.size < 2:
            return np.empty(0)
        mids = (values[:-1] + values[1:]) / 2.0
        q = self.cfg.threshold_quantiles
        if q is not None and mids.size > q:
            pick = np.unique(
                np.round(np.linspace(0, mids.size - 1, q)).astype(int)
            )
            mids = mids[pick]
        return mids

    def split_candidates(self, subset, feature):
        """(threshold, lower_idx, upper_idx) triples honoring min_bucket."""
        out = []
        col = self.X[subset, feature]
        for b in self.thresholds(subset, feature):
            mask = col < b
            lo = int(mask.sum())
            if lo < self.cfg.min_bucket or subset.size - lo < self.cfg.min_bucket:
                continue
            out.append((float(b), subset[mask], subset[~mask]))
        return out


def _leaf_sizes(labels, tree):
    order = [leaf.cluster_id for leaf in tree.leaves()]
    counts = np.bincount(labels, minlength=max(order) + 1)
    return [int(counts[c]) for c in order]


def _subset_of(node_path, tree, X):
    """Indices of observations reaching the node at the given root path."""
    idx = np.arange(X.shape[0])
    node = tree.root
    for step in node_path:
        mask = X[idx, node.rule.feature] < node.rule.threshold
        idx = idx[mask] if step == 0 else idx[~mask]
        node = node.lower if step == 0 else node.upper
    return node, idx


def _get_node(tree, path):
    node = tree.root
    for step in path:
        if not isinstance(node, Branch):
            return None
        node = node.lower if step == 0 else node.upper
    return node


def _replace_node(tree, path, new_node):
    def rebuild(node, remaining):
        if not remaining:
            return new_node
        step, rest = remaining[0], remaining[1:]
        if step == 0:
            return Branch(node.rule, rebuild(node.lower, rest), node.upper)
        return Branch(node.rule, node.lower, rebuild(node.upper, rest))

    return ClusterTree(
        root=rebuild(tree.root, path),
        n_features=tree.n_features,
        feature_names=tree.feature_names,
    )


def _fresh_ids(labels, count):
    start = int(labels.max()) + 1
    return list(range(start, start + count))


def _route_subtree(node, X, idx, labels, id_map):
    """Route idx through a subtree, writing remapped leaf ids into labels."""
    if isinstance(node, Leaf):
        labels[idx] = id_map[node.cluster_id]
        return
    mask = X[idx, node.rule.feature] < node.rule.threshold
    _route_subtree(node.lower, X, idx[mask], labels, id_map)
    _route_subtree(node.upper, X, idx[~mask], labels, id_map)


def _subtree_labels(node, X, idx, base_labels):
    """Candidate labels where the subset idx is re-routed through ``node``.

    Returns None if any leaf of the subtree ends up empty (empty leaves are
    never allowed).
    """
    leaf_ids = [nd.cluster_id for nd in _iter_leaves(node)]
    fresh = _fresh_ids(base_labels, len(leaf_ids))
    id_map = dict(zip(leaf_ids, fresh))
    labels = base_labels.copy()
    _route_subtree(node, X, idx, labels, id_map)
    counts = np.bincount(labels[idx], minlength=fresh[-1] + 1)
    if any(counts[f] == 0 for f in fresh):
        return None
    return labels, [int(counts[f]) for f in fresh]


def _iter_leaves(node):
    if isinstance(node, Leaf):
        yield node
    else:
        yield from _iter_leaves(node.lower)
        yield from _iter_leaves(node.upper)


# ---------------------------------------------------------------------------
# greedy initialization
# ---------------------------------------------------------------------------


def greedy_initialize(dataset, config, rng, log=None):
    """Grow a tree top-down, splitting on one random feature per leaf.

    Every candidate threshold on the drawn feature is scored globally; the
    best split is kept only if it beats the current global objective by more
    than the tolerance. Newly created leaves are processed in turn until the
    depth cap is hit or no leaf improves.
    """
    ev = _Evaluator(dataset, config)
    n = dataset.n
    tree = single_leaf_tree(dataset.p, dataset.feature_names, size=n)
    labels = np.zeros(n, dtype=int)
    current = ev.score(labels)
    queue = [()]  # paths of leaves still to visit
    while queue:
        path = queue.pop(0)
        node, subset = _subset_of(path, tree, ev.X)
        if len(path) >= config.max_depth or subset.size < 2 * config.min_bucket:
            continue
        feature = int(rng.integers(dataset.p))
        best = None
        for b, lo_idx, up_idx in ev.split_candidates(subset, feature):
            cand = labels.copy()
            lo_id, up_id = _fresh_ids(labels, 2)
            cand[lo_idx] = lo_id
            cand[up_idx] = up_id
            value = ev.score(cand)
            if best is None or value > best[0]:
                best = (value, b, cand)
        if best is not None and best[0] > current + config.tolerance:
            current = best[0]
            tree = _replace_node(
                tree, path, Branch(SplitRule(feature, best[1]), Leaf(), Leaf())
            )
            labels = _canonical_labels(tree, ev.X)
            if log is not None:
                log.append(current)
            queue.extend([path + (0,), path + (1,)])
    tree = relabel_leaves(tree, _leaf_sizes(labels, tree))
    return tree


def _canonical_labels(tree, X):
    tree_local = relabel_leaves(tree)
    return route_matrix(tree_local, X)


# ---------------------------------------------------------------------------
# local search
# ---------------------------------------------------------------------------


def _node_paths(tree):
    paths = []

    def walk(node, path):
        paths.append(path)
        if isinstance(node, Branch):
            walk(node.lower, path + (0,))
            walk(node.upper, path + (1,))

    walk(tree.root, ())
    return paths


def _best_move(tree, path, ev, labels, current):
    """Best improving (value, new_tree) move at one node, or None."""
    cfg = ev.cfg
    node, subset = _subset_of(path, tree, ev.X)
    best_value = current
    best_tree = None

    if isinstance(node, Branch):
        # delete: replace the branch by its lower or upper subtree
        for step in (0, 1):
            kept = node.lower if step == 0 else node.upper
            routed = _subtree_labels(kept, ev.X, subset, labels)
            if routed is None:
                continue
            value = ev.score(routed[0])
            if value > best_value + cfg.tolerance:
                best_value = value
                best_tree = _replace_node(tree, path, kept)
        # replace: new (feature, threshold) at this branch, subtrees kept
        for feature in range(ev.X.shape[1]):
            for b in ev.thresholds(subset, feature):
                if feature == node.rule.feature and b == node.rule.threshold:
                    continue
                cand_node = Branch(SplitRule(feature, float(b)), node.lower, node.upper)
                routed = _subtree_labels(cand_node, ev.X, subset, labels)
                if routed is None or min(routed[1]) < cfg.min_bucket:
                    continue
                value = ev.score(routed[0])
                if value > best_value + cfg.tolerance:
                    best_value = value
                    best_tree = _replace_node(tree, path, cand_node)
    else:
        # create: split this leaf (depth permitting)
        if len(path) < cfg.max_depth and subset.size >= 2 * cfg.min_bucket:
            for feature in range(ev.X.shape[1]):
                for b, lo_idx, up_idx in ev.split_candidates(subset, feature):
                    cand = labels.copy()
                    lo_id, up_id = _fresh_ids(labels, 2)
                    cand[lo_idx] = lo_id
                    cand[up_idx] = up_id
                    value = ev.score(cand)
                    if value > best_value + cfg.tolerance:
                        best_value = value
                        best_tree = _replace_node(
                            tree, path, Branch(SplitRule(feature, float(b)), Leaf(), Leaf())
                        )
    if best_tree is None:
        return None
    return best_value, best_tree


def local_search_pass(tree, dataset, config, rng, log=None):
    """One sweep over all nodes in random order; returns (tree, value, improved).

    Each visited node applies its best improving move immediately; nodes whose
    path vanished due to an earlier move in the same sweep are skipped.
    """
    ev = _Evaluator(dataset, config)
    labels = _canonical_labels(tree, ev.X)
    current = ev.score(labels)
    paths = _node_paths(tree)
    rng.shuffle(paths)
    improved = False
    for path in paths:
        if _get_node(tree, path) is None and path != ():
            continue
        move = _best_move(tree, path, ev, labels, current)
        if move is None:
            continue
        current, tree = move
        tree = relabel_leaves(tree)  # keep leaf ids distinct for later moves
        labels = _canonical_labels(tree, ev.X)
        if log is not None:
            log.append(current)
        improved = True
    tree = relabel_leaves(tree, _leaf_sizes(_canonical_labels(tree, ev.X), tree))
    return tree, current, improved


# ---------------------------------------------------------------------------
# multi-start driver
# ---------------------------------------------------------------------------


def _random_tree(dataset, config, rng):
    """A random feasible tree used to diversify restart starting points.

    The greedy initializer is deterministic whenever the feature draw has no
    freedom (p = 1), which would make every restart identical; random starts
    let the multi-start escape local optima the greedy basin cannot.
    """
    ev = _Evaluator(dataset, config)

    def grow(subset, depth):
        if depth >= config.max_depth or subset.size < 2 * config.min_bucket:
            return Leaf(size=subset.size)
        if depth > 0 and rng.random() < 0.25:
            return Leaf(size=subset.size)
        features = rng.permutation(dataset.p)
        for feature in features:
            cands = ev.split_candidates(subset, int(feature))
            if not cands:
                continue
            b, lo_idx, up_idx = cands[int(rng.integers(len(cands)))]
            return Branch(
                SplitRule(int(feature), b),
                grow(lo_idx, depth + 1),
                grow(up_idx, depth + 1),
            )
        return Leaf(size=subset.size)

    root = grow(np.arange(dataset.n), 0)
    return relabel_leaves(
        ClusterTree(root=root, n_features=dataset.p, feature_names=dataset.feature_names)
    )


def _run_restart(dataset, config, restart_index):
    rng = np.random.default_rng([config.seed, restart_index])
    ev = _Evaluator(dataset, config)
    log = []
    if restart_index % 2 == 1:
        tree = _random_tree(dataset, config, rng)
    else:
        tree = greedy_initialize(dataset, config, rng, log=log)
    value = ev.score(_canonical_labels(tree, ev.X))
    history = [(0, value)]
    capped = True
    for pass_index in range(1, config.max_passes + 1):
        tree, value, improved = local_search_pass(tree, dataset, config, rng, log=log)
        history.append((pass_index, value))
        if not improved:
            capped = False
            break
    return tree, value, history, capped, log


def fit(dataset, config):
    """Run all restarts and return (best tree, score, trace).

    The winner maximizes the objective; exact ties favor fewer leaves, then
    the lower restart index. Deterministic for fixed (dataset, config).
    """
    trace = SearchTrace()
    best = None  # (value, n_leaves, restart_index, tree)
    for r in range(config.restarts):
        tree, value, history, capped, log = _run_restart(dataset, config, r)
        trace.restarts.append(history)
        trace.move_log.append(log)
        if capped:
            trace.capped_restarts.append(r)
            warnings.warn(
                f"restart {r} hit max_passes={config.max_passes} before converging",
                RuntimeWarning,
                stacklevel=2,
            )
        key = (-value, tree.n_leaves, r)
        if best is None or key < best[0]:
            best = (key, tree)
    trace.final_objective = -best[0][0]
    trace.winner = best[0][2]
    tree = best[1]
    score = CriterionScore(trace.final_objective, config.criterion)
    return tree, score, trace


def auto_cluster_count(tree):
    """The fitted number of clusters is simply the tree's leaf count."""
    return tree.n_leaves
