import numpy as np
import pytest

from icot import Dataset, SearchConfig, assign_all, fit, generate_synthetic, serialize
from icot.metrics import criterion_value
from icot.search import (
    auto_cluster_count,
    greedy_initialize,
    local_search_pass,
)
from icot.tree import Branch, ClusterTree, Leaf, SplitRule

SIL_A = 0.8885448916408669
DATASET_A = Dataset.from_matrix(np.array([[0.0], [0.1], [0.9], [1.0]]))


def config(**kw):
    base = dict(criterion="silhouette", max_depth=2, restarts=5, seed=7)
    base.update(kw)
    return SearchConfig(**base)


class TestGreedy:
    def test_dataset_a_splits_in_the_middle(self):
        tree = greedy_initialize(DATASET_A, config(), np.random.default_rng(0))
        assert tree.n_leaves == 2
        assert tree.root.rule.threshold == pytest.approx(0.5)
        labels = assign_all(tree, DATASET_A).cluster_of
        assert criterion_value("silhouette", DATASET_A.distances, labels) == pytest.approx(SIL_A)

    def test_identical_rows_stay_single_leaf(self):
        data = Dataset.from_matrix(np.full((6, 2), 0.5))
        tree = greedy_initialize(data, config(), np.random.default_rng(1))
        assert tree.n_leaves == 1

    def test_two_far_blobs_dunn(self):
        rng = np.random.default_rng(2)
        X = np.vstack([0.02 * rng.random((10, 1)), 0.98 + 0.02 * rng.random((10, 1))])
        data = Dataset.from_matrix(X)
        tree = greedy_initialize(
            data, config(criterion="dunn"), np.random.default_rng(3)
        )
        assert tree.n_leaves == 2
        labels = assign_all(tree, data).cluster_of
        assert criterion_value("dunn", data.distances, labels) > 5.0


class TestLocalSearchPass:
    def test_optimum_is_fixed_point(self):
        tree = ClusterTree(
            root=Branch(SplitRule(0, 0.5), Leaf(0, 2), Leaf(1, 2)), n_features=1
        )
        new_tree, value, improved = local_search_pass(
            tree, DATASET_A, config(), np.random.default_rng(0)
        )
        assert not improved
        assert value == pytest.approx(SIL_A)
        assert new_tree.root.rule.threshold == pytest.approx(0.5)

    def test_replace_move_recenters_bad_split(self):
        tree = ClusterTree(
            root=Branch(SplitRule(0, 0.05), Leaf(0, 1), Leaf(1, 3)), n_features=1
        )
        new_tree, value, improved = local_search_pass(
            tree, DATASET_A, config(min_bucket=1), np.random.default_rng(0)
        )
        assert improved
        assert value == pytest.approx(SIL_A)

    def test_delete_move_removes_harmful_split(self):
        # the sub-split of the lower pair creates a singleton and hurts the score
        tree = ClusterTree(
            root=Branch(
                SplitRule(0, 0.5),
                Branch(SplitRule(0, 0.05), Leaf(0, 1), Leaf(1, 1)),
                Leaf(2, 2),
            ),
            n_features=1,
        )
        new_tree, value, improved = local_search_pass(
            tree, DATASET_A, config(min_bucket=1), np.random.default_rng(1)
        )
        assert improved
        assert new_tree.n_leaves == 2
        assert value == pytest.approx(SIL_A)


class TestFit:
    def test_dataset_a(self):
        tree, score, trace = fit(DATASET_A, config())
        assert score.value == pytest.approx(SIL_A, abs=1e-12)
        assert tree.n_leaves == 2
        assert auto_cluster_count(tree) == 2

    def test_determinism(self):
        a = fit(DATASET_A, config())
        b = fit(DATASET_A, config())
        assert serialize(a[0]) == serialize(b[0])
        assert a[1] == b[1]

    def test_tetra_recovers_four_blobs(self):
        lab = generate_synthetic("tetra", 80, 0)
        tree, score, _ = fit(
            lab.data, config(max_depth=3, restarts=5, seed=0, criterion="silhouette")
        )
        assert auto_cluster_count(tree) == 4
        labels = assign_all(tree, lab.data).cluster_of
        pairs = set(zip(labels.tolist(), lab.truth.tolist()))
        assert len(pairs) == 4  # exact match up to label permutation

    def test_single_leaf_score_is_sentinel(self):
        data = Dataset.from_matrix(np.full((6, 1), 0.3))
        tree, score, _ = fit(data, config())
        assert tree.n_leaves == 1
        assert score.value == -1.0

    def test_monotone_trace(self):
        rng = np.random.default_rng(13)
        for trial in range(10):
            data = Dataset.from_matrix(rng.random((int(rng.integers(8, 20)), 2)))
            cfg = config(seed=trial, restarts=3, criterion=("silhouette", "dunn")[trial % 2])
            _, _, trace = fit(data, cfg)
            for history in trace.restarts:
                values = [v for _, v in history]
                assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_feasibility_preserved(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            data = Dataset.from_matrix(rng.random((16, 2)))
            cfg = config(seed=trial, restarts=3, max_depth=2, min_bucket=3)
            tree, _, _ = fit(data, cfg)
            assert tree.depth <= 2
            labels = assign_all(tree, data).cluster_of
            counts = np.bincount(labels)
            assert counts[counts > 0].min() >= 3
            assert len(tree.leaves()) == (counts > 0).sum()


class TestConfigValidation:
    def test_unknown_criterion(self):
        with pytest.raises(ValueError):
            SearchConfig(criterion="minkowski")

    def test_bad_bounds(self):
        for kw in (
            dict(max_depth=0),
            dict(min_bucket=0),
            dict(restarts=0),
            dict(tolerance=0.0),
            dict(max_passes=0),
        ):
            with pytest.raises(Exception):
                SearchConfig(**kw)
