import numpy as np
import pytest

from icot import Assignment, Dataset, SearchConfig, ValidationError, generate_synthetic
from icot.baselines import _lloyd, kmeans, score_truth, two_step_tree

SIL_A = 0.8885448916408669
DATASET_A = Dataset.from_matrix(np.array([[0.0], [0.1], [0.9], [1.0]]))


class TestKMeans:
    def test_dataset_a_two_clusters(self):
        result = kmeans(DATASET_A, 2, seed=0)
        assert sorted(result.centroids[:, 0].tolist()) == pytest.approx([0.05, 0.95])
        labels = result.labels.cluster_of
        assert labels[0] == labels[1] and labels[2] == labels[3]
        assert labels[0] != labels[2]

    def test_k_equals_one(self):
        result = kmeans(DATASET_A, 1, seed=0)
        assert result.centroids[0, 0] == pytest.approx(0.5)
        expected = float(np.sum((DATASET_A.features - 0.5) ** 2))
        assert result.inertia == pytest.approx(expected)

    def test_k_equals_n(self):
        result = kmeans(DATASET_A, 4, seed=0)
        assert result.inertia == pytest.approx(0.0, abs=1e-12)

    def test_k_too_large(self):
        with pytest.raises(ValidationError):
            kmeans(DATASET_A, 5, seed=0)

    def test_determinism(self):
        a = kmeans(DATASET_A, 2, seed=3)
        b = kmeans(DATASET_A, 2, seed=3)
        assert np.array_equal(a.labels.cluster_of, b.labels.cluster_of)
        assert a.inertia == b.inertia

    def test_lloyd_inertia_monotone(self):
        rng = np.random.default_rng(5)
        X = rng.random((40, 2))
        init = X[rng.choice(40, 3, replace=False)]
        inertias = []
        for iters in (1, 2, 3, 5, 10, 40):
            _, _, inertia = _lloyd(X, init.copy(), iters)
            inertias.append(inertia)
        assert all(b <= a + 1e-12 for a, b in zip(inertias, inertias[1:]))

    def test_every_centroid_nonempty(self):
        rng = np.random.default_rng(6)
        X = rng.random((30, 2))
        result = kmeans(Dataset.from_matrix(X), 6, seed=1)
        assert result.labels.k == 6


class TestTwoStep:
    def test_dataset_a_matches_direct_fit(self):
        km = kmeans(DATASET_A, 2, seed=0)
        tree, score = two_step_tree(DATASET_A, km.labels, SearchConfig())
        assert tree.root.rule.threshold == pytest.approx(0.5)
        assert score.value == pytest.approx(SIL_A)

    def test_constant_labels_single_leaf(self):
        tree, score = two_step_tree(
            DATASET_A, Assignment([0, 0, 0, 0]), SearchConfig()
        )
        assert tree.n_leaves == 1
        assert score.value == -1.0  # single-cluster sentinel

    def test_tree_separable_labels_recovered(self):
        rng = np.random.default_rng(7)
        X = rng.random((60, 2))
        labels = (X[:, 0] >= 0.5).astype(int) + 2 * (X[:, 1] >= 0.5).astype(int)
        data = Dataset.from_matrix(X)
        tree, _ = two_step_tree(data, Assignment(labels), SearchConfig(max_depth=2))
        from icot import assign_all

        got = assign_all(tree, data).cluster_of
        pairs = set(zip(got.tolist(), labels.tolist()))
        assert len(pairs) == len(np.unique(labels))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            two_step_tree(DATASET_A, np.array([0, 1]), SearchConfig())


class TestScoreTruth:
    def test_pass_through(self):
        lab = generate_synthetic("gaussian_blobs", 40, 1)
        direct = score_truth(lab, "silhouette")
        from icot import evaluate_assignment

        expected = evaluate_assignment(
            "silhouette", lab.data.distances, Assignment(lab.truth)
        )
        assert direct == expected
