import math

import numpy as np
import pytest

from icot import (
    ColumnSchema,
    Dataset,
    ParseError,
    ValidationError,
    generate_synthetic,
    load_csv,
    min_separation_vector,
    pairwise_distances,
)
from icot.baselines import score_truth


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestLoadCsv:
    def test_numeric_minmax(self, tmp_path):
        data = load_csv(write(tmp_path, "a\n2\n4\n6\n"))
        assert np.allclose(data.features[:, 0], [0.0, 0.5, 1.0])

    def test_categorical_one_hot_scaled(self, tmp_path):
        data = load_csv(write(tmp_path, "c\nA\nB\nA\n"))
        s = 1.0 / math.sqrt(2.0)
        assert np.allclose(data.features, [[s, 0.0], [0.0, s], [s, 0.0]])
        assert data.distances[0, 1] == pytest.approx(1.0)
        assert data.distances[0, 2] == 0.0

    def test_two_numeric_columns_triangle(self, tmp_path):
        data = load_csv(write(tmp_path, "a,b\n0,0\n3,4\n5,5\n"))
        assert np.allclose(data.features[0], [0.0, 0.0])
        assert np.allclose(data.features[1], [0.6, 0.8])
        assert data.distances[0, 1] == pytest.approx(1.0)

    def test_constant_column_all_zeros(self, tmp_path):
        data = load_csv(write(tmp_path, "a,b\n1,7\n2,7\n3,7\n"))
        assert np.all(data.features[:, 1] == 0.0)
        assert data.encoding_map["b"] == [1]

    def test_ragged_row_is_parse_error(self, tmp_path):
        with pytest.raises(ParseError, match="row 3"):
            load_csv(write(tmp_path, "a,b\n1,2\n3\n"))

    def test_missing_cell_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="missing cell"):
            load_csv(write(tmp_path, "a,b\n1,\n3,4\n"))

    def test_single_row_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            load_csv(write(tmp_path, "a\n1\n"))

    def test_schema_hint_forces_categorical(self, tmp_path):
        data = load_csv(
            write(tmp_path, "a\n1\n2\n1\n"), schema_hint={"a": "categorical"}
        )
        assert data.schema[0].kind == "categorical"
        assert data.p == 2

    def test_whitespace_delimited_fcps_style(self, tmp_path):
        loaded = load_csv(write(tmp_path, "x y class\n0 0 1\n1 1 2\n0.1 0 1\n"))
        assert loaded.data.p == 2
        assert list(loaded.truth) == [1, 2, 1]

    def test_label_col_flag(self, tmp_path):
        loaded = load_csv(
            write(tmp_path, "x,grp\n0,1\n1,2\n0.5,1\n"), label_col="grp"
        )
        assert list(loaded.truth) == [1, 2, 1]


class TestPairwiseDistances:
    def test_single_point(self):
        assert pairwise_distances([[0.3]]).tolist() == [[0.0]]

    def test_one_dimensional(self):
        D = pairwise_distances(np.array([[0.0], [0.1], [0.9], [1.0]]))
        assert D[1, 2] == pytest.approx(0.8)
        assert D[0, 3] == pytest.approx(1.0)

    def test_unit_diagonal_2d(self):
        D = pairwise_distances(np.array([[0.0, 0.0], [1.0, 1.0]]))
        assert D[0, 1] == pytest.approx(math.sqrt(2.0))

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            pairwise_distances(np.array([[0.0], [np.nan]]))

    def test_metric_properties_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(2, 51))
            X = rng.random((n, int(rng.integers(1, 4))))
            D = pairwise_distances(X)
            assert np.allclose(D, D.T)
            assert np.all(np.diag(D) == 0.0)
            assert np.all(D >= 0.0)
            # triangle inequality
            assert np.all(D[:, :, None] <= D[:, None, :] + D[None, :, :] + 1e-12)


class TestMinSeparation:
    def test_sorted_gaps(self):
        eps, eps_max = min_separation_vector(np.array([[0.0], [0.1], [0.9], [1.0]]))
        assert np.allclose(eps, [0.1])
        assert eps_max == pytest.approx(0.1)

    def test_degenerate_dimension(self):
        eps, _ = min_separation_vector(np.array([[0.5], [0.5], [0.5]]))
        assert eps.tolist() == [1.0]

    def test_two_dimensional(self):
        eps, eps_max = min_separation_vector(np.array([[0.0, 0.0], [0.5, 0.2]]))
        assert np.allclose(eps, [0.5, 0.2])
        assert eps_max == pytest.approx(0.5)

    def test_single_observation_rejected(self):
        with pytest.raises(ValidationError):
            min_separation_vector(np.array([[0.0]]))


class TestSynthetic:
    def test_determinism_bit_identical(self):
        a = generate_synthetic("wingnut", 60, 3)
        b = generate_synthetic("wingnut", 60, 3)
        assert a.data.features.tobytes() == b.data.features.tobytes()
        assert np.array_equal(a.truth, b.truth)

    def test_unknown_shape(self):
        with pytest.raises(ValueError, match="unknown shape"):
            generate_synthetic("moons", 40, 0)

    def test_tetra_layout(self):
        lab = generate_synthetic("tetra", 400, 0)
        assert lab.data.p == 3
        assert np.bincount(lab.truth)[1:].tolist() == [100, 100, 100, 100]

    def test_tight_blobs_truth_silhouette(self):
        lab = generate_synthetic("gaussian_blobs", 100, 7)
        assert score_truth(lab, "silhouette").value > 0.9

    def test_features_normalized(self):
        for shape in ("gaussian_blobs", "tetra", "two_diamonds", "target_rings"):
            lab = generate_synthetic(shape, 50, 1)
            X = lab.data.features
            assert X.min() >= 0.0 and X.max() <= 1.0


class TestNormalization:
    def test_idempotence(self):
        rng = np.random.default_rng(5)
        once = Dataset.from_matrix(rng.random((20, 3)))
        twice = Dataset.from_matrix(once.features)
        assert np.allclose(once.features, twice.features)

    def test_categorical_contribution(self, tmp_path):
        # differing only in one categorical column -> distance exactly 1
        path = tmp_path / "mixed.csv"
        path.write_text("num,cat\n1,A\n1,B\n2,A\n")
        data = load_csv(str(path))
        assert data.distances[0, 1] == pytest.approx(1.0)

    def test_encode_matches_training(self):
        rng = np.random.default_rng(2)
        X = rng.random((10, 2)) * 5.0
        data = Dataset.from_matrix(X)
        again = data.encode([list(row) for row in X])
        assert np.allclose(again, data.features)


class TestColumnSchema:
    def test_numeric_with_categories_rejected(self):
        with pytest.raises(ValidationError):
            ColumnSchema("a", "numeric", ("x",))

    def test_duplicate_categories_rejected(self):
        with pytest.raises(ValidationError):
            ColumnSchema("a", "categorical", ("x", "x"))
