"""Tabular data loading, encoding, normalization and synthetic generators.

Numeric columns are min-max scaled to [0, 1]; categorical columns are one-hot
encoded with every indicator scaled by 1/sqrt(2) so that a single categorical
mismatch contributes Euclidean distance exactly 1.0 (the maximum contribution
of one normalized numeric feature). The pairwise Euclidean distance matrix is
computed once at construction and shared read-only afterwards.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

# Scale applied to one-hot indicators: two rows differing in one categorical
# column are then at distance sqrt(2 * (1/sqrt(2))^2) = 1.
ONE_HOT_SCALE = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ColumnSchema:
    """Schema of one original (pre-encoding) column."""

    name: str
    kind: str  # "numeric" or "categorical"
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in ("numeric", "categorical"):
            raise ValidationError(f"unknown column kind {self.kind!r}")
        if self.kind == "numeric" and self.categories:
            raise ValidationError("numeric columns carry no category list")
        if self.kind == "categorical":
            if not self.categories:
                raise ValidationError(f"column {self.name!r}: empty category list")
            if len(set(self.categories)) != len(self.categories):
                raise ValidationError(f"column {self.name!r}: duplicate categories")
            if any(c == "" for c in self.categories):
                raise ValidationError(f"column {self.name!r}: empty category label")


@dataclass(frozen=True)
class Dataset:
    """Immutable encoded table plus its precomputed distance matrix.

    ``features`` is the n x p encoded matrix with every entry in [0, 1];
    ``encoding_map`` maps each original column name to the encoded feature
    indices it produced. Normalization offsets/ranges are kept so new rows
    can be encoded consistently with the training data.
    """

    features: np.ndarray
    schema: tuple
    encoding_map: dict
    feature_names: tuple
    distances: np.ndarray
    col_min: dict = field(default_factory=dict)
    col_range: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @staticmethod
    def from_columns(columns, schema, schema_names=None):
        """Build a Dataset from raw per-column value lists.

        ``columns`` is a list of per-column value lists (strings or numbers),
        aligned with ``schema``.
        """
        n = len(columns[0]) if columns else 0
        if n < 2:
            raise ValidationError("need at least 2 rows")
        blocks = []
        names = []
        encoding_map = {}
        col_min = {}
        col_range = {}
        for col, spec in zip(columns, schema):
            start = sum(b.shape[1] for b in blocks)
            if spec.kind == "numeric":
                values = np.asarray(col, dtype=float)
                if not np.all(np.isfinite(values)):
                    raise ValidationError(f"column {spec.name!r}: non-finite value")
                lo = float(values.min())
                span = float(values.max()) - lo
                if span == 0.0:
                    # constant column: keep it (stable indexing), all zeros
                    encoded = np.zeros((n, 1))
                else:
                    encoded = ((values - lo) / span).reshape(n, 1)
                col_min[spec.name] = lo
                col_range[spec.name] = span
                blocks.append(encoded)
                names.append(spec.name)
                encoding_map[spec.name] = list(range(start, start + 1))
            else:
                index = {c: i for i, c in enumerate(spec.categories)}
                encoded = np.zeros((n, len(spec.categories)))
                for r, v in enumerate(col):
                    if v not in index:
                        raise ValidationError(
                            f"column {spec.name!r}: unknown category {v!r}"
                        )
                    encoded[r, index[v]] = ONE_HOT_SCALE
                blocks.append(encoded)
                names.extend(f"{spec.name}={c}" for c in spec.categories)
                encoding_map[spec.name] = list(
                    range(start, start + len(spec.categories))
                )
        features = np.hstack(blocks)
        return Dataset(
            features=features,
            schema=tuple(schema),
            encoding_map=encoding_map,
            feature_names=tuple(names),
            distances=pairwise_distances(features),
            col_min=col_min,
            col_range=col_range,
        )

    @staticmethod
    def from_matrix(X, names=None):
        """Build a Dataset from an all-numeric matrix (rows = observations)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValidationError("expected a 2-D matrix")
        if names is None:
            names = [f"x{j + 1}" for j in range(X.shape[1])]
        schema = [ColumnSchema(name, "numeric") for name in names]
        return Dataset.from_columns([X[:, j] for j in range(X.shape[1])], schema)

    def encode(self, rows):
        """Encode new raw rows (per original column order) like the training data.

        Numeric values are scaled with the training min/range and clipped to
        [0, 1]; unknown categories are rejected.
        """
        out = np.zeros((len(rows), self.p))
        for r, row in enumerate(rows):
            if len(row) != len(self.schema):
                raise ValidationError(
                    f"row {r}: expected {len(self.schema)} columns, got {len(row)}"
                )
            for spec, value in zip(self.schema, row):
                idx = self.encoding_map[spec.name]
                if spec.kind == "numeric":
                    span = self.col_range[spec.name]
                    if span == 0.0:
                        out[r, idx[0]] = 0.0
                    else:
                        scaled = (float(value) - self.col_min[spec.name]) / span
                        out[r, idx[0]] = min(max(scaled, 0.0), 1.0)
                else:
                    if value not in spec.categories:
                        raise ValidationError(
                            f"column {spec.name!r}: unknown category {value!r}"
                        )
                    out[r, idx[spec.categories.index(value)]] = ONE_HOT_SCALE
        return out


@dataclass(frozen=True)
class LabeledDataset:
    """Dataset bundled with ground-truth cluster labels (positive integers)."""

    data: Dataset
    truth: np.ndarray

    def __post_init__(self):
        truth = np.asarray(self.truth, dtype=int)
        if truth.shape != (self.data.n,):
            raise ValidationError("truth labels must match the observation count")
        if truth.min(initial=1) < 1:
            raise ValidationError("truth labels must be positive integers")
        object.__setattr__(self, "truth", truth)


def pairwise_distances(features):
    """Full Euclidean distance matrix (symmetric, zero diagonal)."""
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain non-finite entries")
    n = X.shape[0]
    D = np.empty((n, n))
    # direct differences in row blocks: accurate for near-duplicate points,
    # bounded memory for large n
    block = max(1, 2**22 // max(n * X.shape[1], 1))
    for start in range(0, n, block):
        diff = X[start : start + block, None, :] - X[None, :, :]
        D[start : start + block] = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(D, 0.0)
    return np.minimum(D, D.T)


def min_separation_vector(features):
    """Per-dimension minimum positive gap between distinct values.

    A dimension whose values are all equal gets gap 1.0, which makes the
    strict-split constraint unsatisfiable there (no split exists on a
    constant feature). Returns (eps vector, max entry).
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] < 2:
        raise ValidationError("need at least 2 observations")
    eps = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        gaps = np.diff(np.unique(X[:, j]))
        eps[j] = gaps.min() if gaps.size else 1.0
    return eps, float(eps.max())


# ---------------------------------------------------------------------------
# CSV / FCPS-style loading
# ---------------------------------------------------------------------------

_SHAPE_CODES = {
    "gaussian_blobs": 0,
    "tetra": 1,
    "two_diamonds": 2,
    "target_rings": 3,
    "wingnut": 4,
}

_SHAPE_CLUSTERS = {
    "gaussian_blobs": 2,
    "tetra": 4,
    "two_diamonds": 2,
    "target_rings": 3,
    "wingnut": 2,
}

SHAPES = tuple(_SHAPE_CODES)


def _is_number(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _read_table(path):
    """Read a comma- or whitespace-delimited table with a header row."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise ParseError("empty file", row=1)
        delimiter = "," if "," in first else None
        fh.seek(0)
        if delimiter == ",":
            reader = csv.reader(fh)
            rows = [[c.strip() for c in row] for row in reader if row]
        else:
            rows = [line.split() for line in fh if line.strip()]
    header = rows[0]
    width = len(header)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(
                f"expected {width} cells, found {len(row)}", row=r
            )
        for c, cell in enumerate(row, start=1):
            if cell == "":
                raise ValidationError(f"missing cell at row {r}, column {c}")
    return header, rows[1:]


def load_csv(path, schema_hint=None, label_col=None):
    """Load a delimited table into a Dataset (or LabeledDataset).

    A column is numeric iff every cell parses as a decimal number; the
    optional ``schema_hint`` (column name -> "numeric"/"categorical")
    overrides detection. A column named ``class`` (or the one named by
    ``label_col``) is split off as ground-truth labels, producing a
    LabeledDataset.
    """
    header, body = _read_table(path)
    if len(body) < 2:
        raise ValidationError("need at least 2 data rows")
    schema_hint = schema_hint or {}
    for name in schema_hint:
        if name not in header:
            raise ValidationError(f"schema hint names unknown column {name!r}")
    if label_col is None and "class" in header:
        label_col = "class"
    if label_col is not None and label_col not in header:
        raise ValidationError(f"label column {label_col!r} not found")

    truth = None
    columns, schema = [], []
    for j, name in enumerate(header):
        col = [row[j] for row in body]
        if name == label_col:
            try:
                truth = np.asarray([int(float(v)) for v in col])
            except ValueError as exc:
                raise ValidationError(f"label column {name!r}: {exc}") from exc
            continue
        kind = schema_hint.get(name)
        if kind is None:
            kind = "numeric" if all(_is_number(v) for v in col) else "categorical"
        if kind == "numeric":
            try:
                values = [float(v) for v in col]
            except ValueError as exc:
                raise ValidationError(f"column {name!r}: {exc}") from exc
            columns.append(values)
            schema.append(ColumnSchema(name, "numeric"))
        else:
            categories = tuple(sorted(set(col)))
            columns.append(col)
            schema.append(ColumnSchema(name, "categorical", categories))
    data = Dataset.from_columns(columns, schema)
    if truth is not None:
        return LabeledDataset(data=data, truth=truth)
    return data


# ---------------------------------------------------------------------------
# Synthetic FCPS-style generators
# ---------------------------------------------------------------------------


def _split_counts(n, k):
    base = n // k
    counts = [base] * k
    for i in range(n - base * k):
        counts[i] += 1
    return counts


def generate_synthetic(shape, n, seed):
    """Generate a labeled synthetic dataset approximating an FCPS geometry.

    Deterministic for fixed (shape, n, seed). Features are normalized through
    the standard Dataset pipeline; truth labels are 1-based.
    """
    if shape not in _SHAPE_CODES:
        raise ValueError(f"unknown shape {shape!r}; choose from {SHAPES}")
    k = _SHAPE_CLUSTERS[shape]
    if n < 4 * k:
        raise ValidationError(f"shape {shape!r} needs n >= {4 * k}")
    rng = np.random.default_rng([seed, _SHAPE_CODES[shape]])

    if shape == "gaussian_blobs":
        centers = np.array([[0.0, 0.0], [1.0, 1.0]])
        sigma = 0.05
        counts = _split_counts(n, 2)
        X = np.vstack(
            [c + sigma * rng.standard_normal((m, 2)) for c, m in zip(centers, counts)]
        )
    elif shape == "tetra":
        centers = np.array(
            [
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.5, math.sqrt(3.0) / 2.0, 0.0],
                [0.5, math.sqrt(3.0) / 6.0, math.sqrt(2.0 / 3.0)],
            ]
        )
        sigma = 0.07
        counts = _split_counts(n, 4)
        X = np.vstack(
            [c + sigma * rng.standard_normal((m, 3)) for c, m in zip(centers, counts)]
        )
    elif shape == "two_diamonds":
        counts = _split_counts(n, 2)
        parts = []
        for cx, m in zip((-0.6, 0.6), counts):
            # uniform in the diamond |x| + |y| <= 0.45 around (cx, 0)
            u = rng.uniform(-0.45, 0.45, size=(m, 2))
            pts = np.column_stack([(u[:, 0] + u[:, 1]) / 2, (u[:, 0] - u[:, 1]) / 2])
            pts[:, 0] += cx
            parts.append(pts)
        X = np.vstack(parts)
    elif shape == "target_rings":
        # central blob plus a surrounding ring broken into two arcs, so the
        # ring pieces are separable by axis-parallel cuts
        counts = _split_counts(n, 3)
        blob = 0.05 * rng.standard_normal((counts[0], 2))
        arcs = []
        for (lo, hi), m in zip(((20.0, 160.0), (200.0, 340.0)), counts[1:]):
            theta = np.radians(rng.uniform(lo, hi, size=m))
            radius = 1.0 + 0.03 * rng.standard_normal(m)
            arcs.append(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
        X = np.vstack([blob] + arcs)
    else:  # wingnut
        counts = _split_counts(n, 2)
        lower = np.column_stack(
            [rng.uniform(0.0, 1.0, counts[0]), rng.uniform(0.0, 0.5, counts[0])]
        )
        upper = np.column_stack(
            [rng.uniform(0.3, 1.3, counts[1]), rng.uniform(0.7, 1.2, counts[1])]
        )
        X = np.vstack([lower, upper])

    truth = np.concatenate([np.full(m, i + 1) for i, m in enumerate(counts)])
    return LabeledDataset(data=Dataset.from_matrix(X), truth=truth)
