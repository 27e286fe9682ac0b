"""Interpretable tree-based clustering optimized against validity criteria."""

from .dataset import (
    ColumnSchema,
    Dataset,
    LabeledDataset,
    SHAPES,
    generate_synthetic,
    load_csv,
    min_separation_vector,
    pairwise_distances,
)
from .errors import (
    ICOTError,
    InstanceTooLargeError,
    ParseError,
    ValidationError,
)
from .estimator import ICOT
from .metrics import (
    Assignment,
    CriterionScore,
    dunn,
    evaluate_assignment,
    silhouette,
)
from .search import SearchConfig, SearchTrace, auto_cluster_count, fit
from .tree import (
    ClusterTree,
    SplitRule,
    assign_all,
    candidate_thresholds,
    decision_paths,
    deserialize,
    route,
    serialize,
)

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "ClusterTree",
    "ColumnSchema",
    "CriterionScore",
    "Dataset",
    "ICOT",
    "ICOTError",
    "InstanceTooLargeError",
    "LabeledDataset",
    "ParseError",
    "SHAPES",
    "SearchConfig",
    "SearchTrace",
    "SplitRule",
    "ValidationError",
    "assign_all",
    "auto_cluster_count",
    "candidate_thresholds",
    "decision_paths",
    "deserialize",
    "dunn",
    "evaluate_assignment",
    "fit",
    "generate_synthetic",
    "load_csv",
    "min_separation_vector",
    "pairwise_distances",
    "route",
    "serialize",
    "silhouette",
]
