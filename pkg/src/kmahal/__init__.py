"""Clustering for incomplete data.

The package couples K-means style clustering with missing-value handling
in three tiers: plain K-means on externally completed data, a unified
Euclidean variant that re-fills missing cells from cluster centers inside
the loop, and a Mahalanobis engine that additionally learns per-cluster
covariances and imputes by conditional means. Supporting modules provide
mean and KNN imputation, ARI and NMI agreement metrics, a calibrated
Gaussian mixture generator with controlled cluster overlap, missingness
injection, and a replicated experiment harness.
"""

__version__ = "0.1.0"

from .data import (
    ALGORITHMS,
    AssignmentMatrix,
    ClusterModel,
    ConfigurationError,
    Dataset,
    EngineConfig,
    dataset_from_csv,
    dataset_to_csv,
    read_dataset_csv,
    split_row,
    write_dataset_csv,
)
from .clustering import (
    FitResult,
    conditional_mean,
    criterion_a,
    fit,
    fit_kmahal,
    fit_kmeans,
    fit_unified_kmeans,
    mahalanobis_sq,
)
from .imputation import (
    IMPUTATION_METHODS,
    ImputationConfig,
    ImputationError,
    impute,
    knn_impute,
    mean_impute,
)
from .metrics import (
    ContingencyTable,
    UndefinedMetricError,
    adjusted_rand_index,
    normalized_mutual_information,
)
from .datagen import (
    CalibrationError,
    LoadError,
    MissingnessPlan,
    MixtureInfo,
    MixtureSpec,
    estimate_max_pairwise_overlap,
    estimate_pairwise_overlap,
    generate_mixture,
    inject_missing,
    load_iris,
)
from .harness import (
    DEFAULT_FIGURE_SEED,
    ExperimentConfig,
    RunRecord,
    SummaryRow,
    config_from_json,
    config_to_json,
    demo_figure1,
    records_from_csv,
    records_to_csv,
    run_experiment,
    summarize,
    summary_to_csv,
)

__all__ = [
    "__version__",
    "ALGORITHMS",
    "IMPUTATION_METHODS",
    "AssignmentMatrix",
    "CalibrationError",
    "ClusterModel",
    "ConfigurationError",
    "ContingencyTable",
    "Dataset",
    "DEFAULT_FIGURE_SEED",
    "EngineConfig",
    "ExperimentConfig",
    "FitResult",
    "ImputationConfig",
    "ImputationError",
    "LoadError",
    "MissingnessPlan",
    "MixtureInfo",
    "MixtureSpec",
    "RunRecord",
    "SummaryRow",
    "UndefinedMetricError",
    "adjusted_rand_index",
    "conditional_mean",
    "config_from_json",
    "config_to_json",
    "criterion_a",
    "dataset_from_csv",
    "dataset_to_csv",
    "demo_figure1",
    "estimate_max_pairwise_overlap",
    "estimate_pairwise_overlap",
    "fit",
    "fit_kmahal",
    "fit_kmeans",
    "fit_unified_kmeans",
    "generate_mixture",
    "impute",
    "inject_missing",
    "knn_impute",
    "load_iris",
    "mahalanobis_sq",
    "mean_impute",
    "normalized_mutual_information",
    "read_dataset_csv",
    "records_from_csv",
    "records_to_csv",
    "run_experiment",
    "split_row",
    "summarize",
    "summary_to_csv",
    "write_dataset_csv",
]
