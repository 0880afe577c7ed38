from .hdbscan import ClusterModel, fit_hdbscan, mutual_reachability
from .pipeline import (
    OUTLIER_QUERY_A,
    OUTLIER_QUERY_B,
    ClusterPipeline,
    PipelineFit,
    dump_fit_csv,
    labels_equal,
)
from .preprocess import PcaBasis, Standardizer, fit_pca, fit_standardizer

__all__ = [
    "ClusterModel",
    "ClusterPipeline",
    "OUTLIER_QUERY_A",
    "OUTLIER_QUERY_B",
    "PcaBasis",
    "PipelineFit",
    "Standardizer",
    "dump_fit_csv",
    "fit_hdbscan",
    "fit_pca",
    "fit_standardizer",
    "labels_equal",
    "mutual_reachability",
]
