"""Prototype selection for correlated features with exact post-selection
inference: correlation clustering, gap-statistic cluster counts, prototype
extraction, a second-stage lasso with polyhedral selective inference,
screening-only marginal tests with BH control, and a split-sample knockoff
filter."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .cluster import (
    Clustering,
    adjusted_rand_index,
    correlation_dissimilarity,
    cut,
    hclust,
)
from .dataset import (
    BlockDesignSpec,
    Dataset,
    generate_block_design,
    generate_response,
    load_csv,
    standardize,
    standardize_dataset,
)
from .errors import InputError, NumericalError, ProtoselectError
from .gapstat import estimate_clusters
from .knockoff import (
    knockoff_threshold,
    make_knockoffs,
    run_knockoff_protolasso,
)
from .lasso import cv_lambda, entry_values, fit_lasso, lambda_max
from .pipeline import run_protolasso
from .polyhedra import selective_ci, selective_pvalue, truncation_bounds
from .proto import extract_prototypes, screening_constraints
from .prototest import bh_procedure, run_prototest

__all__ = [
    "BACKEND",
    "BlockDesignSpec",
    "Clustering",
    "Dataset",
    "InputError",
    "NumericalError",
    "ProtoselectError",
    "__version__",
    "adjusted_rand_index",
    "bh_procedure",
    "correlation_dissimilarity",
    "cut",
    "cv_lambda",
    "entry_values",
    "estimate_clusters",
    "extract_prototypes",
    "fit_lasso",
    "generate_block_design",
    "generate_response",
    "hclust",
    "knockoff_threshold",
    "lambda_max",
    "load_csv",
    "make_knockoffs",
    "run_knockoff_protolasso",
    "run_protolasso",
    "run_prototest",
    "screening_constraints",
    "selective_ci",
    "selective_pvalue",
    "standardize",
    "standardize_dataset",
    "truncation_bounds",
]
