"""Sparse logistic modeling: transforms, solver, metrics, CV, serialization."""

from .cv import (
    DEFAULT_CANDIDATES,
    CVReport,
    FoldResult,
    ModelCandidate,
    NestedCVResult,
    StableFeature,
    binary_target,
    nested_cv,
    repeated_stratified_folds,
    stability_select,
    stratified_kfold,
    stratified_split,
)
from .metrics import pr_curve, roc_auc, roc_points
from .model import (
    SparseModel,
    evaluate_holdout,
    load_model,
    predict_scores,
    save_model,
    tune_and_fit,
)
from .solver import (
    L1Fit,
    compute_class_weights,
    fit_l1_logistic,
    fit_path,
    fit_relaxed_l1,
    kkt_residuals,
    lambda_max,
    lambda_path,
    soft_threshold,
)
from .transform import (
    TransformParams,
    apply_transform,
    apply_transform_matrix,
    cohort_matrix,
    fit_transform,
    fit_transform_matrix,
)

__all__ = [
    "DEFAULT_CANDIDATES",
    "CVReport",
    "FoldResult",
    "ModelCandidate",
    "NestedCVResult",
    "StableFeature",
    "SparseModel",
    "L1Fit",
    "TransformParams",
    "apply_transform",
    "apply_transform_matrix",
    "binary_target",
    "cohort_matrix",
    "compute_class_weights",
    "evaluate_holdout",
    "fit_l1_logistic",
    "fit_path",
    "fit_relaxed_l1",
    "fit_transform",
    "fit_transform_matrix",
    "kkt_residuals",
    "lambda_max",
    "lambda_path",
    "load_model",
    "nested_cv",
    "pr_curve",
    "predict_scores",
    "repeated_stratified_folds",
    "roc_auc",
    "roc_points",
    "save_model",
    "soft_threshold",
    "stability_select",
    "stratified_kfold",
    "stratified_split",
    "tune_and_fit",
]
