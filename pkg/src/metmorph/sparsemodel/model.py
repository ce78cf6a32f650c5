"""Fitted sparse model: serialization, prediction and holdout evaluation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import NumericalError, SchemaError
from ..io import TOOL_VERSION, read_json, write_json
from ..naming import ALTERED_LABELS
from .cv import binary_target, repeated_stratified_folds
from .metrics import pr_curve, roc_auc, roc_points
from .solver import (
    compute_class_weights,
    fit_l1_logistic,
    fit_path,
    fit_relaxed_l1,
    lambda_max,
    lambda_path,
)
from .transform import (
    TransformParams,
    apply_transform_matrix,
    cohort_matrix,
    fit_transform_matrix,
)

MODEL_SCHEMA_VERSION = 1


@dataclass
class SparseModel:
    transform: TransformParams
    coefficients: dict  # feature name -> nonzero coefficient
    intercept: float
    lam: float
    relax_gamma: float  # 1.0 = plain LASSO
    class_weights: object  # "balanced" | (w_neg, w_pos)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": MODEL_SCHEMA_VERSION,
            "transform": self.transform.to_dict(),
            "coefficients": dict(sorted(self.coefficients.items())),
            "intercept": self.intercept,
            "lambda": self.lam,
            "relax_gamma": self.relax_gamma,
            "class_weights": (
                self.class_weights
                if isinstance(self.class_weights, str)
                else list(self.class_weights)
            ),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, payload: dict):
        if payload.get("schema_version") != MODEL_SCHEMA_VERSION:
            raise SchemaError(
                f"unsupported model schema_version {payload.get('schema_version')!r}"
            )
        weights = payload["class_weights"]
        if not isinstance(weights, str):
            weights = tuple(weights)
        return cls(
            transform=TransformParams.from_dict(payload["transform"]),
            coefficients=payload["coefficients"],
            intercept=payload["intercept"],
            lam=payload["lambda"],
            relax_gamma=payload["relax_gamma"],
            class_weights=weights,
            meta=payload.get("meta", {}),
        )


def save_model(path, model: SparseModel):
    write_json(path, model.to_dict())


def load_model(path) -> SparseModel:
    return SparseModel.from_dict(read_json(path))


def predict_scores(model: SparseModel, cohort) -> np.ndarray:
    """Probability of the altered class per slide."""
    needed = set(model.coefficients)
    for v in cohort:
        missing = sorted(needed - set(v.features))
        if missing:
            raise SchemaError(
                f"slide {v.slide_id}: missing model features {missing[:10]}"
                + ("..." if len(missing) > 10 else "")
            )
    matrix, _, _ = cohort_matrix(cohort)
    X, names = apply_transform_matrix(model.transform, matrix)
    beta = np.array([model.coefficients.get(name, 0.0) for name in names])
    return expit(X @ beta + model.intercept)


def tune_and_fit(
    cohort,
    family: str = "lasso",
    weights="balanced",
    inner_design=(5, 5),
    n_lambdas: int = 50,
    lambda_min_ratio: float = 1e-3,
    gamma_grid=(0.0, 0.25, 0.5, 0.75, 1.0),
    seed: int = 0,
    dfmax_ratio: float = 1.0 / 3.0,
) -> SparseModel:
    """Re-tune the penalty with the inner loop on the full cohort, then fit."""
    matrix, slide_ids, labels = cohort_matrix(cohort)
    y = binary_target(labels)
    params = fit_transform_matrix(matrix)
    X, names = apply_transform_matrix(params, matrix)
    w, weight_pair = compute_class_weights(y, weights)
    grid = lambda_path(lambda_max(X, y, w), n_lambdas, lambda_min_ratio)

    from .cv import RELAX_ACTIVE_CAP

    folds = repeated_stratified_folds(y, inner_design[0], inner_design[1], seed)
    n_folds = len(folds)
    lasso_scores = [[] for _ in grid]
    relaxed_scores = [[[] for _ in gamma_grid] for _ in grid]
    for _, _, itr, ival in folds:
        p_in = fit_transform_matrix(matrix[itr])
        Xi, _ = apply_transform_matrix(p_in, matrix[itr])
        Xiv, _ = apply_transform_matrix(p_in, matrix[ival])
        w_in, _ = compute_class_weights(y[itr], weights)
        dfmax = max(50, int(dfmax_ratio * len(itr)))
        fits = fit_path(Xi, y[itr], w_in, grid, tol=1e-5, max_sweeps=1000, dfmax=dfmax)
        relaxed_warm = {gi: None for gi in range(len(gamma_grid))}
        for li, fit in enumerate(fits):
            score = roc_auc(Xiv @ fit.coefficients + fit.intercept, y[ival])
            lasso_scores[li].append(score)
            if family == "relaxed":
                n_active = int((fit.coefficients != 0.0).sum())
                for gi, gamma in enumerate(gamma_grid):
                    if gamma == 1.0:
                        relaxed_scores[li][gi].append(score)
                        continue
                    if n_active > RELAX_ACTIVE_CAP:
                        continue
                    rf = fit_relaxed_l1(
                        Xi, y[itr], w_in, float(grid[li]), gamma,
                        base_fit=fit, refit_init=relaxed_warm[gi],
                        tol=1e-5, max_sweeps=1000, raise_on_nonconvergence=False,
                    )
                    relaxed_warm[gi] = (rf.coefficients, rf.intercept)
                    relaxed_scores[li][gi].append(
                        roc_auc(Xiv @ rf.coefficients + rf.intercept, y[ival])
                    )

    if family == "lasso":
        eligible = [li for li in range(len(grid)) if len(lasso_scores[li]) == n_folds]
        best_li = max(eligible, key=lambda li: (np.mean(lasso_scores[li]), -li))
        lam, gamma = float(grid[best_li]), 1.0
    elif family == "relaxed":
        eligible = [
            (li, gi)
            for li in range(len(grid))
            for gi in range(len(gamma_grid))
            if len(relaxed_scores[li][gi]) == n_folds
        ]
        best_li, best_gi = max(
            eligible, key=lambda t: (np.mean(relaxed_scores[t[0]][t[1]]), -t[0], t[1])
        )
        lam, gamma = float(grid[best_li]), float(gamma_grid[best_gi])
    else:
        raise NumericalError(f"unknown model family {family!r}")

    # Warm-start down the grid, then polish the final fit at full tolerance.
    prefix = [float(g) for g in grid if g > lam]
    warm = None
    if prefix:
        warm_fits = fit_path(X, y, w, prefix, tol=1e-5, max_sweeps=1000)
        warm = (warm_fits[-1].coefficients, warm_fits[-1].intercept)
    base = fit_l1_logistic(
        X, y, w, lam, init=warm, raise_on_nonconvergence=False
    )
    if gamma == 1.0:
        fit = base
    else:
        fit = fit_relaxed_l1(
            X, y, w, lam, gamma, base_fit=base, raise_on_nonconvergence=False
        )

    coefs = {names[j]: float(c) for j, c in enumerate(fit.coefficients) if c != 0.0}
    scores = expit(X @ fit.coefficients + fit.intercept)
    ids = sorted(slide_ids)
    model = SparseModel(
        transform=params,
        coefficients=coefs,
        intercept=float(fit.intercept),
        lam=lam,
        relax_gamma=gamma,
        class_weights="balanced" if weights == "balanced" else weight_pair,
        meta={
            "family": family,
            "training_slide_ids": ids,
            "training_manifest_sha256": hashlib.sha256("\n".join(ids).encode()).hexdigest(),
            "in_sample_auc": float(roc_auc(scores, y)),
            "inner_design": list(inner_design),
            "seed": seed,
            "n_active": len(coefs),
            "tool_version": TOOL_VERSION,
        },
    )
    return model


def evaluate_holdout(model: SparseModel, holdout) -> dict:
    """Overall and per-alteration-subgroup metrics on a disjoint cohort."""
    train_ids = set(model.meta.get("training_slide_ids", []))
    overlap = sorted(train_ids & {v.slide_id for v in holdout})
    if overlap:
        raise SchemaError(
            f"holdout overlaps the training manifest: {overlap[:5]}"
            + ("..." if len(overlap) > 5 else "")
        )
    labels = [v.label for v in holdout]
    if any(lab is None for lab in labels):
        raise SchemaError("holdout evaluation requires labels on every slide")
    y = binary_target(labels)
    scores = predict_scores(model, holdout)
    points, ap = pr_curve(scores, y)
    result = {
        "n": len(holdout),
        "auc": roc_auc(scores, y),
        "average_precision": ap,
        "roc_points": roc_points(scores, y),
        "pr_points": points,
        "subgroup_auc": {},
    }
    labels_arr = np.array(labels)
    wt_mask = labels_arr == "wild_type"
    for cls in ALTERED_LABELS:
        cls_mask = labels_arr == cls
        if cls_mask.sum() == 0 or wt_mask.sum() == 0:
            result["subgroup_auc"][cls] = None
            continue
        sub = wt_mask | cls_mask
        result["subgroup_auc"][cls] = roc_auc(scores[sub], y[sub])
    return result
