"""Feature transform pipeline fitted on training data only.

Order of operations: (1) drop features with fewer than 10 distinct training
values; (2) log-transform x -> ln(x + 1e-8) for area-valued mean summaries and
every std summary; (3) impute missing values with the training median of the
transformed feature; (4) center by that median and scale by the raw MAD
(falling back to the IQR; a feature with no spread is dropped).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError
from ..naming import SLIDE_FEATURE_NAMES, is_log_feature, slide_feature_index
from ..stats import median_abs_deviation

LOG_EPSILON = 1e-8
MIN_UNIQUE_VALUES = 10


@dataclass
class FeatureTransform:
    log_flag: bool = False
    median: float = 0.0
    scale: float = 1.0
    dropped: bool = True
    imputation_value: float = 0.0


@dataclass
class TransformParams:
    features: dict = field(default_factory=dict)  # name -> FeatureTransform
    warnings: list = field(default_factory=list)

    @property
    def retained_names(self):
        return [
            n for n in SLIDE_FEATURE_NAMES
            if n in self.features and not self.features[n].dropped
        ]

    def digest(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.features):
            ft = self.features[name]
            h.update(
                f"{name}|{ft.log_flag}|{ft.median!r}|{ft.scale!r}|{ft.dropped}".encode()
            )
        return h.hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            name: {
                "log_flag": ft.log_flag,
                "median": ft.median,
                "scale": ft.scale,
                "dropped": ft.dropped,
                "imputation_value": ft.imputation_value,
            }
            for name, ft in self.features.items()
        }

    @classmethod
    def from_dict(cls, payload: dict):
        params = cls()
        for name, d in payload.items():
            params.features[name] = FeatureTransform(
                log_flag=d["log_flag"],
                median=d["median"],
                scale=d["scale"],
                dropped=d["dropped"],
                imputation_value=d["imputation_value"],
            )
        return params


def cohort_matrix(cohort):
    """(n x 372 matrix, slide_ids, labels) in canonical column order."""
    matrix = np.array(
        [[v.features.get(name, math.nan) for name in SLIDE_FEATURE_NAMES] for v in cohort],
        dtype=np.float64,
    )
    return matrix, [v.slide_id for v in cohort], [v.label for v in cohort]


def _log_values(values, name):
    shifted = values + LOG_EPSILON
    if np.any(shifted[~np.isnan(shifted)] <= 0.0):
        raise NumericalError(f"{name}: log transform of non-positive values")
    return np.log(shifted)


def fit_transform_matrix(matrix: np.ndarray) -> TransformParams:
    """Fit per-feature transform parameters from a raw training matrix."""
    if matrix.shape[0] == 0:
        raise NumericalError("fit_transform: empty training cohort")
    params = TransformParams()
    for j, name in enumerate(SLIDE_FEATURE_NAMES):
        col = matrix[:, j]
        observed = col[~np.isnan(col)]
        ft = FeatureTransform(log_flag=is_log_feature(name))
        if observed.size == 0 or np.unique(observed).size < MIN_UNIQUE_VALUES:
            ft.dropped = True
            params.features[name] = ft
            continue
        values = _log_values(observed, name) if ft.log_flag else observed
        ft.median = float(np.median(values))
        ft.imputation_value = ft.median
        mad = median_abs_deviation(values)
        if mad > 0.0:
            ft.scale = mad
        else:
            q75, q25 = np.percentile(values, [75.0, 25.0], method="linear")
            iqr = float(q75 - q25)
            if iqr > 0.0:
                ft.scale = iqr
                params.warnings.append(f"{name}: MAD is 0, scaled by IQR")
            else:
                ft.dropped = True
                params.warnings.append(f"{name}: constant after transform, dropped")
                params.features[name] = ft
                continue
        ft.dropped = False
        params.features[name] = ft
    return params


def apply_transform_matrix(params: TransformParams, matrix: np.ndarray):
    """Replay fitted parameters on any cohort matrix.

    Returns (X over retained features in canonical order, retained names).
    """
    names = params.retained_names
    out = np.empty((matrix.shape[0], len(names)), dtype=np.float64)
    for k, name in enumerate(names):
        ft = params.features[name]
        col = matrix[:, slide_feature_index(name)].copy()
        missing = np.isnan(col)
        if ft.log_flag:
            col[~missing] = _log_values(col[~missing], name)
        col[missing] = ft.imputation_value
        out[:, k] = (col - ft.median) / ft.scale
    return out, names


def fit_transform(cohort):
    """Convenience wrapper over SlideFeatureVector cohorts."""
    matrix, _, _ = cohort_matrix(cohort)
    return fit_transform_matrix(matrix)


def apply_transform(params: TransformParams, cohort):
    matrix, _, _ = cohort_matrix(cohort)
    return apply_transform_matrix(params, matrix)
