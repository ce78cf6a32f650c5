import math

import numpy as np
import pytest

from metmorph.naming import SLIDE_FEATURE_NAMES, is_log_feature
from metmorph.slideagg import SlideFeatureVector
from metmorph.sparsemodel.transform import (
    LOG_EPSILON,
    apply_transform,
    apply_transform_matrix,
    cohort_matrix,
    fit_transform,
    fit_transform_matrix,
)


def make_cohort(rng, n=40, missing_feature=None):
    cohort = []
    for i in range(n):
        features = {}
        for name in SLIDE_FEATURE_NAMES:
            value = float(np.exp(rng.normal())) if is_log_feature(name) else float(rng.normal())
            features[name] = value
        if missing_feature and i % 3 == 0:
            features[missing_feature] = math.nan
        cohort.append(SlideFeatureVector(f"s{i}", "wild_type", features))
    return cohort


def test_log_flag_rule():
    assert is_log_feature("tumor.shape.area.mean")
    assert is_log_feature("lymph.shape.bbox_area.mean")
    assert is_log_feature("tumor.color.hue_mean.std")
    assert is_log_feature("lymph.texture.canny_sum.std")
    assert not is_log_feature("tumor.shape.area.skewness")
    assert not is_log_feature("tumor.shape.perimeter.mean")
    assert not is_log_feature("global.percent.tumor_percent")
    n_logged = sum(is_log_feature(n) for n in SLIDE_FEATURE_NAMES)
    assert n_logged == 2 * 46 + 4  # every std summary plus 4 area means


def test_geometric_triple_maps_to_symmetric_units():
    # ln of {1, 10, 100} is symmetric: median-centered, MAD-scaled -> {-1, 0, 1}
    values = np.array([1.0, 10.0, 100.0])
    logged = np.log(values + LOG_EPSILON)
    med = np.median(logged)
    mad = np.median(np.abs(logged - med))
    out = (logged - med) / mad
    assert out == pytest.approx([-1.0, 0.0, 1.0], abs=1e-7)


def test_few_unique_values_dropped():
    rng = np.random.default_rng(0)
    cohort = make_cohort(rng)
    binary_name = "tumor.shape.perimeter.kurtosis"
    for i, v in enumerate(cohort):
        v.features[binary_name] = float(i % 2)
    params = fit_transform(cohort)
    assert params.features[binary_name].dropped
    assert binary_name not in params.retained_names


def test_training_median_zero_after_apply():
    rng = np.random.default_rng(1)
    cohort = make_cohort(rng, n=41)  # odd: median is an order statistic
    params = fit_transform(cohort)
    X, names = apply_transform(params, cohort)
    med = np.median(X, axis=0)
    assert np.max(np.abs(med)) == 0.0
    assert names == params.retained_names


def test_missing_values_imputed_at_training_median():
    rng = np.random.default_rng(2)
    name = "tumor.intensity.iqr.skewness"
    cohort = make_cohort(rng, n=30, missing_feature=name)
    params = fit_transform(cohort)
    ft = params.features[name]
    assert not ft.dropped
    assert ft.imputation_value == ft.median
    X, names = apply_transform(params, cohort)
    col = X[:, names.index(name)]
    missing_rows = [i for i in range(30) if i % 3 == 0]
    for i in missing_rows:
        assert col[i] == 0.0  # imputed at the centered median


def test_apply_on_new_cohort_uses_training_params():
    rng = np.random.default_rng(3)
    train = make_cohort(rng, n=25)
    test = make_cohort(rng, n=10)
    params = fit_transform(train)
    X_test, _ = apply_transform(params, test)
    X_test2, _ = apply_transform(params, test)
    assert np.array_equal(X_test, X_test2)
    params2 = fit_transform(test)
    assert params2.digest() != params.digest()


def test_constant_feature_dropped_with_warning():
    rng = np.random.default_rng(4)
    cohort = make_cohort(rng)
    name = "lymph.intensity.max.mean"
    for v in cohort:
        v.features[name] = 7.25
    params = fit_transform(cohort)
    assert params.features[name].dropped


def test_empty_cohort_errors():
    from metmorph.errors import NumericalError

    with pytest.raises(NumericalError):
        fit_transform_matrix(np.empty((0, len(SLIDE_FEATURE_NAMES))))


def test_transform_dict_roundtrip():
    rng = np.random.default_rng(5)
    cohort = make_cohort(rng, n=20)
    params = fit_transform(cohort)
    from metmorph.sparsemodel.transform import TransformParams

    clone = TransformParams.from_dict(params.to_dict())
    matrix, _, _ = cohort_matrix(cohort)
    a, _ = apply_transform_matrix(params, matrix)
    b, _ = apply_transform_matrix(clone, matrix)
    assert np.array_equal(a, b)
