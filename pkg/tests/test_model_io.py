import numpy as np
import pytest

from metmorph.errors import SchemaError
from metmorph.sparsemodel import (
    evaluate_holdout,
    load_model,
    predict_scores,
    save_model,
    tune_and_fit,
)
from metmorph.synthgen import FeatureCohortSpec, FeatureShift, sample_feature_cohort


def make_split(seed=3, n_wt=90, n_amp=30, n_exon=20, size=1.8):
    shifts = (
        FeatureShift("tumor.color.hue_mean.mean", ("amplified", "exon14"), size),
        FeatureShift("lymph.intensity.mean.mean", ("amplified", "exon14"), size),
    )
    spec = FeatureCohortSpec(
        seed=seed,
        n_per_class={"wild_type": n_wt, "amplified": n_amp, "exon14": n_exon},
        shifts=shifts,
    )
    cohort, _ = sample_feature_cohort(spec)
    train = cohort[::2]
    holdout = cohort[1::2]
    return train, holdout


@pytest.fixture(scope="module")
def fitted():
    train, holdout = make_split()
    model = tune_and_fit(train, family="lasso", weights=(0.3, 0.7),
                         inner_design=(1, 3), n_lambdas=20, seed=5)
    return model, train, holdout


def test_model_roundtrip_bit_stable(tmp_path, fitted):
    model, train, holdout = fitted
    path = tmp_path / "model.json"
    save_model(path, model)
    clone = load_model(path)
    a = predict_scores(model, holdout)
    b = predict_scores(clone, holdout)
    assert np.array_equal(a, b)
    save_model(tmp_path / "model2.json", clone)
    assert (tmp_path / "model2.json").read_bytes() == path.read_bytes()


def test_predictions_are_probabilities(fitted):
    model, train, holdout = fitted
    scores = predict_scores(model, holdout)
    assert np.all((scores >= 0.0) & (scores <= 1.0))
    assert model.meta["in_sample_auc"] > 0.7


def test_missing_model_features_error(fitted):
    model, _, holdout = fitted
    broken = [
        type(v)(v.slide_id, v.label, dict(v.features), v.provenance) for v in holdout[:3]
    ]
    victim = sorted(model.coefficients)[0]
    for v in broken:
        del v.features[victim]
    with pytest.raises(SchemaError) as err:
        predict_scores(model, broken)
    assert victim in str(err.value)


def test_holdout_evaluation_and_subgroups(fitted):
    model, train, holdout = fitted
    result = evaluate_holdout(model, holdout)
    assert 0.5 < result["auc"] <= 1.0
    assert 0.0 < result["average_precision"] <= 1.0
    assert result["subgroup_auc"]["amplified"] is not None
    assert result["subgroup_auc"]["exon14"] is not None
    assert result["subgroup_auc"]["amplified_and_exon14"] is None  # none present
    assert result["roc_points"][0][:2] == (0.0, 0.0)
    assert result["pr_points"][-1][0] == 1.0  # recall reaches 1


def test_holdout_overlap_detected(fitted):
    model, train, holdout = fitted
    with pytest.raises(SchemaError):
        evaluate_holdout(model, train[:5] + holdout[:5])


def test_training_manifest_recorded(fitted):
    model, train, _ = fitted
    assert model.meta["training_slide_ids"] == sorted(v.slide_id for v in train)
    assert model.meta["n_active"] == len(model.coefficients)
    assert model.meta["training_manifest_sha256"]
    assert model.lam > 0
    assert model.relax_gamma == 1.0


def test_holdout_auc_consistent_with_cv_mean():
    # A holdout drawn from the same generator should score within 0.05 of the
    # cross-validation estimate.
    from metmorph.sparsemodel import ModelCandidate, nested_cv

    train, holdout = make_split(seed=29, n_wt=240, n_amp=80, n_exon=60, size=2.2)
    cv = nested_cv(
        train,
        candidates=(ModelCandidate("lasso", "balanced"),),
        outer_design=(2, 4),
        inner_design=(2, 3),
        n_lambdas=25,
        seed=4,
    )
    model = tune_and_fit(
        train, family="lasso", weights="balanced",
        inner_design=(2, 3), n_lambdas=25, seed=4,
    )
    result = evaluate_holdout(model, holdout)
    assert abs(result["auc"] - cv.winner_report.mean_auc) <= 0.05
