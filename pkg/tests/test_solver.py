import math

import numpy as np
import pytest

from metmorph.errors import ConvergenceError, NumericalError
from metmorph.sparsemodel.solver import (
    compute_class_weights,
    fit_l1_logistic,
    fit_path,
    fit_relaxed_l1,
    kkt_residuals,
    lambda_max,
    lambda_path,
    nll_gradient,
    normalize_weights,
    objective_value,
    soft_threshold,
)

from oracles import prox_grad_l1_logistic


def random_problem(rng, n=40, p=8, weighted=False):
    X = rng.normal(size=(n, p))
    beta = np.zeros(p)
    k = max(1, p // 3)
    beta[rng.choice(p, size=k, replace=False)] = rng.normal(scale=1.5, size=k)
    prob = 1.0 / (1.0 + np.exp(-(X @ beta + rng.normal(scale=0.3))))
    y = (rng.random(n) < prob).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    w = rng.uniform(0.5, 2.0, size=n) if weighted else None
    return X, y, w


def test_soft_threshold_operator():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.0, 0.0) == 0.0


def test_class_weights_balanced_from_counts():
    labels = np.array([0] * 425 + [1] * 103)
    _, pair = compute_class_weights(labels, "balanced")
    assert pair[0] == pytest.approx(528 / (2 * 425))
    assert pair[1] == pytest.approx(528 / (2 * 103))
    assert round(pair[0], 5) == 0.62118
    assert round(pair[1], 5) == 2.56311


def test_class_weights_equal_and_fixed():
    labels = np.array([0, 0, 1, 1])
    _, pair = compute_class_weights(labels, "balanced")
    assert pair == (1.0, 1.0)
    w, pair = compute_class_weights(labels, (0.3, 0.7))
    assert pair == (0.3, 0.7)
    assert list(w) == [0.3, 0.3, 0.7, 0.7]
    with pytest.raises(NumericalError):
        compute_class_weights(np.zeros(4, dtype=int), "balanced")


def test_null_model_at_lambda_max():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 5))
    y = np.array([1, 1, 1, 0])
    lam = lambda_max(X, y)
    fit = fit_l1_logistic(X, y, None, lam * (1 + 1e-9))
    assert np.count_nonzero(fit.coefficients) == 0
    assert abs(fit.intercept - math.log(3.0)) < 1e-10


def test_just_below_lambda_max_activates():
    rng = np.random.default_rng(1)
    X, y, _ = random_problem(rng)
    lam = lambda_max(X, y)
    fit_hi = fit_l1_logistic(X, y, None, lam * 1.0001)
    fit_lo = fit_l1_logistic(X, y, None, lam * 0.95)
    assert np.count_nonzero(fit_hi.coefficients) == 0
    assert np.count_nonzero(fit_lo.coefficients) >= 1


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    for _ in range(5):
        X, y, w = random_problem(rng, weighted=True)
        wn = normalize_weights(w, len(y))
        beta = rng.normal(scale=0.5, size=X.shape[1])
        b0 = float(rng.normal())
        grad, g0 = nll_gradient(X, y, wn, beta, b0)
        eps = 1e-5
        for j in range(X.shape[1]):
            e = np.zeros_like(beta)
            e[j] = eps
            f_plus = objective_value(X, y, wn, beta + e, b0, 0.0)
            f_minus = objective_value(X, y, wn, beta - e, b0, 0.0)
            fd = (f_plus - f_minus) / (2 * eps)
            assert abs(grad[j] - fd) / max(1.0, abs(fd)) < 1e-6
        fd0 = (
            objective_value(X, y, wn, beta, b0 + eps, 0.0)
            - objective_value(X, y, wn, beta, b0 - eps, 0.0)
        ) / (2 * eps)
        assert abs(g0 - fd0) / max(1.0, abs(fd0)) < 1e-6


def test_kkt_residuals_on_random_problems():
    rng = np.random.default_rng(3)
    for _ in range(20):
        X, y, w = random_problem(rng, weighted=bool(rng.integers(2)))
        lam = lambda_max(X, y, w) * rng.uniform(0.2, 0.8)
        fit = fit_l1_logistic(X, y, w, lam)
        assert fit.converged
        res = kkt_residuals(X, y, w, fit.coefficients, fit.intercept, lam)
        assert res <= 1e-6


def test_agreement_with_proximal_gradient_reference():
    rng = np.random.default_rng(4)
    for _ in range(6):
        X, y, w = random_problem(rng, weighted=bool(rng.integers(2)))
        lam = lambda_max(X, y, w) * rng.uniform(0.25, 0.7)
        fit = fit_l1_logistic(X, y, w, lam)
        ref_beta, ref_b0 = prox_grad_l1_logistic(X, y, w, lam)
        assert np.max(np.abs(fit.coefficients - ref_beta)) < 1e-4
        assert abs(fit.intercept - ref_b0) < 1e-4


def test_objective_monotone_every_sweep():
    rng = np.random.default_rng(5)
    for _ in range(10):
        X, y, w = random_problem(rng, n=60, p=20, weighted=True)
        lam = lambda_max(X, y, w) * 0.3
        fit = fit_l1_logistic(X, y, w, lam, record_objective=True)
        trace = np.array(fit.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)


def test_weight_doubling_invariance():
    rng = np.random.default_rng(6)
    X, y, _ = random_problem(rng)
    w = rng.uniform(0.5, 2.0, size=len(y))
    f1 = fit_l1_logistic(X, y, w, 0.05)
    f2 = fit_l1_logistic(X, y, 2.0 * w, 0.05)
    assert np.array_equal(f1.coefficients, f2.coefficients)
    assert f1.intercept == f2.intercept


def test_nonfinite_design_errors():
    X = np.array([[1.0, np.nan], [0.5, 1.0]])
    with pytest.raises(NumericalError):
        fit_l1_logistic(X, np.array([0, 1]), None, 0.1)


def test_single_class_errors():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(6, 3))
    with pytest.raises(NumericalError):
        fit_l1_logistic(X, np.ones(6, dtype=int), None, 0.1)


def test_nonconvergence_error_carries_iterate():
    rng = np.random.default_rng(8)
    X, y, _ = random_problem(rng, n=80, p=30)
    lam = lambda_max(X, y) * 0.01
    with pytest.raises(ConvergenceError) as excinfo:
        fit_l1_logistic(X, y, None, lam, max_sweeps=2)
    err = excinfo.value
    assert err.coefficients is not None
    assert err.sweeps == 2
    fit = fit_l1_logistic(X, y, None, lam, max_sweeps=2, raise_on_nonconvergence=False)
    assert not fit.converged


def test_relaxed_gamma_one_identical_to_lasso():
    rng = np.random.default_rng(9)
    X, y, w = random_problem(rng, weighted=True)
    lam = lambda_max(X, y, w) * 0.4
    base = fit_l1_logistic(X, y, w, lam)
    relaxed = fit_relaxed_l1(X, y, w, lam, 1.0)
    assert np.array_equal(relaxed.coefficients, base.coefficients)
    assert relaxed.intercept == base.intercept


def test_relaxed_gamma_zero_matches_unpenalized_refit():
    rng = np.random.default_rng(10)
    X, y, _ = random_problem(rng, n=100, p=8)
    lam = lambda_max(X, y) * 0.3
    relaxed = fit_relaxed_l1(X, y, None, lam, 0.0)
    active = np.nonzero(relaxed.coefficients)[0]
    assert active.size >= 1
    # reference: unpenalized fit restricted to the active set
    ref_beta, ref_b0 = prox_grad_l1_logistic(X[:, active], y, None, 0.0)
    assert np.max(np.abs(relaxed.coefficients[active] - ref_beta)) < 1e-6
    assert abs(relaxed.intercept - ref_b0) < 1e-6


def test_relaxed_empty_active_set_null_model():
    rng = np.random.default_rng(11)
    X, y, _ = random_problem(rng)
    lam = lambda_max(X, y) * 2.0
    relaxed = fit_relaxed_l1(X, y, None, lam, 0.0)
    assert np.count_nonzero(relaxed.coefficients) == 0
    wn = np.full(len(y), 1.0 / len(y))
    pbar = float(wn @ y)
    assert relaxed.intercept == pytest.approx(math.log(pbar / (1 - pbar)), abs=1e-9)


def test_relaxed_gamma_out_of_range():
    rng = np.random.default_rng(12)
    X, y, _ = random_problem(rng)
    with pytest.raises(NumericalError):
        fit_relaxed_l1(X, y, None, 0.1, 1.5)


def test_path_descends_and_grows_active_set():
    rng = np.random.default_rng(13)
    X, y, _ = random_problem(rng, n=80, p=20)
    lams = lambda_path(lambda_max(X, y), 20, 1e-2)
    fits = fit_path(X, y, None, lams)
    actives = [np.count_nonzero(f.coefficients) for f in fits]
    assert actives[0] <= 1
    assert actives[-1] >= actives[0]
    assert all(f.converged for f in fits)


def test_path_dfmax_truncates():
    rng = np.random.default_rng(14)
    X, y, _ = random_problem(rng, n=60, p=40)
    lams = lambda_path(lambda_max(X, y), 30, 1e-3)
    fits = fit_path(X, y, None, lams, dfmax=5)
    assert len(fits) < 30
    assert all(np.count_nonzero(f.coefficients) <= 5 for f in fits)


def test_lambda_path_endpoints():
    lams = lambda_path(2.0, 50, 1e-3)
    assert lams[0] == pytest.approx(2.0)
    assert lams[-1] == pytest.approx(2e-3)
    assert len(lams) == 50
    assert np.all(np.diff(lams) < 0)
