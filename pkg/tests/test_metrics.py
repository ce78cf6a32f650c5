import numpy as np
import pytest

from metmorph.errors import NumericalError
from metmorph.sparsemodel.metrics import pr_curve, roc_auc, roc_points
from metmorph.stats import mann_whitney_u

from oracles import pair_count_auc


def test_auc_examples():
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.5] * 6, [0, 1, 0, 1, 0, 1]) == 0.5


def test_auc_mann_whitney_identity():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(4, 40))
        scores = rng.integers(0, 10, size=n).astype(float)  # heavy ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        auc = roc_auc(scores, labels)
        pos = scores[labels == 1]
        neg = scores[labels == 0]
        u = mann_whitney_u(pos, neg, "normal_approx").u_statistic
        n0, n1 = neg.size, pos.size
        assert auc == u / (n0 * n1)  # exact division identity
        _, u_pairs = pair_count_auc(scores, labels)
        assert u == u_pairs


def test_auc_monotone_transform_invariance():
    rng = np.random.default_rng(1)
    for _ in range(30):
        scores = rng.normal(size=25)
        labels = rng.integers(0, 2, size=25)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        base = roc_auc(scores, labels)
        for f in (np.exp, lambda s: s**3, lambda s: 10 * s - 4):
            assert roc_auc(f(scores), labels) == base


def test_auc_single_class_errors():
    with pytest.raises(NumericalError):
        roc_auc([0.1, 0.9], [1, 1])
    with pytest.raises(NumericalError):
        roc_auc([0.1, 0.9], [0, 2])


def test_pr_perfect_separation():
    points, ap = pr_curve([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert ap == 1.0
    assert points[0] == (0.5, 1.0, 0.9)


def test_pr_all_ties_ap_equals_prevalence():
    points, ap = pr_curve([0.5] * 8, [1, 0, 1, 0, 1, 0, 1, 0])
    assert len(points) == 1
    assert ap == 0.5  # single block: precision = prevalence at recall 1


def test_pr_order_independence_with_ties():
    rng = np.random.default_rng(2)
    scores = np.array([0.9, 0.5, 0.5, 0.5, 0.1, 0.1])
    labels = np.array([1, 1, 0, 1, 0, 0])
    _, ap = pr_curve(scores, labels)
    for _ in range(10):
        perm = rng.permutation(len(scores))
        _, ap2 = pr_curve(scores[perm], labels[perm])
        assert ap2 == ap


def test_roc_points_monotone():
    rng = np.random.default_rng(3)
    scores = rng.normal(size=50)
    labels = rng.integers(0, 2, size=50)
    labels[0], labels[1] = 0, 1
    pts = roc_points(scores, labels)
    fpr = [p[0] for p in pts]
    tpr = [p[1] for p in pts]
    assert fpr == sorted(fpr)
    assert tpr == sorted(tpr)
    assert pts[0][:2] == (0.0, 0.0)
    assert pts[-1][:2] == (1.0, 1.0)


def test_ap_against_quadrature_random():
    # AP equals the step integral of precision over recall; check against a
    # direct per-positive summation oracle: AP = mean over positives of
    # precision at each positive's threshold block.
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(5, 60))
        scores = np.round(rng.random(n), 2)
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        points, ap = pr_curve(scores, labels)
        recalls = [0.0] + [p[0] for p in points]
        precisions = [p[1] for p in points]
        manual = sum(
            (recalls[i + 1] - recalls[i]) * precisions[i] for i in range(len(precisions))
        )
        assert ap == pytest.approx(manual, abs=1e-12)
