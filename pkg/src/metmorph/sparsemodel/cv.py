"""Repeated stratified nested cross-validation and stability selection.

The outer loop estimates generalization per candidate (model family x class
weighting); the inner loop, run on each outer-training split with its own
transform fit, tunes lambda (and gamma for the relaxed family) by mean
validation AUC over a shared log-spaced lambda grid.  Transforms are fitted
inside every training split, never on validation data.  Fold results merge
deterministically by (repeat, fold), so fold-parallel execution cannot change
the output.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError
from ..io import stable_hash_u64
from ..naming import SLIDE_FEATURE_NAMES
from .metrics import roc_auc
from .solver import (
    compute_class_weights,
    fit_path,
    fit_relaxed_l1,
    lambda_max,
    lambda_path,
)
from .transform import apply_transform_matrix, cohort_matrix, fit_transform_matrix

DEFAULT_GAMMA_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)
INNER_TOL = 1e-5
INNER_MAX_SWEEPS = 1000
REFIT_TOL = 1e-5
REFIT_MAX_SWEEPS = 2000
# Relaxed refits (gamma < 1) are only scored on supports this sparse; weakly
# penalized refits of near-n-sized supports are degenerate and never win.
RELAX_ACTIVE_CAP = 50


def _warm_refit(X, y, w, grid, lam, gamma, *, tol=REFIT_TOL, max_sweeps=REFIT_MAX_SWEEPS):
    """Fit at (lam, gamma) warm-started along the grid prefix down to lam."""
    prefix = [float(g) for g in grid if g > lam] + [float(lam)]
    fits = fit_path(X, y, w, prefix, tol=tol, max_sweeps=max_sweeps)
    base = fits[-1]
    if gamma == 1.0:
        return base
    return fit_relaxed_l1(
        X, y, w, float(lam), float(gamma),
        base_fit=base, tol=tol, max_sweeps=max_sweeps,
        raise_on_nonconvergence=False,
    )


@dataclass(frozen=True)
class ModelCandidate:
    family: str  # "lasso" | "relaxed"
    weights: object  # "balanced" | (w_neg, w_pos)

    @property
    def name(self) -> str:
        if self.weights == "balanced":
            w = "balanced"
        else:
            w = f"{self.weights[0]:g},{self.weights[1]:g}"
        return f"{self.family}|{w}"


DEFAULT_CANDIDATES = tuple(
    ModelCandidate(family, weights)
    for family in ("lasso", "relaxed")
    for weights in ("balanced", (0.3, 0.7), (0.5, 0.5))
)


@dataclass
class FoldResult:
    candidate: str
    repeat: int
    fold: int
    lam: float
    gamma: float
    auc: float
    n_active: int
    coefficients: dict  # feature name -> nonzero coefficient
    intercept: float
    transform_digest: str


@dataclass
class CVReport:
    candidate: str
    outer_design: tuple
    inner_design: tuple
    folds: list = field(default_factory=list)

    @property
    def mean_auc(self) -> float:
        return float(np.mean([f.auc for f in self.folds]))

    @property
    def sd_auc(self) -> float:
        return float(np.std([f.auc for f in self.folds], ddof=1)) if len(self.folds) > 1 else 0.0


@dataclass
class NestedCVResult:
    reports: dict
    winner: str

    @property
    def winner_report(self) -> CVReport:
        return self.reports[self.winner]


def binary_target(labels) -> np.ndarray:
    """wild_type -> 0, any alteration -> 1."""
    return np.array([0 if lab == "wild_type" else 1 for lab in labels], dtype=np.int64)


def stratified_kfold(y01, k: int, rng, max_attempts: int = 100):
    """Index folds with both classes represented in every validation fold."""
    y = np.asarray(y01)
    n = y.size
    if k < 2 or k > n:
        raise NumericalError(f"cannot build {k} folds from {n} samples")
    for _ in range(max_attempts):
        folds = [[] for _ in range(k)]
        for cls in (0, 1):
            idx = np.nonzero(y == cls)[0]
            idx = idx[rng.permutation(idx.size)]
            for i, sample in enumerate(idx):
                folds[i % k].append(int(sample))
        folds = [np.array(sorted(f), dtype=np.int64) for f in folds]
        ok = all(f.size > 0 and len(np.unique(y[f])) == 2 for f in folds)
        if ok:
            return folds
    raise NumericalError(
        f"could not stratify {n} samples into {k} folds with both classes after {max_attempts} attempts"
    )


def repeated_stratified_folds(y01, repeats: int, k: int, seed: int):
    """(repeat, fold, train_idx, val_idx) tuples for repeats x k folds."""
    n = len(y01)
    out = []
    for rep in range(repeats):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rep,)))
        folds = stratified_kfold(y01, k, rng)
        for fold_i, val_idx in enumerate(folds):
            mask = np.ones(n, dtype=bool)
            mask[val_idx] = False
            out.append((rep, fold_i, np.nonzero(mask)[0], val_idx))
    return out


def _tune_and_refit(task):
    """Inner-CV tuning plus outer refit for one outer fold; returns FoldResults."""
    (
        matrix,
        y,
        rep,
        fold_i,
        train_idx,
        val_idx,
        candidates,
        inner_design,
        n_lambdas,
        lambda_min_ratio,
        gamma_grid,
        fold_seed,
        dfmax_ratio,
    ) = task
    raw_tr = matrix[train_idx]
    raw_val = matrix[val_idx]
    y_tr = y[train_idx]
    y_val = y[val_idx]

    params = fit_transform_matrix(raw_tr)
    X_tr, _ = apply_transform_matrix(params, raw_tr)
    X_val, _ = apply_transform_matrix(params, raw_val)
    digest = params.digest()
    retained = params.retained_names

    inner_folds = repeated_stratified_folds(y_tr, inner_design[0], inner_design[1], fold_seed)
    n_inner = len(inner_folds)

    weight_modes = []
    for cand in candidates:
        if cand.weights not in weight_modes:
            weight_modes.append(cand.weights)

    results = []
    for wm in weight_modes:
        w_tr, _ = compute_class_weights(y_tr, wm)
        grid = lambda_path(lambda_max(X_tr, y_tr, w_tr), n_lambdas, lambda_min_ratio)
        need_relaxed = any(c.family == "relaxed" and c.weights == wm for c in candidates)

        lasso_scores = [[] for _ in grid]
        relaxed_scores = [[[] for _ in gamma_grid] for _ in grid]
        for _, _, itr, ival in inner_folds:
            p_in = fit_transform_matrix(raw_tr[itr])
            Xi, _ = apply_transform_matrix(p_in, raw_tr[itr])
            Xiv, _ = apply_transform_matrix(p_in, raw_tr[ival])
            w_in, _ = compute_class_weights(y_tr[itr], wm)
            dfmax = max(50, int(dfmax_ratio * len(itr)))
            fits = fit_path(
                Xi, y_tr[itr], w_in, grid,
                tol=INNER_TOL, max_sweeps=INNER_MAX_SWEEPS, dfmax=dfmax,
            )
            relaxed_warm = {gi: None for gi in range(len(gamma_grid))}
            for li, fit in enumerate(fits):
                score = roc_auc(Xiv @ fit.coefficients + fit.intercept, y_tr[ival])
                lasso_scores[li].append(score)
                if need_relaxed:
                    n_active = int((fit.coefficients != 0.0).sum())
                    for gi, gamma in enumerate(gamma_grid):
                        if gamma == 1.0:
                            relaxed_scores[li][gi].append(score)
                            continue
                        if n_active > RELAX_ACTIVE_CAP:
                            continue
                        rf = fit_relaxed_l1(
                            Xi, y_tr[itr], w_in, float(grid[li]), gamma,
                            base_fit=fit, refit_init=relaxed_warm[gi],
                            tol=INNER_TOL, max_sweeps=INNER_MAX_SWEEPS,
                            raise_on_nonconvergence=False,
                        )
                        relaxed_warm[gi] = (rf.coefficients, rf.intercept)
                        relaxed_scores[li][gi].append(
                            roc_auc(Xiv @ rf.coefficients + rf.intercept, y_tr[ival])
                        )

        for cand in candidates:
            if cand.weights != wm:
                continue
            if cand.family == "lasso":
                eligible = [li for li in range(len(grid)) if len(lasso_scores[li]) == n_inner]
                if not eligible:
                    eligible = [0]
                    lasso_scores[0] = lasso_scores[0] or [0.5]
                best_li = max(eligible, key=lambda li: (np.mean(lasso_scores[li]), -li))
                lam, gamma = float(grid[best_li]), 1.0
                fit = _warm_refit(X_tr, y_tr, w_tr, grid, lam, gamma)
            else:
                eligible = [
                    (li, gi)
                    for li in range(len(grid))
                    for gi in range(len(gamma_grid))
                    if len(relaxed_scores[li][gi]) == n_inner
                ]
                if not eligible:
                    eligible = [(0, len(gamma_grid) - 1)]
                    if not relaxed_scores[0][-1]:
                        relaxed_scores[0][-1] = [0.5]
                best_li, best_gi = max(
                    eligible,
                    key=lambda t: (np.mean(relaxed_scores[t[0]][t[1]]), -t[0], t[1]),
                )
                lam, gamma = float(grid[best_li]), float(gamma_grid[best_gi])
                fit = _warm_refit(X_tr, y_tr, w_tr, grid, lam, gamma)
            auc = roc_auc(X_val @ fit.coefficients + fit.intercept, y_val)
            coefs = {
                retained[j]: float(c)
                for j, c in enumerate(fit.coefficients)
                if c != 0.0
            }
            results.append(
                FoldResult(
                    candidate=cand.name,
                    repeat=rep,
                    fold=fold_i,
                    lam=lam,
                    gamma=gamma,
                    auc=float(auc),
                    n_active=len(coefs),
                    coefficients=coefs,
                    intercept=float(fit.intercept),
                    transform_digest=digest,
                )
            )
    return results


def nested_cv(
    cohort,
    candidates=DEFAULT_CANDIDATES,
    outer_design=(10, 10),
    inner_design=(5, 5),
    n_lambdas: int = 50,
    lambda_min_ratio: float = 1e-3,
    gamma_grid=DEFAULT_GAMMA_GRID,
    seed: int = 0,
    jobs: int = 1,
    dfmax_ratio: float = 1.0 / 3.0,
) -> NestedCVResult:
    """Run the full candidate comparison; winner has the highest mean outer AUC."""
    matrix, _, labels = cohort_matrix(cohort)
    y = binary_target(labels)
    if len(np.unique(y)) < 2:
        raise NumericalError("nested_cv: cohort must contain both classes")
    candidates = tuple(candidates)
    outer = repeated_stratified_folds(y, outer_design[0], outer_design[1], seed)
    tasks = [
        (
            matrix,
            y,
            rep,
            fold_i,
            tr,
            va,
            candidates,
            inner_design,
            n_lambdas,
            lambda_min_ratio,
            tuple(gamma_grid),
            stable_hash_u64(f"{seed}|{rep}|{fold_i}") % (2**63),
            dfmax_ratio,
        )
        for rep, fold_i, tr, va in outer
    ]
    fold_results = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for chunk in pool.map(_tune_and_refit, tasks, chunksize=1):
                fold_results.extend(chunk)
    else:
        for task in tasks:
            fold_results.extend(_tune_and_refit(task))

    reports = {
        cand.name: CVReport(
            candidate=cand.name, outer_design=tuple(outer_design), inner_design=tuple(inner_design)
        )
        for cand in candidates
    }
    for fr in sorted(fold_results, key=lambda f: (f.candidate, f.repeat, f.fold)):
        reports[fr.candidate].folds.append(fr)
    winner = max(reports.values(), key=lambda r: r.mean_auc).candidate
    return NestedCVResult(reports=reports, winner=winner)


@dataclass
class StableFeature:
    feature_name: str
    sign: int
    q25: float
    q75: float


def stability_select(report: CVReport):
    """Features whose cross-fold coefficient interquartile range excludes 0."""
    if len(report.folds) < 4:
        raise NumericalError("stability_select: need at least 4 outer folds")
    out = []
    for name in SLIDE_FEATURE_NAMES:
        values = np.array([f.coefficients.get(name, 0.0) for f in report.folds])
        q25, q75 = np.percentile(values, [25.0, 75.0], method="linear")
        if q25 > 0.0 or q75 < 0.0:
            out.append(
                StableFeature(
                    feature_name=name,
                    sign=1 if q25 > 0.0 else -1,
                    q25=float(q25),
                    q75=float(q75),
                )
            )
    return out


def stratified_split(rows, fraction: float, seed: int):
    """Split manifest rows into (train_ids, holdout_ids).

    Strata are (binary target, procedure_type); each stratum is shuffled with
    its own seeded stream and split proportionally; singleton strata go to
    training.  `fraction` is the training share.
    """
    if not 0.0 < fraction < 1.0:
        raise NumericalError("split fraction must lie in (0, 1)")
    strata = {}
    for row in rows:
        target = 0 if row["met_label"] == "wild_type" else 1
        key = (target, row.get("procedure_type", ""))
        strata.setdefault(key, []).append(row["slide_id"])
    train, holdout = [], []
    for key in sorted(strata):
        ids = sorted(strata[key])
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(stable_hash_u64(repr(key)),))
        )
        ids = [ids[i] for i in rng.permutation(len(ids))]
        if len(ids) == 1:
            train.extend(ids)
            continue
        n_train = int(round(fraction * len(ids)))
        n_train = min(max(n_train, 1), len(ids) - 1)
        train.extend(ids[:n_train])
        holdout.extend(ids[n_train:])
    return sorted(train), sorted(holdout)
