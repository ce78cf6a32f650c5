"""Independent reference implementations used only by the tests.

These deliberately avoid the package's own code paths: the GLCM oracle builds
co-occurrence counts with explicit pair loops and evaluates the texture
formulas from dictionaries; the solver reference is proximal gradient with
backtracking; moments, percentiles and the Mann-Whitney null are computed
directly from their definitions.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------- GLCM oracle

def brute_glcm(levels, offset, n_levels=64):
    """Symmetric normalized co-occurrence counts as a dict (i, j) -> p."""
    h, w = levels.shape
    dr, dc = offset
    counts = {}
    for r in range(h):
        for c in range(w):
            r2, c2 = r + dr, c + dc
            if 0 <= r2 < h and 0 <= c2 < w:
                a, b = int(levels[r, c]), int(levels[r2, c2])
                counts[(a, b)] = counts.get((a, b), 0) + 1
                counts[(b, a)] = counts.get((b, a), 0) + 1
    total = sum(counts.values())
    return {k: v / total for k, v in counts.items()} if total else {}


def brute_haralick(p):
    """The ten features from a normalized GLCM dict, straight from the formulas."""
    px, py = {}, {}
    for (i, j), v in p.items():
        px[i] = px.get(i, 0.0) + v
        py[j] = py.get(j, 0.0) + v
    mu_x = sum(i * v for i, v in px.items())
    mu_y = sum(j * v for j, v in py.items())
    var_x = sum((i - mu_x) ** 2 * v for i, v in px.items())
    var_y = sum((j - mu_y) ** 2 * v for j, v in py.items())

    asm = sum(v * v for v in p.values())
    contrast = sum((i - j) ** 2 * v for (i, j), v in p.items())
    if var_x > 0 and var_y > 0:
        corr = (sum(i * j * v for (i, j), v in p.items()) - mu_x * mu_y) / math.sqrt(
            var_x * var_y
        )
    else:
        corr = 0.0
    idm = sum(v / (1.0 + (i - j) ** 2) for (i, j), v in p.items())

    p_sum, p_diff = {}, {}
    for (i, j), v in p.items():
        p_sum[i + j] = p_sum.get(i + j, 0.0) + v
        p_diff[abs(i - j)] = p_diff.get(abs(i - j), 0.0) + v
    sum_avg = sum(k * v for k, v in p_sum.items())
    sum_var = sum((k - sum_avg) ** 2 * v for k, v in p_sum.items())
    mu_d = sum(k * v for k, v in p_diff.items())
    diff_var = sum((k - mu_d) ** 2 * v for k, v in p_diff.items())

    def ent(values):
        return -sum(v * math.log(v) for v in values if v > 0.0)

    hx, hy = ent(px.values()), ent(py.values())
    hxy = ent(p.values())
    hxy1 = -sum(
        v * math.log(px[i] * py[j])
        for (i, j), v in p.items()
        if v > 0.0 and px[i] * py[j] > 0.0
    )
    hxy2 = -sum(
        px[i] * py[j] * math.log(px[i] * py[j])
        for i in px
        for j in py
        if px[i] * py[j] > 0.0
    )
    denom = max(hx, hy)
    imc1 = (hxy - hxy1) / denom if denom > 0.0 else 0.0
    imc2 = math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * (hxy2 - hxy))))

    return {
        "haralick_angular_second_moment": asm,
        "haralick_contrast": contrast,
        "haralick_correlation": corr,
        "haralick_sum_of_squares_variance": var_x,
        "haralick_inverse_difference_moment": idm,
        "haralick_sum_average": sum_avg,
        "haralick_sum_variance": sum_var,
        "haralick_difference_variance": diff_var,
        "haralick_info_measure_corr_1": imc1,
        "haralick_info_measure_corr_2": imc2,
    }


def oracle_haralick_averaged(gray):
    """Direction-averaged features built entirely from the brute-force path."""
    levels = np.minimum(np.floor(np.asarray(gray, dtype=float) / 4.0), 63).astype(int)
    acc = None
    offsets = ((0, 1), (-1, 1), (-1, 0), (-1, -1))
    for off in offsets:
        feats = brute_haralick(brute_glcm(levels, off))
        if acc is None:
            acc = dict(feats)
        else:
            for k in acc:
                acc[k] += feats[k]
    return {k: v / len(offsets) for k, v in acc.items()}


# ------------------------------------------------------------- moment oracle

def moment_oracle(values):
    """(mean, population std, skewness, excess kurtosis) from raw definitions."""
    xs = [float(v) for v in values]
    n = len(xs)
    mean = sum(xs) / n
    m2 = sum((x - mean) ** 2 for x in xs) / n
    m3 = sum((x - mean) ** 3 for x in xs) / n
    m4 = sum((x - mean) ** 4 for x in xs) / n
    std = math.sqrt(m2)
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    kurt = m4 / m2**2 - 3.0 if m2 > 0 else 0.0
    return mean, std, skew, kurt


def percentile_oracle(values, q):
    """Linear-interpolation percentile from the order-statistics definition."""
    xs = sorted(float(v) for v in values)
    if len(xs) == 1:
        return xs[0]
    pos = (len(xs) - 1) * q / 100.0
    lo = int(math.floor(pos))
    hi = min(lo + 1, len(xs) - 1)
    frac = pos - lo
    return xs[lo] * (1.0 - frac) + xs[hi] * frac


# -------------------------------------------------------- Mann-Whitney oracle

def mw_u_pairs(a, b):
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def mw_enumeration_p(a, b):
    """Two-sided permutation p by full enumeration of group assignments."""
    pooled = list(a) + list(b)
    n_a = len(a)
    u_obs = mw_u_pairs(a, b)
    mu = n_a * len(b) / 2.0
    total = extreme = 0
    indices = range(len(pooled))
    for comb in itertools.combinations(indices, n_a):
        in_a = set(comb)
        ga = [pooled[i] for i in comb]
        gb = [pooled[i] for i in indices if i not in in_a]
        u = mw_u_pairs(ga, gb)
        total += 1
        if abs(u - mu) >= abs(u_obs - mu) - 1e-12:
            extreme += 1
    return extreme / total


# ------------------------------------------------------------------ BH oracle

def bh_oracle(p_values):
    """q_(i) = min over j >= i of p_(j) * m / j, evaluated literally."""
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    q = [0.0] * m
    for rank_pos, idx in enumerate(order, start=1):
        candidates = [
            p_values[order[j - 1]] * m / j for j in range(rank_pos, m + 1)
        ]
        q[idx] = min(1.0, min(candidates))
    return q


# ------------------------------------------------- proximal-gradient reference

def prox_grad_l1_logistic(X, y01, weights, lam, max_iter=100_000, tol=1e-10):
    """Accelerated proximal gradient (FISTA with restarts) on the
    weight-normalized logistic + L1 objective.

    Independent of the package solver: full-gradient steps with a fixed step
    from the global curvature bound, intercept as an unpenalized coordinate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y01, dtype=float)
    n, p = X.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    wn = w / w.sum()
    Xa = np.hstack([X, np.ones((n, 1))])  # intercept as last column
    # Lipschitz bound of the normalized NLL gradient: ||sqrt(wn) Xa||_2^2 / 4.
    lip = float(np.linalg.norm(np.sqrt(wn)[:, None] * Xa, 2)) ** 2 / 4.0
    step = 1.0 / max(lip, 1e-12)

    def grad(v):
        eta = Xa @ v
        mu = 1.0 / (1.0 + np.exp(-eta))
        return Xa.T @ (wn * (mu - y))

    def penalized(v):
        eta = Xa @ v
        ys = 2 * y - 1
        return float(np.dot(wn, np.logaddexp(0.0, -ys * eta))) + lam * float(
            np.abs(v[:-1]).sum()
        )

    def prox(v):
        out = np.sign(v) * np.maximum(np.abs(v) - step * lam, 0.0)
        out[-1] = v[-1]  # intercept unpenalized
        return out

    v = np.zeros(p + 1)
    z = v.copy()
    t = 1.0
    obj = penalized(v)
    for _ in range(max_iter):
        v_new = prox(z - step * grad(z))
        new_obj = penalized(v_new)
        if new_obj > obj:  # restart momentum
            z = v.copy()
            t = 1.0
            v_new = prox(z - step * grad(z))
            new_obj = penalized(v_new)
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        z = v_new + ((t - 1.0) / t_new) * (v_new - v)
        move = float(np.max(np.abs(v_new - v)))
        v, t = v_new, t_new
        if move < tol and abs(obj - new_obj) < 1e-14:
            obj = new_obj
            break
        obj = new_obj
    return v[:-1], float(v[-1])


# --------------------------------------------------------------- AUC oracle

def pair_count_auc(scores, labels):
    pos = [s for s, lab in zip(scores, labels) if lab == 1]
    neg = [s for s, lab in zip(scores, labels) if lab == 0]
    u = mw_u_pairs(pos, neg)
    return u / (len(pos) * len(neg)), u
