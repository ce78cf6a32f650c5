"""Univariate screening statistics and cohort tests.

Mann-Whitney U uses midranks (half credit for ties).  The exact two-sided
p-value counts permutations at least as extreme as the observed U under the
exchangeable null via a subset-sum dynamic program over doubled midranks, so
tied data is handled exactly; the normal approximation applies the standard
tie-corrected variance and a 0.5 continuity correction.  Benjamini-Hochberg
q-values follow the step-up definition.  Median/MAD normalization uses the raw
MAD (no consistency constant) with an IQR fallback, then 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import NumericalError
from .naming import SLIDE_FEATURE_NAMES, split_feature_name

EXACT_LIMIT = 20


def midranks(values: np.ndarray) -> np.ndarray:
    """Average ranks (1-based), ties sharing the mean of their rank block."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sorted_v = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


class MannWhitneyResult(NamedTuple):
    u_statistic: float
    p_value: float
    method: str


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    r_a = float(ranks[: a.size].sum())
    return r_a - a.size * (a.size + 1) / 2.0


def _exact_p(a: np.ndarray, b: np.ndarray, u_obs: float) -> float:
    """Two-sided permutation p by subset-sum DP over doubled midranks."""
    pooled = np.concatenate([a, b])
    n_a, n_b = a.size, b.size
    doubled = np.rint(2.0 * midranks(pooled)).astype(np.int64)
    max_sum = int(doubled.sum())
    # counts[k, s] = number of size-k subsets of the pooled ranks with doubled sum s.
    counts = np.zeros((n_a + 1, max_sum + 1), dtype=np.float64)
    counts[0, 0] = 1.0
    for r in doubled:
        for k in range(n_a, 0, -1):
            counts[k, r:] += counts[k - 1, : max_sum + 1 - r]
    total = counts[n_a].sum()
    # Work on the doubled-U scale so extremity comparisons are exact integers.
    u2_obs = int(round(2.0 * u_obs))
    mu2 = n_a * n_b
    sums = np.nonzero(counts[n_a] > 0)[0]
    u2 = sums - n_a * (n_a + 1)
    extreme = np.abs(u2 - mu2) >= abs(u2_obs - mu2)
    return float(counts[n_a][sums[extreme]].sum() / total)


def _normal_p(a: np.ndarray, b: np.ndarray, u_obs: float) -> float:
    pooled = np.concatenate([a, b])
    n_a, n_b = a.size, b.size
    n = n_a + n_b
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum()) / (n * (n - 1))) if n > 1 else 0.0
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0.0:
        return 1.0
    mu = n_a * n_b / 2.0
    d = max(0.0, abs(u_obs - mu) - 0.5)
    z = d / math.sqrt(var)
    return float(math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(a, b, mode: str = "auto") -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test of two samples.

    U counts pairs (a_i, b_j) with a_i > b_j plus half credit for ties.
    mode: "exact" enumerates the permutation null (requires n_a + n_b <= 20),
    "normal_approx" uses the tie-corrected normal with continuity correction,
    "auto" picks exact for small pooled samples without dominant ties.
    """
    a = np.asarray(list(a), dtype=np.float64)
    b = np.asarray(list(b), dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise NumericalError("mann_whitney_u: both samples must be non-empty")
    u_obs = _u_statistic(a, b)
    n = a.size + b.size
    if mode == "auto":
        pooled = np.concatenate([a, b])
        _, tie_counts = np.unique(pooled, return_counts=True)
        small = n <= EXACT_LIMIT
        dominant_tie = tie_counts.max() > n // 2
        mode = "exact" if small and not dominant_tie else "normal_approx"
    if mode == "exact":
        if n > EXACT_LIMIT:
            raise NumericalError(f"exact mode limited to pooled n <= {EXACT_LIMIT}")
        p = _exact_p(a, b, u_obs)
    elif mode == "normal_approx":
        p = _normal_p(a, b, u_obs)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return MannWhitneyResult(u_statistic=u_obs, p_value=min(1.0, p), method=mode)


def benjamini_hochberg(p_values):
    """Step-up q-values: q_(i) = min_{j>=i} p_(j) * m / j, clipped at 1."""
    p = np.asarray(list(p_values), dtype=np.float64)
    if p.size == 0:
        return np.empty(0, dtype=np.float64)
    if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
        raise NumericalError("benjamini_hochberg: p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1, dtype=np.float64)
    q_sorted = np.minimum.accumulate(ranked[::-1])[::-1]
    q_sorted = np.minimum(q_sorted, 1.0)
    out = np.empty(m, dtype=np.float64)
    out[order] = q_sorted
    return out


def spearman_rho(x, y) -> float:
    """Pearson correlation of midranks; raises for zero-variance ranks."""
    x = np.asarray(list(x), dtype=np.float64)
    y = np.asarray(list(y), dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise NumericalError("spearman_rho: need two equal-length samples of size >= 2")
    rx = midranks(x)
    ry = midranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(np.sqrt((dx**2).sum()))
    sy = float(np.sqrt((dy**2).sum()))
    if sx == 0.0 or sy == 0.0:
        raise NumericalError("spearman_rho: undefined for zero-variance ranks")
    return float(np.dot(dx, dy) / (sx * sy))


def chi_squared_independence(table):
    """Pearson chi-squared test of independence on an r x c count table."""
    t = np.asarray(table, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] < 2 or t.shape[1] < 2:
        raise NumericalError("chi_squared_independence: need at least a 2x2 table")
    if np.any(t < 0):
        raise NumericalError("chi_squared_independence: counts must be non-negative")
    row = t.sum(axis=1)
    col = t.sum(axis=0)
    if np.any(row == 0) or np.any(col == 0):
        raise NumericalError("chi_squared_independence: zero row or column marginal")
    expected = np.outer(row, col) / t.sum()
    chi2 = float(((t - expected) ** 2 / expected).sum())
    df = (t.shape[0] - 1) * (t.shape[1] - 1)
    p = float(special.gammaincc(df / 2.0, chi2 / 2.0))
    return chi2, p


def median_abs_deviation(values: np.ndarray) -> float:
    """Raw MAD (no 1.4826 consistency constant)."""
    v = np.asarray(values, dtype=np.float64)
    return float(np.median(np.abs(v - np.median(v))))


def robust_scale(values: np.ndarray) -> float:
    """MAD, falling back to the IQR, then to 1 when both vanish."""
    v = np.asarray(values, dtype=np.float64)
    mad = median_abs_deviation(v)
    if mad > 0.0:
        return mad
    q75, q25 = np.percentile(v, [75.0, 25.0], method="linear")
    iqr = float(q75 - q25)
    if iqr > 0.0:
        return iqr
    return 1.0


def median_mad_normalize(values: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Center by the reference median, divide by its robust scale."""
    ref = np.asarray(reference, dtype=np.float64)
    center = float(np.median(ref))
    scale = robust_scale(ref)
    return (np.asarray(values, dtype=np.float64) - center) / scale


COMPARISONS = ("wt_vs_amp", "wt_vs_exon14")
_COMPARISON_CLASS = {"wt_vs_amp": "amplified", "wt_vs_exon14": "exon14"}


@dataclass
class UnivariateResult:
    feature_name: str
    comparison: str
    u_statistic: float
    p_value: float
    q_value: float
    direction: str  # increased | decreased, relative to wild-type
    significant: bool
    n_wild_type: int
    n_altered: int


@dataclass
class HeatmapExport:
    """Normalized group medians of the significant features, in display order."""

    rows: list  # dicts: feature, band, median_wild_type, median_amplified, median_exon14
    warnings: list


def _feature_values(cohort, name):
    return np.array([v.features.get(name, math.nan) for v in cohort], dtype=np.float64)


def run_univariate_screen(
    cohort,
    alpha: float = 0.05,
    include_dual: bool = False,
    mode: str = "auto",
):
    """Mann-Whitney screen of all 372 features for both comparisons.

    Dual-alteration slides (amplified_and_exon14) are excluded from the
    univariate groups unless include_dual is set, in which case they join both
    altered groups.  BH correction runs per comparison across the features.
    Returns (results, heatmap_export).
    """
    groups = {"wild_type": [v for v in cohort if v.label == "wild_type"]}
    for cls in ("amplified", "exon14"):
        members = [v for v in cohort if v.label == cls]
        if include_dual:
            members += [v for v in cohort if v.label == "amplified_and_exon14"]
        groups[cls] = members

    warnings = []
    results = []
    significant = {c: set() for c in COMPARISONS}
    wt = groups["wild_type"]
    for comparison in COMPARISONS:
        alt = groups[_COMPARISON_CLASS[comparison]]
        if len(wt) < 3 or len(alt) < 3:
            warnings.append(
                f"{comparison}: skipped, group sizes wt={len(wt)} altered={len(alt)} (< 3)"
            )
            continue
        p_values = []
        partial = []
        for name in SLIDE_FEATURE_NAMES:
            a = _feature_values(alt, name)
            b = _feature_values(wt, name)
            a = a[~np.isnan(a)]
            b = b[~np.isnan(b)]
            if a.size == 0 or b.size == 0:
                warnings.append(f"{comparison}/{name}: all values missing, p set to 1")
                u, p = math.nan, 1.0
                direction = "increased"
            else:
                res = mann_whitney_u(a, b, mode=mode)
                u, p = res.u_statistic, res.p_value
                med_diff = float(np.median(a) - np.median(b))
                if med_diff > 0:
                    direction = "increased"
                elif med_diff < 0:
                    direction = "decreased"
                else:
                    direction = "increased" if u >= a.size * b.size / 2.0 else "decreased"
            p_values.append(p)
            partial.append((name, u, p, direction, a.size, b.size))
        q_values = benjamini_hochberg(p_values)
        for (name, u, p, direction, n_a, n_b), q in zip(partial, q_values):
            sig = bool(q < alpha)
            if sig:
                significant[comparison].add(name)
            results.append(
                UnivariateResult(
                    feature_name=name,
                    comparison=comparison,
                    u_statistic=u,
                    p_value=p,
                    q_value=float(q),
                    direction=direction,
                    significant=sig,
                    n_wild_type=n_b,
                    n_altered=n_a,
                )
            )

    heatmap = _build_heatmap(groups, significant, warnings)
    return results, heatmap


def _build_heatmap(groups, significant, warnings):
    amp_only = significant["wt_vs_amp"] - significant["wt_vs_exon14"]
    both = significant["wt_vs_amp"] & significant["wt_vs_exon14"]
    exon_only = significant["wt_vs_exon14"] - significant["wt_vs_amp"]
    bands = (("amp_only", amp_only), ("both", both), ("exon14_only", exon_only))

    wt = groups["wild_type"]
    rows = []
    for band_name, names in bands:
        band_rows = []
        for name in sorted(names):
            ref = _feature_values(wt, name)
            ref = ref[~np.isnan(ref)]
            if ref.size == 0:
                continue
            center = float(np.median(ref))
            scale = robust_scale(ref)
            meds = {}
            for cls, key in (("wild_type", "median_wild_type"),
                             ("amplified", "median_amplified"),
                             ("exon14", "median_exon14")):
                vals = _feature_values(groups.get(cls, []), name)
                vals = vals[~np.isnan(vals)]
                if vals.size == 0:
                    meds[key] = math.nan
                else:
                    # Normalizing the median (not the median of normalized
                    # values) keeps the wild-type entry at exactly 0.
                    meds[key] = (float(np.median(vals)) - center) / scale
            sort_key = meds["median_amplified"] if band_name != "exon14_only" else meds["median_exon14"]
            band_rows.append((sort_key, {"feature": name, "band": band_name, **meds}))
        band_rows.sort(key=lambda t: (-(t[0] if not math.isnan(t[0]) else -math.inf), t[1]["feature"]))
        rows.extend(r for _, r in band_rows)
    return HeatmapExport(rows=rows, warnings=warnings)


def univariate_table(results):
    """Rows mirroring the published layout: one row per feature with both q columns."""
    by_feature = {}
    for r in results:
        by_feature.setdefault(r.feature_name, {})[r.comparison] = r
    table = []
    for name in SLIDE_FEATURE_NAMES:
        entry = by_feature.get(name, {})
        amp = entry.get("wt_vs_amp")
        exon = entry.get("wt_vs_exon14")
        candidates = [r for r in (amp, exon) if r is not None]
        if candidates:
            direction = min(candidates, key=lambda r: r.q_value).direction
        else:
            direction = ""
        cell, family, feature, stat = split_feature_name(name)
        table.append(
            {
                "cell": cell,
                "family": family,
                "feature": feature,
                "statistic": stat,
                "direction": direction,
                "q_wt_vs_amp": amp.q_value if amp else math.nan,
                "q_wt_vs_exon14": exon.q_value if exon else math.nan,
            }
        )
    return table
