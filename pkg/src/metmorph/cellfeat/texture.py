"""GLCM texture features and gradient statistics over a grayscale patch.

Frozen conventions (golden values depend on them):
  - 64 gray levels via level = floor(gray / 4) on the 0..255 luma scale;
  - symmetric co-occurrence at distance 1 for directions 0/45/90/135 degrees,
    normalized per direction, features averaged over the four directions;
  - natural-log entropies; log terms contribute only where the argument is
    positive; correlation and the information measures fall back to 0 for
    zero-variance or degenerate matrices;
  - Sobel gradients use 3x3 kernels with edge-replicated padding.
"""

from __future__ import annotations

import numpy as np

from .moments import excess_kurtosis, population_std, skewness
from .canny import canny_edges

N_LEVELS = 64

# Direction offsets (dr, dc) for 0, 45, 90, 135 degrees.
GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))

_I_IDX, _J_IDX = np.meshgrid(
    np.arange(N_LEVELS, dtype=np.float64),
    np.arange(N_LEVELS, dtype=np.float64),
    indexing="ij",
)
_DIFF_SQ = (_I_IDX - _J_IDX) ** 2
_INV_DIFF = 1.0 / (1.0 + _DIFF_SQ)
_PROD = _I_IDX * _J_IDX
_SUM_IDX = (_I_IDX + _J_IDX).astype(np.int64)
_ABSDIFF_IDX = np.abs(_I_IDX - _J_IDX).astype(np.int64)

HARALICK_NAMES = (
    "haralick_angular_second_moment",
    "haralick_contrast",
    "haralick_correlation",
    "haralick_sum_of_squares_variance",
    "haralick_inverse_difference_moment",
    "haralick_sum_average",
    "haralick_sum_variance",
    "haralick_difference_variance",
    "haralick_info_measure_corr_1",
    "haralick_info_measure_corr_2",
)


def quantize_gray(gray: np.ndarray) -> np.ndarray:
    """Map luma values in [0, 255] to integer levels 0..63."""
    levels = np.floor_divide(np.asarray(gray, dtype=np.float64), 4.0)
    return np.clip(levels, 0, N_LEVELS - 1).astype(np.int64)


def glcm(levels: np.ndarray, offset) -> np.ndarray:
    """Symmetric normalized co-occurrence matrix for one direction."""
    dr, dc = offset
    h, w = levels.shape
    r0, r1 = max(0, -dr), min(h, h - dr)
    c0, c1 = max(0, -dc), min(w, w - dc)
    src = levels[r0:r1, c0:c1].ravel()
    dst = levels[r0 + dr : r1 + dr, c0 + dc : c1 + dc].ravel()
    if src.size == 0:
        return np.zeros((N_LEVELS, N_LEVELS), dtype=np.float64)
    idx = np.concatenate([src * N_LEVELS + dst, dst * N_LEVELS + src])
    counts = np.bincount(idx, minlength=N_LEVELS * N_LEVELS).astype(np.float64)
    p = counts.reshape(N_LEVELS, N_LEVELS)
    total = p.sum()
    if total > 0:
        p /= total
    return p


def haralick_features(p: np.ndarray) -> dict:
    """The ten co-occurrence features of one normalized matrix."""
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    k = np.arange(N_LEVELS, dtype=np.float64)
    mu_x = float(np.dot(k, px))
    mu_y = float(np.dot(k, py))
    var_x = float(np.dot((k - mu_x) ** 2, px))
    var_y = float(np.dot((k - mu_y) ** 2, py))

    asm = float((p * p).sum())
    contrast = float((_DIFF_SQ * p).sum())
    if var_x > 0.0 and var_y > 0.0:
        correlation = float(((_PROD * p).sum() - mu_x * mu_y) / np.sqrt(var_x * var_y))
    else:
        correlation = 0.0
    sum_sq_variance = var_x
    idm = float((_INV_DIFF * p).sum())

    p_sum = np.bincount(_SUM_IDX.ravel(), weights=p.ravel(), minlength=2 * N_LEVELS - 1)
    ks = np.arange(2 * N_LEVELS - 1, dtype=np.float64)
    sum_average = float(np.dot(ks, p_sum))
    sum_variance = float(np.dot((ks - sum_average) ** 2, p_sum))

    p_diff = np.bincount(_ABSDIFF_IDX.ravel(), weights=p.ravel(), minlength=N_LEVELS)
    kd = np.arange(N_LEVELS, dtype=np.float64)
    mu_d = float(np.dot(kd, p_diff))
    diff_variance = float(np.dot((kd - mu_d) ** 2, p_diff))

    def entropy(values):
        v = values[values > 0.0]
        return float(-(v * np.log(v)).sum())

    hx = entropy(px)
    hy = entropy(py)
    hxy = entropy(p.ravel())
    pxpy = np.outer(px, py)
    pos = (p > 0.0) & (pxpy > 0.0)
    hxy1 = float(-(p[pos] * np.log(pxpy[pos])).sum())
    hxy2 = entropy(pxpy.ravel())

    denom = max(hx, hy)
    imc1 = float((hxy - hxy1) / denom) if denom > 0.0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))

    return {
        "haralick_angular_second_moment": asm,
        "haralick_contrast": contrast,
        "haralick_correlation": correlation,
        "haralick_sum_of_squares_variance": sum_sq_variance,
        "haralick_inverse_difference_moment": idm,
        "haralick_sum_average": sum_average,
        "haralick_sum_variance": sum_variance,
        "haralick_difference_variance": diff_variance,
        "haralick_info_measure_corr_1": imc1,
        "haralick_info_measure_corr_2": imc2,
    }


def haralick_averaged(gray: np.ndarray) -> dict:
    """Haralick features per direction, averaged over the four directions."""
    levels = quantize_gray(gray)
    acc = {name: 0.0 for name in HARALICK_NAMES}
    for offset in GLCM_OFFSETS:
        feats = haralick_features(glcm(levels, offset))
        for name in HARALICK_NAMES:
            acc[name] += feats[name]
    return {name: value / len(GLCM_OFFSETS) for name, value in acc.items()}


def sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    """3x3 Sobel gradient magnitude with edge-replicated borders."""
    g = np.pad(np.asarray(gray, dtype=np.float64), 1, mode="edge")
    gx = (
        (g[:-2, 2:] + 2.0 * g[1:-1, 2:] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[1:-1, :-2] + g[2:, :-2])
    )
    gy = (
        (g[2:, :-2] + 2.0 * g[2:, 1:-1] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[:-2, 1:-1] + g[:-2, 2:])
    )
    return np.sqrt(gx * gx + gy * gy)


def texture_features(gray: np.ndarray) -> dict:
    """All 16 texture features of a grayscale patch (at least 2x2)."""
    feats = haralick_averaged(gray)
    mag = sobel_magnitude(gray)
    flat = mag.ravel()
    feats["grad_mean"] = float(flat.mean())
    feats["grad_std"] = population_std(flat)
    feats["grad_skewness"] = skewness(flat)
    feats["grad_kurtosis"] = excess_kurtosis(flat)
    edges = canny_edges(gray)
    n_edge = int(edges.sum())
    feats["canny_sum"] = float(n_edge)
    feats["canny_mean"] = float(n_edge) / float(edges.size)
    return feats
