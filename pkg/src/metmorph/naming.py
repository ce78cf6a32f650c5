"""Canonical feature-name registry.

Every artifact (cell_features.csv, slide_features.csv, univariate.csv, model
files, coefficient reports) joins on these names, so the grammar is frozen:

    per-cell   : "{family}.{feature}"                e.g. "shape.area"
    summary    : "{cell}.{family}.{feature}.{stat}"  e.g. "lymph.shape.area.skewness"
    percentage : "global.percent.{name}"             e.g. "global.percent.tumor_percent"

with cell in {tumor, lymph}, family in {shape, color, intensity, texture} and
stat in {mean, std, skewness, kurtosis}.  Feature tokens never contain dots.
"""

from __future__ import annotations

SHAPE_FEATURES = (
    "area",
    "bbox_area",
    "solidity",
    "perimeter",
    "convex_perimeter_ratio",
    "circularity",
    "aspect_ratio",
    "equivalent_diameter",
    "longest_axis",
    "area_over_bbox",
    "bbox_aspect_ratio",
)

COLOR_FEATURES = (
    "r_mean",
    "r_std",
    "g_mean",
    "g_std",
    "b_mean",
    "b_std",
    "hue_mean",
    "hue_std",
    "saturation_mean",
    "saturation_std",
    "intensity_mean",
    "intensity_std",
)

INTENSITY_FEATURES = (
    "min",
    "max",
    "mean",
    "std",
    "iqr",
    "skewness",
    "kurtosis",
)

TEXTURE_FEATURES = (
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
    "grad_mean",
    "grad_std",
    "grad_skewness",
    "grad_kurtosis",
    "canny_sum",
    "canny_mean",
)

FAMILY_FEATURES = {
    "shape": SHAPE_FEATURES,
    "color": COLOR_FEATURES,
    "intensity": INTENSITY_FEATURES,
    "texture": TEXTURE_FEATURES,
}

FAMILIES = tuple(FAMILY_FEATURES)
CELL_TYPES = ("tumor", "lymph")
SUMMARY_STATS = ("mean", "std", "skewness", "kurtosis")

PERCENT_FEATURES = (
    "tumor_percent",
    "til_percent",
    "lymphocyte_percent",
    "non_tumor_lymphocyte_percent",
)

# 11 + 12 + 7 + 16 = 46 per-cell features, in frozen column order.
CELL_FEATURE_NAMES = tuple(
    f"{family}.{feat}" for family in FAMILIES for feat in FAMILY_FEATURES[family]
)


def _build_slide_names():
    names = [f"global.percent.{p}" for p in PERCENT_FEATURES]
    for cell in CELL_TYPES:
        for family in FAMILIES:
            for feat in FAMILY_FEATURES[family]:
                for stat in SUMMARY_STATS:
                    names.append(f"{cell}.{family}.{feat}.{stat}")
    return tuple(names)


# 4 percentages + 2 cell types x 46 features x 4 stats = 372 slide features.
SLIDE_FEATURE_NAMES = _build_slide_names()

# Family counts over the slide-level vector (percentage/shape/color/intensity/texture).
SLIDE_FAMILY_COUNTS = {
    "percent": len(PERCENT_FEATURES),
    "shape": len(CELL_TYPES) * len(SHAPE_FEATURES) * len(SUMMARY_STATS),
    "color": len(CELL_TYPES) * len(COLOR_FEATURES) * len(SUMMARY_STATS),
    "intensity": len(CELL_TYPES) * len(INTENSITY_FEATURES) * len(SUMMARY_STATS),
    "texture": len(CELL_TYPES) * len(TEXTURE_FEATURES) * len(SUMMARY_STATS),
}

LABELS = ("wild_type", "amplified", "exon14", "amplified_and_exon14")
ALTERED_LABELS = ("amplified", "exon14", "amplified_and_exon14")

CELL_CLASSES = ("tumor", "lymphocyte", "other")


def split_feature_name(name: str):
    """Decompose a slide-level name into (cell, family, feature, statistic)."""
    parts = name.split(".")
    if len(parts) == 3 and parts[0] == "global" and parts[1] == "percent":
        return ("global", "percent", parts[2], "value")
    if len(parts) == 4 and parts[0] in CELL_TYPES and parts[1] in FAMILIES:
        return tuple(parts)
    raise ValueError(f"not a canonical slide feature name: {name!r}")


def is_log_feature(name: str) -> bool:
    """Features log-transformed by the model pipeline.

    Exactly: area-valued per-cell features (shape.area, shape.bbox_area) with
    stat=mean, plus every stat=std summary.
    """
    cell, family, feature, stat = split_feature_name(name)
    if cell == "global":
        return False
    if stat == "std":
        return True
    return stat == "mean" and family == "shape" and feature in ("area", "bbox_area")


def slide_feature_index(name: str) -> int:
    try:
        return _SLIDE_INDEX[name]
    except KeyError:
        raise ValueError(f"not a canonical slide feature name: {name!r}") from None


_SLIDE_INDEX = {name: i for i, name in enumerate(SLIDE_FEATURE_NAMES)}
