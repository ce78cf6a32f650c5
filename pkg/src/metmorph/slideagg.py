"""Slide-level aggregation: 4 cell percentages plus clipped moment summaries.

Per slide the vector holds exactly 372 features: `global.percent.*` for the
four percentages and `{cell}.{family}.{feature}.{stat}` summaries (mean, std,
skewness, kurtosis) of the 46 per-cell features over tumor cells and
lymphocytes inside the tumor region.  A seeded 20% subsample of each cell type
is used when a slide has at least `min_cells_full_use` cells of that type, and
values are clipped to the 1-99 empirical percentiles of the sampled values
before the moments are taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cellfeat.moments import moment_summary
from .errors import SchemaError
from .io import fmt_float, parse_float, read_csv, stable_hash_u64, write_csv
from .naming import (
    CELL_FEATURE_NAMES,
    CELL_TYPES,
    LABELS,
    PERCENT_FEATURES,
    SLIDE_FEATURE_NAMES,
    SUMMARY_STATS,
)

# Record cell_class -> summary prefix.
_CLASS_TO_CELL = {"tumor": "tumor", "lymphocyte": "lymph"}


@dataclass
class AggregationConfig:
    subsample_fraction: float = 0.2
    min_cells_full_use: int = 50
    clip_low: float = 1.0
    clip_high: float = 99.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError("subsample_fraction must be in (0, 1]")
        if not 0.0 <= self.clip_low < self.clip_high <= 100.0:
            raise ValueError("clip percentiles must satisfy 0 <= low < high <= 100")


@dataclass
class SlideFeatureVector:
    slide_id: str
    label: str | None
    features: dict
    provenance: dict = field(default_factory=dict)


def compute_percentages(cells) -> tuple[dict, list]:
    """Cell-type percentages from (cell_class, in_tumor_region) pairs.

    til_percent divides in-tumor lymphocytes by the number of tumor cells, so
    it can exceed 1.  Zero denominators yield 0 plus a warning.
    """
    n_all = len(cells)
    n_tumor = sum(1 for c, _ in cells if c == "tumor")
    n_lymph = sum(1 for c, _ in cells if c == "lymphocyte")
    n_other = sum(1 for c, _ in cells if c == "other")
    n_til = sum(1 for c, r in cells if c == "lymphocyte" and r)
    warnings = []
    if n_all == 0:
        warnings.append("percentages: slide has no cells")
        values = dict.fromkeys(PERCENT_FEATURES, 0.0)
        return {f"global.percent.{k}": v for k, v in values.items()}, warnings
    if n_tumor == 0:
        warnings.append("til_percent: no tumor cells, value set to 0")
        til = 0.0
    else:
        til = n_til / n_tumor
    values = {
        "tumor_percent": n_tumor / n_all,
        "til_percent": til,
        "lymphocyte_percent": n_lymph / n_all,
        "non_tumor_lymphocyte_percent": n_other / n_all,
    }
    return {f"global.percent.{k}": v for k, v in values.items()}, warnings


def clip_to_percentiles(values: np.ndarray, low: float, high: float) -> np.ndarray:
    lo, hi = np.percentile(values, [low, high], method="linear")
    return np.clip(values, lo, hi)


def aggregate_slide(
    slide_id: str,
    records,
    cfg: AggregationConfig,
    label: str | None = None,
) -> SlideFeatureVector:
    """Assemble the 372-feature vector for one slide.

    Summary statistics run over non-degenerate in-tumor-region tumor cells
    and lymphocytes; percentages run over every listed cell.  A cell type
    with fewer than 3 usable cells produces missing (NaN) summaries and a
    warning flag.
    """
    features = dict.fromkeys(SLIDE_FEATURE_NAMES, math.nan)
    pct, warnings = compute_percentages([(r.cell_class, r.in_tumor_region) for r in records])
    features.update(pct)

    usable = {
        cell: [
            r
            for r in records
            if _CLASS_TO_CELL.get(r.cell_class) == cell
            and r.in_tumor_region
            and not r.degenerate
        ]
        for cell in CELL_TYPES
    }
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(stable_hash_u64(slide_id),))
    )
    counts = {}
    sampled_counts = {}
    for cell in CELL_TYPES:
        recs = usable[cell]
        n = len(recs)
        counts[cell] = n
        if n >= cfg.min_cells_full_use:
            k = int(math.floor(cfg.subsample_fraction * n))
            idx = rng.choice(n, size=k, replace=False)
            idx.sort()
            recs = [recs[i] for i in idx]
        sampled_counts[cell] = len(recs)
        if len(recs) < 3:
            warnings.append(
                f"{cell}: only {len(recs)} usable cells, summaries set to missing"
            )
            continue
        matrix = np.array(
            [[r.features[name] for name in CELL_FEATURE_NAMES] for r in recs],
            dtype=np.float64,
        )
        for j, name in enumerate(CELL_FEATURE_NAMES):
            clipped = clip_to_percentiles(matrix[:, j], cfg.clip_low, cfg.clip_high)
            mean, std, skew, kurt = moment_summary(clipped)
            stats = {"mean": mean, "std": std, "skewness": skew, "kurtosis": kurt}
            for stat in SUMMARY_STATS:
                features[f"{cell}.{name}.{stat}"] = stats[stat]

    provenance = {
        "seed": cfg.seed,
        "subsample_fraction": cfg.subsample_fraction,
        "min_cells_full_use": cfg.min_cells_full_use,
        "clip_percentiles": [cfg.clip_low, cfg.clip_high],
        "cell_counts": counts,
        "sampled_counts": sampled_counts,
        "warnings": warnings,
    }
    return SlideFeatureVector(slide_id=slide_id, label=label, features=features, provenance=provenance)


SLIDE_FEATURES_HEADER = ["slide_id", "label"] + list(SLIDE_FEATURE_NAMES)


def write_slide_features_csv(path, vectors):
    def rows():
        for v in vectors:
            yield [v.slide_id, v.label or ""] + [
                fmt_float(v.features[name]) for name in SLIDE_FEATURE_NAMES
            ]

    write_csv(path, SLIDE_FEATURES_HEADER, rows())


def read_slide_features_csv(path):
    header, rows = read_csv(path)
    if header != SLIDE_FEATURES_HEADER:
        extra = sorted(set(header) - set(SLIDE_FEATURES_HEADER))
        missing = sorted(set(SLIDE_FEATURES_HEADER) - set(header))
        raise SchemaError(
            f"{path}: slide feature columns mismatch; missing {missing[:5]}, unexpected {extra[:5]}"
        )
    vectors = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i} has {len(row)} fields")
        label = row[1] or None
        if label is not None and label not in LABELS:
            raise SchemaError(f"{path}: row {i}: unknown label {label!r}")
        features = {
            name: parse_float(row[2 + j]) for j, name in enumerate(SLIDE_FEATURE_NAMES)
        }
        vectors.append(SlideFeatureVector(slide_id=row[0], label=label, features=features))
    return vectors
