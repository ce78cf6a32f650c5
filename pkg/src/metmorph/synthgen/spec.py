"""Generator specifications for synthetic cohorts.

Two planting vocabularies exist.  FeatureShift plants a Gaussian location
shift directly on a named slide-level feature (the model used by the Bayes
oracle); CellEffect shifts a per-slide morphology latent of one cell class so
the signal propagates through rendering, extraction, clipping and subsampling.
Effect sizes are expressed in MAD units of the shifted latent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..naming import LABELS, slide_feature_index

# MAD of a standard normal: Phi^-1(0.75).
NORMAL_MAD = 0.6744897501960817

DEFAULT_PROCEDURES = ("core_needle_biopsy", "resection", "biopsy")


def _check_labels(label_classes):
    for lab in label_classes:
        if lab not in LABELS or lab == "wild_type":
            raise ValueError(f"effects may only target altered classes, got {lab!r}")


@dataclass(frozen=True)
class FeatureShift:
    feature: str
    label_classes: tuple
    size_mad: float

    def __post_init__(self):
        slide_feature_index(self.feature)  # validates the name
        _check_labels(self.label_classes)


@dataclass(frozen=True)
class FeatureCohortSpec:
    seed: int
    n_per_class: dict  # label -> slide count
    shifts: tuple = ()

    def __post_init__(self):
        for lab in self.n_per_class:
            if lab not in LABELS:
                raise ValueError(f"unknown label {lab!r}")


EFFECT_CHANNELS = ("size", "elongation", "hue", "brightness", "noise", "texture")


@dataclass(frozen=True)
class CellEffect:
    channel: str
    cell_class: str  # tumor | lymphocyte
    label_classes: tuple
    size_mad: float

    def __post_init__(self):
        if self.channel not in EFFECT_CHANNELS:
            raise ValueError(f"unknown effect channel {self.channel!r}")
        if self.cell_class not in ("tumor", "lymphocyte"):
            raise ValueError("effects target tumor or lymphocyte populations")
        _check_labels(self.label_classes)


@dataclass(frozen=True)
class CellPopulation:
    count_mean: float
    count_sd: float
    radius_mean: float  # semi-major axis, px
    radius_sigma: float  # lognormal sigma of per-cell radius
    ecc_low: float  # b/a ratio bounds
    ecc_high: float
    base_rgb: tuple
    color_noise_sd: float
    texture_amp: float


DEFAULT_POPULATIONS = {
    "tumor": CellPopulation(
        count_mean=130.0,
        count_sd=25.0,
        radius_mean=7.0,
        radius_sigma=0.18,
        ecc_low=0.55,
        ecc_high=0.95,
        base_rgb=(125, 70, 150),
        color_noise_sd=9.0,
        texture_amp=10.0,
    ),
    "lymphocyte": CellPopulation(
        count_mean=90.0,
        count_sd=18.0,
        radius_mean=4.2,
        radius_sigma=0.12,
        ecc_low=0.78,
        ecc_high=1.0,
        base_rgb=(72, 48, 132),
        color_noise_sd=7.0,
        texture_amp=6.0,
    ),
    "other": CellPopulation(
        count_mean=28.0,
        count_sd=8.0,
        radius_mean=5.2,
        radius_sigma=0.2,
        ecc_low=0.6,
        ecc_high=0.95,
        base_rgb=(150, 95, 145),
        color_noise_sd=8.0,
        texture_amp=7.0,
    ),
}

# Per-slide latent spread per channel; effects shift the latent mean.
LATENT_SD = {
    "size": 0.06,
    "elongation": 0.05,
    "hue": 0.025,
    "brightness": 6.0,
    "noise": 0.10,
    "texture": 0.12,
}


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    n_per_class: dict
    tile_size: int = 256
    cells_per_tile: int = 40
    tumor_region_fraction: float = 0.85
    populations: dict = field(default_factory=lambda: dict(DEFAULT_POPULATIONS))
    effects: tuple = ()
    cell_count_scale: float = 1.0  # scales count_mean of every population

    def __post_init__(self):
        for lab in self.n_per_class:
            if lab not in LABELS:
                raise ValueError(f"unknown label {lab!r}")
        if self.tile_size < 32:
            raise ValueError("tile_size must be at least 32")
