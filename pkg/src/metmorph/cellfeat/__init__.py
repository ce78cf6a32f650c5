"""Per-cell feature extraction from instance masks and RGB tiles.

Each cell yields 46 features: 11 shape, 12 color, 7 grayscale intensity and
16 texture.  Shape is computed on the mask in bounding-box-local coordinates
(so it is exactly translation invariant); color, intensity and texture are
computed over the full bounding-box crop of the tile.  Degenerate cells
(fewer than 3 distinct pixels, collinear masks, or bounding boxes smaller
than 2x2 for texture) are emitted with a flag and excluded from aggregation.

All operations are pure functions of (cell, tile); repeated invocation is
bit-identical and safe to run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import CellBoundsError
from ..naming import CELL_FEATURE_NAMES
from .contour import (
    convex_hull,
    max_pairwise_distance,
    polygon_area,
    polygon_perimeter,
    trace_contour,
)
from .moments import (
    excess_kurtosis,
    interquartile_range,
    population_std,
    skewness,
)
from .texture import texture_features

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class Tile:
    """One RGB tile of a slide."""

    tile_id: str
    rgb: np.ndarray  # H x W x 3, uint8
    origin: tuple = (0, 0)
    magnification_note: str = "20X, 0.5 um/px"

    def __post_init__(self):
        self.rgb = np.asarray(self.rgb)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise ValueError(f"tile {self.tile_id}: rgb must be HxWx3")
        if self.rgb.shape[0] < 1 or self.rgb.shape[1] < 1:
            raise ValueError(f"tile {self.tile_id}: empty image")


@dataclass
class CellInstance:
    """One segmented nucleus, stored as a bounding box plus local mask."""

    instance_id: int
    cell_class: str  # tumor | lymphocyte | other
    in_tumor_region: bool
    bbox: tuple  # (row_min, col_min, row_max, col_max), inclusive
    local_mask: np.ndarray  # bool array of bbox shape
    tile_id: str = ""

    @classmethod
    def from_mask_pixels(cls, instance_id, cell_class, in_tumor_region, pixels, tile_id=""):
        pixels = np.asarray(sorted(pixels), dtype=np.int64)
        if pixels.size == 0:
            raise ValueError("cell mask is empty")
        r0, c0 = pixels.min(axis=0)
        r1, c1 = pixels.max(axis=0)
        local = np.zeros((r1 - r0 + 1, c1 - c0 + 1), dtype=bool)
        local[pixels[:, 0] - r0, pixels[:, 1] - c0] = True
        return cls(instance_id, cell_class, in_tumor_region, (int(r0), int(c0), int(r1), int(c1)), local, tile_id)

    @property
    def n_pixels(self) -> int:
        return int(self.local_mask.sum())

    @property
    def mask_pixels(self):
        rows, cols = np.nonzero(self.local_mask)
        return {(int(r) + self.bbox[0], int(c) + self.bbox[1]) for r, c in zip(rows, cols)}

    @property
    def outer_contour(self) -> np.ndarray:
        contour = trace_contour(self.local_mask)
        return contour + np.array([self.bbox[0], self.bbox[1]], dtype=np.int64)


@dataclass
class CellFeatureRecord:
    """Flat 46-feature record for one cell, with a degeneracy flag."""

    tile_id: str
    instance_id: int
    cell_class: str
    in_tumor_region: bool
    degenerate: bool
    features: dict = field(default_factory=dict)


SHAPE_NAN = {f"shape.{k}" for k in (
    "area", "bbox_area", "solidity", "perimeter", "convex_perimeter_ratio",
    "circularity", "aspect_ratio", "equivalent_diameter", "longest_axis",
    "area_over_bbox", "bbox_aspect_ratio",
)}


def extract_shape(cell: CellInstance) -> dict:
    """The 11 shape features; raises ValueError for degenerate masks."""
    mask = cell.local_mask
    area = float(mask.sum())
    h, w = mask.shape
    bbox_area = float(h * w)
    contour = trace_contour(mask)
    if len(contour) < 3:
        raise ValueError("degenerate cell: fewer than 3 contour vertices")
    perimeter = polygon_perimeter(contour)
    contour_area = polygon_area(contour)
    hull = convex_hull(contour)
    hull_area = polygon_area(hull)
    hull_perimeter = polygon_perimeter(hull)
    if hull_area <= 0.0 or perimeter <= 0.0 or contour_area <= 0.0:
        raise ValueError("degenerate cell: collinear or zero-area contour")
    return {
        "shape.area": area,
        "shape.bbox_area": bbox_area,
        "shape.solidity": contour_area / hull_area,
        "shape.perimeter": perimeter,
        "shape.convex_perimeter_ratio": hull_perimeter / perimeter,
        "shape.circularity": contour_area / perimeter**2,
        "shape.aspect_ratio": w / h,
        "shape.equivalent_diameter": float(np.sqrt(4.0 * contour_area / np.pi)),
        "shape.longest_axis": max_pairwise_distance(contour),
        "shape.area_over_bbox": area / bbox_area,
        "shape.bbox_aspect_ratio": max(w, h) / min(w, h),
    }


def _bbox_crop(cell: CellInstance, tile: Tile) -> np.ndarray:
    r0, c0, r1, c1 = cell.bbox
    h, w = tile.rgb.shape[:2]
    if r0 < 0 or c0 < 0 or r1 >= h or c1 >= w:
        raise CellBoundsError(tile.tile_id, cell.instance_id, cell.bbox, (h, w))
    return tile.rgb[r0 : r1 + 1, c0 : c1 + 1].astype(np.float64)


def rgb_to_gray(rgb: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma on the 0..255 scale."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b


def rgb_to_hue_saturation(rgb: np.ndarray):
    """Hue scaled to [0, 1) and saturation from the HSV hexcone model."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = np.maximum(np.maximum(r, g), b)
    mn = np.minimum(np.minimum(r, g), b)
    delta = mx - mn
    hue = np.zeros_like(mx)
    chrom = delta > 0
    safe = np.where(chrom, delta, 1.0)
    rmax = chrom & (mx == r)
    gmax = chrom & (mx == g) & ~rmax
    bmax = chrom & ~rmax & ~gmax
    hue = np.where(rmax, np.mod((g - b) / safe, 6.0), hue)
    hue = np.where(gmax, (b - r) / safe + 2.0, hue)
    hue = np.where(bmax, (r - g) / safe + 4.0, hue)
    hue = hue / 6.0
    saturation = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return hue, saturation


def extract_color(cell: CellInstance, tile: Tile) -> dict:
    """Mean and population std of R/G/B/Hue/Saturation/ColorIntensity over the bbox."""
    crop = _bbox_crop(cell, tile)
    hue, saturation = rgb_to_hue_saturation(crop)
    intensity = crop.mean(axis=2)
    channels = {
        "r": crop[..., 0],
        "g": crop[..., 1],
        "b": crop[..., 2],
        "hue": hue,
        "saturation": saturation,
        "intensity": intensity,
    }
    out = {}
    for name, values in channels.items():
        flat = values.ravel()
        out[f"color.{name}_mean"] = float(flat.mean())
        out[f"color.{name}_std"] = population_std(flat)
    return out


def extract_intensity(cell: CellInstance, tile: Tile) -> dict:
    """Seven grayscale statistics over the bounding box."""
    gray = rgb_to_gray(_bbox_crop(cell, tile)).ravel()
    return {
        "intensity.min": float(gray.min()),
        "intensity.max": float(gray.max()),
        "intensity.mean": float(gray.mean()),
        "intensity.std": population_std(gray),
        "intensity.iqr": interquartile_range(gray),
        "intensity.skewness": skewness(gray),
        "intensity.kurtosis": excess_kurtosis(gray),
    }


def extract_texture(cell: CellInstance, tile: Tile) -> dict:
    """Ten direction-averaged Haralick features plus six gradient statistics."""
    gray = rgb_to_gray(_bbox_crop(cell, tile))
    if gray.shape[0] < 2 or gray.shape[1] < 2:
        raise ValueError("degenerate cell: bounding box smaller than 2x2")
    return {f"texture.{k}": v for k, v in texture_features(gray).items()}


def extract_cell_record(cell: CellInstance, tile: Tile) -> CellFeatureRecord:
    """All 46 features for one cell; degeneracy sets the flag and NaN values."""
    features = dict.fromkeys(CELL_FEATURE_NAMES, float("nan"))
    degenerate = False
    try:
        features.update(extract_shape(cell))
    except ValueError:
        degenerate = True
    features.update(extract_color(cell, tile))
    features.update(extract_intensity(cell, tile))
    try:
        features.update(extract_texture(cell, tile))
    except ValueError:
        degenerate = True
    return CellFeatureRecord(
        tile_id=tile.tile_id,
        instance_id=cell.instance_id,
        cell_class=cell.cell_class,
        in_tumor_region=cell.in_tumor_region,
        degenerate=degenerate,
        features=features,
    )
