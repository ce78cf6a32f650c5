import math

import numpy as np
import pytest

from metmorph.cellfeat import (
    CellInstance,
    Tile,
    extract_color,
    extract_intensity,
    rgb_to_gray,
    rgb_to_hue_saturation,
)
from metmorph.cellfeat.moments import (
    excess_kurtosis,
    interquartile_range,
    moment_summary,
    skewness,
)
from metmorph.errors import CellBoundsError

from oracles import moment_oracle, percentile_oracle


def tile_from(rgb):
    return Tile("t0", np.asarray(rgb, dtype=np.uint8))


def cell_for(tile, bbox=None):
    h, w = tile.rgb.shape[:2]
    bbox = bbox or (0, 0, h - 1, w - 1)
    mask = np.ones((bbox[2] - bbox[0] + 1, bbox[3] - bbox[1] + 1), bool)
    return CellInstance(1, "tumor", True, bbox, mask)


def test_uniform_patch_color():
    rgb = np.zeros((8, 8, 3), np.uint8)
    rgb[...] = (120, 60, 30)
    tile = tile_from(rgb)
    feats = extract_color(cell_for(tile), tile)
    assert feats["color.r_mean"] == 120.0
    assert feats["color.r_std"] == 0.0
    assert feats["color.intensity_mean"] == 70.0
    for name in feats:
        if name.endswith("_std"):
            assert feats[name] == 0.0


def test_pure_red_hue_saturation():
    rgb = np.zeros((4, 4, 3), np.uint8)
    rgb[..., 0] = 255
    tile = tile_from(rgb)
    feats = extract_color(cell_for(tile), tile)
    assert feats["color.hue_mean"] == 0.0
    assert feats["color.saturation_mean"] == 1.0


def test_two_pixel_population_std():
    rgb = np.zeros((1, 2, 3), np.uint8)
    rgb[0, 1] = (255, 255, 255)
    tile = tile_from(rgb)
    feats = extract_color(cell_for(tile), tile)
    assert feats["color.r_mean"] == 127.5
    assert feats["color.r_std"] == 127.5


def test_hue_wheel_primaries():
    for color, hue in [((255, 0, 0), 0.0), ((0, 255, 0), 1 / 3), ((0, 0, 255), 2 / 3)]:
        arr = np.zeros((1, 1, 3), float)
        arr[0, 0] = color
        h, s = rgb_to_hue_saturation(arr)
        assert h[0, 0] == pytest.approx(hue)
        assert s[0, 0] == 1.0
    gray = np.full((1, 1, 3), 77.0)
    h, s = rgb_to_hue_saturation(gray)
    assert h[0, 0] == 0.0 and s[0, 0] == 0.0


def test_hue_in_unit_interval_random():
    rng = np.random.default_rng(3)
    arr = rng.integers(0, 256, size=(32, 32, 3)).astype(float)
    h, s = rgb_to_hue_saturation(arr)
    assert (h >= 0.0).all() and (h < 1.0).all()
    assert (s >= 0.0).all() and (s <= 1.0).all()


def test_bbox_out_of_bounds_errors():
    tile = tile_from(np.zeros((8, 8, 3), np.uint8))
    cell = cell_for(tile, bbox=(4, 4, 9, 9))
    with pytest.raises(CellBoundsError):
        extract_color(cell, tile)
    with pytest.raises(CellBoundsError):
        extract_intensity(cell, tile)


def test_intensity_two_point_symmetric():
    rgb = np.zeros((2, 2, 3), np.uint8)
    rgb[0, 0] = rgb[0, 1] = 0
    rgb[1, 0] = rgb[1, 1] = 255
    tile = tile_from(rgb)
    feats = extract_intensity(cell_for(tile), tile)
    assert feats["intensity.min"] == 0.0
    assert feats["intensity.max"] == 255.0
    assert feats["intensity.mean"] == 127.5
    assert feats["intensity.std"] == 127.5
    assert feats["intensity.skewness"] == 0.0
    assert feats["intensity.kurtosis"] == -2.0


def test_intensity_constant_conventions():
    rgb = np.full((5, 5, 3), 80, np.uint8)
    tile = tile_from(rgb)
    feats = extract_intensity(cell_for(tile), tile)
    assert feats["intensity.min"] == feats["intensity.max"] == feats["intensity.mean"] == 80.0
    assert feats["intensity.std"] == 0.0
    assert feats["intensity.skewness"] == 0.0
    assert feats["intensity.kurtosis"] == 0.0


def test_three_zeros_one_bright_skewness():
    # Grayscale values {0, 0, 0, 255}: a p=1/4 two-point distribution, whose
    # skewness is (1 - 2p) / sqrt(p (1 - p)) = 2 / sqrt(3).
    values = [0.0, 0.0, 0.0, 255.0]
    _, _, skew_oracle, _ = moment_oracle(values)
    assert skew_oracle == pytest.approx(2.0 / math.sqrt(3.0), abs=1e-12)
    assert skewness(np.array(values)) == pytest.approx(skew_oracle, abs=1e-12)

    rgb = np.zeros((2, 2, 3), np.uint8)
    rgb[1, 1] = 255
    tile = tile_from(rgb)
    feats = extract_intensity(cell_for(tile), tile)
    assert feats["intensity.skewness"] == pytest.approx(skew_oracle, abs=1e-12)


def test_moments_match_oracle_random():
    rng = np.random.default_rng(5)
    for _ in range(30):
        values = rng.normal(50, 12, size=int(rng.integers(4, 200)))
        mean, std, skew, kurt = moment_summary(values)
        o_mean, o_std, o_skew, o_kurt = moment_oracle(values)
        assert mean == pytest.approx(o_mean, abs=1e-12)
        assert std == pytest.approx(o_std, abs=1e-12)
        assert skew == pytest.approx(o_skew, abs=1e-12)
        assert kurt == pytest.approx(o_kurt, abs=1e-12)


def test_iqr_matches_linear_interpolation_oracle():
    rng = np.random.default_rng(9)
    for _ in range(20):
        values = rng.integers(0, 255, size=int(rng.integers(3, 60))).astype(float)
        expected = percentile_oracle(values, 75) - percentile_oracle(values, 25)
        assert interquartile_range(values) == pytest.approx(expected, abs=1e-12)


def test_min_le_mean_le_max_random_tiles():
    rng = np.random.default_rng(21)
    for _ in range(10):
        rgb = rng.integers(0, 256, size=(9, 13, 3)).astype(np.uint8)
        tile = tile_from(rgb)
        feats = extract_intensity(cell_for(tile), tile)
        assert feats["intensity.min"] <= feats["intensity.mean"] <= feats["intensity.max"]


def test_gray_luma_weights():
    arr = np.zeros((1, 1, 3), float)
    arr[0, 0] = (100, 200, 50)
    assert rgb_to_gray(arr)[0, 0] == pytest.approx(0.299 * 100 + 0.587 * 200 + 0.114 * 50)


def test_kurtosis_zero_variance_zero():
    assert excess_kurtosis(np.full(10, 3.3)) == 0.0
