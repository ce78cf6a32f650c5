"""Minimal Canny edge detector with frozen parameters.

Gaussian sigma 1.0 (kernel truncated at 4 sigma), Sobel gradients, 4-sector
non-maximum suppression, hysteresis thresholds low = 0.1 * max gradient and
high = 0.2 * max gradient (strict comparisons, so a flat patch has no edges).
Borders are edge-replicated; out-of-bounds neighbors count as zero magnitude
during suppression.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

SIGMA = 1.0
LOW_FRACTION = 0.1
HIGH_FRACTION = 0.2


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(4.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


_KERNEL = _gaussian_kernel(SIGMA)


def gaussian_blur(gray: np.ndarray) -> np.ndarray:
    g = np.asarray(gray, dtype=np.float64)
    # "nearest" replicates the border, matching the Sobel padding convention.
    out = ndimage.correlate1d(g, _KERNEL, axis=0, mode="nearest")
    return ndimage.correlate1d(out, _KERNEL, axis=1, mode="nearest")


def canny_edges(gray: np.ndarray) -> np.ndarray:
    """Boolean edge map of a grayscale patch."""
    blurred = gaussian_blur(gray)
    g = np.pad(blurred, 1, mode="edge")
    gx = (
        (g[:-2, 2:] + 2.0 * g[1:-1, 2:] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[1:-1, :-2] + g[2:, :-2])
    )
    gy = (
        (g[2:, :-2] + 2.0 * g[2:, 1:-1] + g[2:, 2:])
        - (g[:-2, :-2] + 2.0 * g[:-2, 1:-1] + g[:-2, 2:])
    )
    mag = np.sqrt(gx * gx + gy * gy)
    gmax = float(mag.max())
    if gmax <= 0.0:
        return np.zeros_like(mag, dtype=bool)

    # Quantize gradient direction into 4 sectors: 0, 45, 90, 135 degrees.
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    sector = np.zeros(angle.shape, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    padded = np.pad(mag, 1, mode="constant")
    center = padded[1:-1, 1:-1]
    neighbor_pairs = {
        0: (padded[1:-1, 2:], padded[1:-1, :-2]),
        1: (padded[:-2, 2:], padded[2:, :-2]),
        2: (padded[:-2, 1:-1], padded[2:, 1:-1]),
        3: (padded[:-2, :-2], padded[2:, 2:]),
    }
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (a, b) in neighbor_pairs.items():
        sel = sector == s
        keep |= sel & (center >= a) & (center >= b)

    high = HIGH_FRACTION * gmax
    low = LOW_FRACTION * gmax
    strong = keep & (mag > high)
    weak = keep & (mag > low)
    if not strong.any():
        return np.zeros_like(mag, dtype=bool)
    return ndimage.binary_propagation(strong, mask=weak)
