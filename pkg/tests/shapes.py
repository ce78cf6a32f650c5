"""Deterministic mask factory shared by the shape tests and the golden file."""

from __future__ import annotations

import numpy as np


def square(n):
    return np.ones((n, n), dtype=bool)


def rect(h, w):
    return np.ones((h, w), dtype=bool)


def disk(radius):
    size = 2 * radius + 1
    rr, cc = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    return (rr - radius) ** 2 + (cc - radius) ** 2 <= radius**2


def l_shape(n, cut):
    m = np.ones((n, n), dtype=bool)
    m[:cut, n - cut :] = False
    return m


def plus_shape(n, arm):
    m = np.zeros((n, n), dtype=bool)
    lo = (n - arm) // 2
    hi = lo + arm
    m[lo:hi, :] = True
    m[:, lo:hi] = True
    return m


def diamond(radius):
    size = 2 * radius + 1
    rr, cc = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    return np.abs(rr - radius) + np.abs(cc - radius) <= radius


def ring(outer, inner):
    size = 2 * outer + 1
    rr, cc = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    d2 = (rr - outer) ** 2 + (cc - outer) ** 2
    return (d2 <= outer**2) & (d2 > inner**2)


GOLDEN_MASKS = {
    "square_10": square(10),
    "square_2": square(2),
    "rect_10x20": rect(10, 20),
    "rect_3x7": rect(3, 7),
    "disk_r4": disk(4),
    "disk_r6": disk(6),
    "disk_r10": disk(10),
    "l_shape_12_6": l_shape(12, 6),
    "l_shape_4_2": l_shape(4, 2),
    "plus_9_3": plus_shape(9, 3),
    "diamond_r5": diamond(5),
    "ring_r6_r3": ring(6, 3),
}
