"""Boundary tracing and polygon geometry for instance masks.

The tracer is a Moore-neighbor walk (8-connected, clockwise, Jacob stopping
criterion) over pixel centers; perimeter is the traced polyline length and
areas come from the shoelace formula.  The convention is frozen because golden
shape values depend on it.
"""

from __future__ import annotations

import numpy as np

# Clockwise Moore neighborhood starting at West, in (dr, dc).
_NEIGHBORS = (
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
)
_NEIGHBOR_INDEX = {off: i for i, off in enumerate(_NEIGHBORS)}


def trace_contour(mask: np.ndarray) -> np.ndarray:
    """Return the ordered outer boundary of a boolean mask as (k, 2) row/col pairs.

    Pixels may repeat where the region has one-pixel spurs; the sequence is a
    closed walk (last vertex connects back to the first).  The walk is a
    deterministic map on (pixel, backtrack) states, so the first repeated state
    closes the boundary cycle exactly.
    """
    mask = np.asarray(mask, dtype=bool)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    # Row-major first pixel: topmost row, then leftmost column.
    first = np.lexsort((cols, rows))[0]
    start = (int(rows[first]), int(cols[first]))
    if rows.size == 1:
        return np.array([start], dtype=np.int64)

    h, w = mask.shape

    def filled(r, c):
        return 0 <= r < h and 0 <= c < w and mask[r, c]

    contour = []
    seen = {}
    current = start
    # Backtrack starts at the West neighbor, guaranteed empty for that start.
    backtrack = (start[0], start[1] - 1)
    limit = 8 * int(mask.sum()) + 8
    for _ in range(limit):
        state = (current, backtrack)
        if state in seen:
            contour = contour[seen[state] :]
            break
        seen[state] = len(contour)
        contour.append(current)
        off = (backtrack[0] - current[0], backtrack[1] - current[1])
        base = _NEIGHBOR_INDEX[off]
        nxt = None
        for step in range(1, 9):
            k = (base + step) % 8
            dr, dc = _NEIGHBORS[k]
            cand = (current[0] + dr, current[1] + dc)
            if filled(*cand):
                nxt = cand
                prev = _NEIGHBORS[(base + step - 1) % 8]
                backtrack = (current[0] + prev[0], current[1] + prev[1])
                break
        if nxt is None:
            break
        current = nxt
    return np.array(contour, dtype=np.int64)


def polygon_perimeter(vertices: np.ndarray) -> float:
    """Length of the closed polyline through the vertices."""
    if len(vertices) < 2:
        return 0.0
    pts = np.asarray(vertices, dtype=np.float64)
    diffs = np.diff(np.vstack([pts, pts[:1]]), axis=0)
    return float(np.sqrt((diffs**2).sum(axis=1)).sum())

def polygon_area(vertices: np.ndarray) -> float:
    """Absolute shoelace area of the closed polygon through the vertices."""
    if len(vertices) < 3:
        return 0.0
    pts = np.asarray(vertices, dtype=np.float64)
    x, y = pts[:, 1], pts[:, 0]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return float(abs(np.dot(x, yn) - np.dot(xn, y)) / 2.0)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew monotone chain on (row, col) points; counter-clockwise order."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    # Sort by (col, row) i.e. x-major for the standard construction.
    order = np.lexsort((pts[:, 0], pts[:, 1]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[1] - o[1]) * (b[0] - o[0]) - (a[0] - o[0]) * (b[1] - o[1])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1], dtype=np.float64)
    return hull


def max_pairwise_distance(points: np.ndarray) -> float:
    """Feret diameter: maximum pairwise distance, computed on the hull."""
    hull = convex_hull(points)
    if len(hull) < 2:
        return 0.0
    diff = hull[:, None, :] - hull[None, :, :]
    d2 = (diff**2).sum(axis=2)
    return float(np.sqrt(d2.max()))
