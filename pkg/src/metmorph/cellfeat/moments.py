"""Population-moment summaries shared by the per-cell and per-slide stages.

All moments use population (biased) normalization; zero-variance samples map
skewness and kurtosis to 0 by convention so downstream vectors stay finite.
"""

from __future__ import annotations

import numpy as np


def _is_constant(v: np.ndarray) -> bool:
    # Explicit check: summation rounding can leave m2 ~ ulp^2 on constant
    # input, which would turn the 0-by-convention skew/kurtosis into garbage.
    return v.size == 0 or float(v.min()) == float(v.max())


def population_std(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=np.float64)
    if _is_constant(v):
        return 0.0
    return float(np.sqrt(np.mean((v - v.mean()) ** 2)))


def skewness(values: np.ndarray) -> float:
    """g1 = m3 / m2^1.5 with central population moments; 0 if variance is 0."""
    v = np.asarray(values, dtype=np.float64)
    if _is_constant(v):
        return 0.0
    d = v - v.mean()
    m2 = np.mean(d**2)
    if m2 <= 0.0:
        return 0.0
    return float(np.mean(d**3) / m2**1.5)


def excess_kurtosis(values: np.ndarray) -> float:
    """g2 = m4 / m2^2 - 3 with central population moments; 0 if variance is 0."""
    v = np.asarray(values, dtype=np.float64)
    if _is_constant(v):
        return 0.0
    d = v - v.mean()
    m2 = np.mean(d**2)
    if m2 <= 0.0:
        return 0.0
    return float(np.mean(d**4) / m2**2 - 3.0)


def interquartile_range(values: np.ndarray) -> float:
    """75th minus 25th percentile with linear interpolation."""
    v = np.asarray(values, dtype=np.float64)
    q75, q25 = np.percentile(v, [75.0, 25.0], method="linear")
    return float(q75 - q25)


def moment_summary(values: np.ndarray):
    """(mean, population std, skewness, excess kurtosis) of a sample."""
    v = np.asarray(values, dtype=np.float64)
    if _is_constant(v):
        return (float(v[0]) if v.size else 0.0, 0.0, 0.0, 0.0)
    return (
        float(v.mean()),
        population_std(v),
        skewness(v),
        excess_kurtosis(v),
    )
