"""Batch toolkit for cell-morphology features and MET-alteration modeling.

Stages: per-cell feature extraction from segmented H&E tiles (cellfeat),
slide-level aggregation to a fixed 372-feature vector (slideagg), univariate
screening (stats), sparse logistic modeling under nested cross-validation
(sparsemodel), and a synthetic-cohort generator used as the verification
oracle (synthgen).  The `metmorph` CLI orchestrates the stages.
"""

__version__ = "0.1.0"
