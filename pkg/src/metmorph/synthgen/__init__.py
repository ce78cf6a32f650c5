"""Synthetic cohorts with controllable planted effects.

The rendered route (generate_cohort) writes the full extraction input
contract to disk; the latent route (sample_feature_cohort) draws slide-level
feature vectors directly from the Gaussian model that oracle_bayes_auc scores,
for statistics- and model-level verification at scale.
"""

from .latent import oracle_bayes_auc, sample_feature_cohort
from .render import generate_cohort
from .spec import (
    NORMAL_MAD,
    CellEffect,
    CellPopulation,
    FeatureCohortSpec,
    FeatureShift,
    GeneratorSpec,
)

__all__ = [
    "NORMAL_MAD",
    "CellEffect",
    "CellPopulation",
    "FeatureCohortSpec",
    "FeatureShift",
    "GeneratorSpec",
    "generate_cohort",
    "oracle_bayes_auc",
    "sample_feature_cohort",
]
