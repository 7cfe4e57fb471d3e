"""Distinct-count estimation from a Bernoulli-sampled stream.

A HyperLogLog sketch estimates the number of distinct elements that made it
into the sample; a Good-Turing estimate of the unseen mass, from exact
singleton tallies (``algorithm1``) or from a bounded reservoir
(``algorithm2``), scales that up to the original stream.
"""

from .analysis import (
    HLL_ARE,
    BudgetSplit,
    InfeasibleBudget,
    expected_p0,
    expected_p1,
    expected_singleton_mass,
    expected_unseen_mass,
    optimal_split,
    plugin_probabilities,
    rel_variance_alg1,
    rel_variance_alg2,
    scan_split,
)
from .estimators import (
    CardinalityPipeline,
    DegenerateSample,
    EstimateReport,
    PipelineConfig,
    algorithm1,
    algorithm2,
    corrected_estimate,
    naive_estimate,
)
from .goodturing import EmptySample, SampleSummary, gt_frequency, p0_empirical_variance, p0_hat
from .sampling import BernoulliSampler, ReservoirSubsample
from .simharness import ParetoModel, TrialConfig, TrialResult, UniformModel, run_grid, run_trials
from .sketch import HllSketch, hash_element, hash_u64, hll_estimate, hll_insert

__version__ = "0.1.0"

__all__ = [
    "HLL_ARE", "BudgetSplit", "InfeasibleBudget", "expected_p0", "expected_p1", "expected_singleton_mass",
    "expected_unseen_mass", "optimal_split", "plugin_probabilities", "rel_variance_alg1",
    "rel_variance_alg2", "scan_split",
    "CardinalityPipeline", "DegenerateSample", "EstimateReport", "PipelineConfig",
    "algorithm1", "algorithm2", "corrected_estimate", "naive_estimate",
    "EmptySample", "SampleSummary", "gt_frequency", "p0_empirical_variance", "p0_hat",
    "BernoulliSampler", "ReservoirSubsample",
    "ParetoModel", "TrialConfig", "TrialResult", "UniformModel", "run_grid", "run_trials",
    "HllSketch", "hash_element", "hash_u64", "hll_estimate", "hll_insert",
]
