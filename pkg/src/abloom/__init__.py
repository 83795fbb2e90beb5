"""Counting Bloom filter with tuned binarized views.

A counting filter keeps per-slot counters so elements can be removed.
Binarizing it at a threshold theta (and accepting queries whose dot
product reaches a decision threshold T) turns an overfull filter back
into a usable one: the analytic model predicts the resulting true/false
positive rates in closed form, and the tuner picks (theta, T) maximizing
balanced accuracy under a recall floor.  The harness measures the same
rates by Monte Carlo for validation.
"""

from .analytic_model import (ModelPoint, RateEstimate, binom_pmf,
                             binom_upper_tail, counter_pmf,
                             dot_product_pmfs, expected_count_histogram,
                             expected_dot_absent, expected_dot_stored,
                             optimal_k, p_empty, p_zero_after_threshold,
                             per_slot_set_probs, rates)
from .filter_core import (BinarizedView, CounterOverflowError,
                          CounterUnderflowError, CountingFilter,
                          ElementDigest, FilterError, FilterFormatError,
                          FilterParams, digest, digest_many_u64)
from .harness import (ExperimentConfig, GrowthResult, SweepResult,
                      TrialRecord, brute_force_oracle, element_block,
                      measure_empirical_rates, retouched_view,
                      run_growth_comparison, run_threshold_sweep,
                      write_records_csv)
from .kernels import backend_name, get_kernels, set_backend
from .tuner import (Autoscaler, TuneConstraint, TuneResult,
                    optimize_decision_threshold, optimize_thresholds,
                    theta_cap)

__version__ = "0.1.0"

__all__ = [
    "Autoscaler", "BinarizedView", "CounterOverflowError",
    "CounterUnderflowError", "CountingFilter", "ElementDigest",
    "ExperimentConfig", "FilterError", "FilterFormatError", "FilterParams",
    "GrowthResult", "ModelPoint", "RateEstimate", "SweepResult",
    "TrialRecord", "TuneConstraint", "TuneResult", "backend_name",
    "binom_pmf", "binom_upper_tail", "brute_force_oracle", "counter_pmf",
    "digest", "digest_many_u64", "dot_product_pmfs", "element_block",
    "expected_count_histogram", "expected_dot_absent", "expected_dot_stored",
    "get_kernels", "measure_empirical_rates", "optimal_k",
    "optimize_decision_threshold", "optimize_thresholds", "p_empty",
    "p_zero_after_threshold", "per_slot_set_probs", "rates",
    "retouched_view", "run_growth_comparison", "run_threshold_sweep",
    "set_backend", "theta_cap", "write_records_csv",
]
