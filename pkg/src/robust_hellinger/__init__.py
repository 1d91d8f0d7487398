"""Two-point tests that tolerate misspecification in squared Hellinger distance.

Exact distances and geodesics on finite supports, five two-point tests, the
two-mixture lower-bound construction, and a seeded Monte Carlo harness.
"""

from .dist import (
    BinnedDistribution,
    InvalidDistributionError,
    SampleBatch,
    SupportMismatchError,
    align_supports,
    derive_seed,
    sample,
    validate,
)
from .divergences import bhattacharyya, divergence_report, hellinger_sq, sym_chi_sq, tv
from .geodesic import angle, critical_radius, geodesic_point, hellinger_midpoint
from .harness import ExperimentConfig, classify_truth, estimate_error, sample_complexity_sweep
from .reproduce import reproduce_claims
from .robust_tests import (
    Family,
    TestDecision,
    TestSpec,
    Verdict,
    baraud_expected_statistic,
    baraud_test,
    decide,
    disjoint_support_test,
    midpoint_composite_test,
    midpoint_expected_statistic,
    ml_test,
    scheffe_test,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
