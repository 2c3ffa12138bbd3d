"""Sequential change detection for streams with unknown parameters.

Gaussian and Exponential generalized likelihood ratio control charts with
finite-sample mean corrections, Monte Carlo calibrated threshold sequences
that bound the in-control average run length, a Bayesian exact-filtering
baseline, and a simulation harness.
"""

__version__ = "0.1.0"

from .errors import (
    CalibrationExhaustedError,
    DomainError,
    GLRChartError,
    InputError,
)
from .monitor import DetectionReport, Detector, DetectorConfig, iter_reports, run
from .streamstats import CandidateSet, RunningSummary
from .thresholds import (
    CalibrationPlan,
    FixedThreshold,
    RegressionThreshold,
    ThresholdTable,
    calibrate,
    regression_h,
    shipped_table,
    statistic_kind,
)

__all__ = [
    "CalibrationExhaustedError",
    "CalibrationPlan",
    "CandidateSet",
    "DetectionReport",
    "Detector",
    "DetectorConfig",
    "DomainError",
    "FixedThreshold",
    "GLRChartError",
    "InputError",
    "RegressionThreshold",
    "RunningSummary",
    "ThresholdTable",
    "calibrate",
    "iter_reports",
    "regression_h",
    "run",
    "shipped_table",
    "statistic_kind",
    "__version__",
]
