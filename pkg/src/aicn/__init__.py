"""Affine-invariant cubic Newton (AICN) and baseline second-order methods."""

from .data import Dataset, load_libsvm, normalize_rows, parse_libsvm, synth_logistic, write_libsvm
from .errors import (
    AICNError,
    ConfigError,
    DimensionMismatch,
    NoMonotonePoint,
    NotPositiveDefinite,
    NumericalError,
    ParseError,
    SubproblemNotConverged,
)
from .objectives import (
    AffineSubstitution,
    LogisticObjective,
    LowerBoundObjective,
    Objective,
    QuadraticObjective,
    finite_diff_check,
)
from .optimizers import MethodConfig, StopRule, TraceRecord, aicn_stepsize, run

__version__ = "0.1.0"
