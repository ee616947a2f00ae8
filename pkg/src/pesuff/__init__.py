"""Ordinal-pattern model sufficiency testing for point forecasts."""

from .dependence import KResult, SurrogateEnsemble, k_self, k_statistic, surrogate_ensemble
from .dgp import DEFAULT_PARAMS, DgpKind, DgpSpec, SimulatedPath, signal_to_noise, simulate
from .errors import (
    ConfigError,
    DegenerateDataError,
    EstimationFailedError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDataError,
    PesuffError,
)
from .ordinal import (
    OrdinalPattern,
    PatternDistribution,
    SegmentConfig,
    TieRule,
    encode_segment,
    mixed_segments,
    pattern_distribution,
)

__version__ = "0.1.0"
