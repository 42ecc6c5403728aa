"""Rate, finite-key and benchmark calculator for multiplexed MDI quantum secret sharing."""

__version__ = "0.1.0"

from .benchmarks import (
    crossing_distance,
    direct_transmission_bound,
    finite_cutoff_distance,
    plob_bound,
    qds_signature_rate,
    table1_rows,
)
from .device_model import ClickModel, DeviceParams, arrival_probability, build_click_model, click_model
from .errors import ConfigError, DomainError
from .ghz_combinatorics import (
    GhzProjectionStats,
    Projection,
    arrangement_count,
    classify_parity,
    ghz_projection_stats,
    x_basis_stats,
    z_basis_stats,
)
from .multiplexing import MultiplexConfig, expected_groups, finite_gain, monte_carlo_gain
from .optical_oracle import build_analyzer_transform, oracle_stats
from .security_rates import (
    FiniteKeyBudget,
    RatePoint,
    asymptotic_point,
    asymptotic_rate,
    finite_key_length,
    finite_rate,
)

__all__ = [
    "ClickModel",
    "ConfigError",
    "DeviceParams",
    "DomainError",
    "FiniteKeyBudget",
    "GhzProjectionStats",
    "MultiplexConfig",
    "Projection",
    "RatePoint",
    "arrangement_count",
    "arrival_probability",
    "asymptotic_point",
    "asymptotic_rate",
    "build_analyzer_transform",
    "build_click_model",
    "classify_parity",
    "click_model",
    "crossing_distance",
    "direct_transmission_bound",
    "expected_groups",
    "finite_cutoff_distance",
    "finite_gain",
    "finite_key_length",
    "finite_rate",
    "ghz_projection_stats",
    "monte_carlo_gain",
    "oracle_stats",
    "plob_bound",
    "qds_signature_rate",
    "table1_rows",
    "x_basis_stats",
    "z_basis_stats",
]
