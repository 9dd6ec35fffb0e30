"""Spectral-density ABC for partially observed stochastic oscillators.

The package simulates Hamiltonian-type SDE models with structure-preserving
splitting schemes, summarizes trajectories by their invariant density and
smoothed periodogram, and recovers parameters by rejection ABC against
reference data. See the README for the command-line interface.
"""

from .abc import (
    AbcRun,
    DistanceConfig,
    PosteriorStats,
    ReferenceSet,
    UniformPrior,
    distance,
    pilot_ratios,
    pilot_weight,
    posterior_stats,
    references_from_summaries,
    run_abc,
    simulate_references,
)
from .config import RunConfig, load_run_config, parse_config
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    IngestionError,
    ModelConstructionError,
    NumericError,
    RunError,
    SpecAbcError,
    StatsError,
    SummaryError,
    UnsupportedSchemeError,
)
from .linalg import cholesky_psd, increment_covariance, matrix_exp
from .models import (
    HamiltonianModel,
    MODEL_IDS,
    StationaryAnalytics,
    canonical_param_name,
    make_critically_damped_oscillator,
    make_jansen_rit,
    make_model,
    make_nonlinear_oscillator,
    make_weakly_damped_oscillator,
    sigmoid_rate,
)
from .sim import (
    SCHEMES,
    RngStream,
    SimGrid,
    Trajectory,
    make_grid,
    simulate,
    simulate_euler,
    simulate_exact,
    simulate_states,
    simulate_strang_ode_outer,
    simulate_strang_sde_outer,
    write_trajectory_csv,
)
from .summaries import (
    DensityEstimate,
    SpectralConfig,
    SpectralEstimate,
    SummaryPair,
    iae,
    kde,
    smoothed_periodogram,
    summarize,
    write_curve_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AbcRun",
    "ConfigError",
    "DensityEstimate",
    "DimensionError",
    "DistanceConfig",
    "DomainError",
    "HamiltonianModel",
    "IngestionError",
    "MODEL_IDS",
    "ModelConstructionError",
    "NumericError",
    "PosteriorStats",
    "ReferenceSet",
    "RngStream",
    "RunConfig",
    "RunError",
    "SCHEMES",
    "SimGrid",
    "SpecAbcError",
    "SpectralConfig",
    "SpectralEstimate",
    "StationaryAnalytics",
    "StatsError",
    "SummaryError",
    "SummaryPair",
    "Trajectory",
    "UniformPrior",
    "UnsupportedSchemeError",
    "canonical_param_name",
    "cholesky_psd",
    "distance",
    "iae",
    "increment_covariance",
    "kde",
    "load_run_config",
    "make_critically_damped_oscillator",
    "make_grid",
    "make_jansen_rit",
    "make_model",
    "make_nonlinear_oscillator",
    "make_weakly_damped_oscillator",
    "matrix_exp",
    "parse_config",
    "pilot_ratios",
    "pilot_weight",
    "posterior_stats",
    "references_from_summaries",
    "run_abc",
    "sigmoid_rate",
    "simulate",
    "simulate_euler",
    "simulate_exact",
    "simulate_references",
    "simulate_states",
    "simulate_strang_ode_outer",
    "simulate_strang_sde_outer",
    "smoothed_periodogram",
    "summarize",
    "write_curve_csv",
    "write_trajectory_csv",
]
