"""Epidemic dissemination among mobile nodes as a branching particle system.

Layers, bottom up: seeded RNG streams (rng), discrete-generation branching
counts (galton_watson), continuous-state branching mass processes (csbp),
spatial branching Brownian particles (branching_brownian), the rescaled
measure-valued limit (superprocess), coverage/passage analysis (metrics),
and a reproducible CLI harness (cli). experiments bundles the study-sized
drivers used by the acceptance suite and scripts.
"""

__version__ = "0.1.0"

from .errors import ConfigError, NumericFailureError, PopulationOverflowError
from .rng import RngStream, make_stream
from .galton_watson import (
    OffspringLaw,
    GwTrajectory,
    simulate_counts,
    simulate_counts_ensemble,
    mean_population,
    classify_criticality,
    extinction_probability,
    extinction_frequency,
)
from .csbp import (
    BranchingMechanism,
    mechanism_value,
    classify_mechanism,
    laplace_exponent,
    laplace_functional,
    expected_mass,
    simulate_feller_path,
    feller_terminal_values,
)
from .raster import Window, RasterGrid, read_ascii_grid, write_ascii_grid
from .measure import (
    DiscreteMeasure,
    empty_measure,
    TestFunction,
    parse_test_function,
    integrate_test_function,
    density_grid,
)
from .branching_brownian import (
    Environment,
    EnvField,
    constant_environment,
    load_environment,
    environment_from_prefix,
    PopulationState,
    init_population,
    snapshot_measure,
    total_mass,
    advance,
    simulate_run,
    CallbackObserver,
    CountRecorder,
    RunningMaxRecorder,
    MeasureRecorder,
)
from .superprocess import (
    RescalingSchedule,
    initial_particle_count,
    resample,
    rescaled_run,
    rescaled_mass_samples,
)
from .metrics import (
    coverage_raster,
    coverage_fraction,
    uncovered_zones,
    Zone,
    coverage_series,
    CoverageSeries,
    recoverage_delay,
    recoverage_summary,
    RecoverageSummary,
    first_passage_times,
    FirstPassageRow,
    front_speed_estimate,
)
from .config import ExperimentConfig, parse_config

__all__ = [
    "__version__",
    "ConfigError", "NumericFailureError", "PopulationOverflowError",
    "RngStream", "make_stream",
    "OffspringLaw", "GwTrajectory", "simulate_counts", "simulate_counts_ensemble",
    "mean_population", "classify_criticality", "extinction_probability",
    "extinction_frequency",
    "BranchingMechanism", "mechanism_value", "classify_mechanism",
    "laplace_exponent", "laplace_functional", "expected_mass",
    "simulate_feller_path", "feller_terminal_values",
    "Window", "RasterGrid", "read_ascii_grid", "write_ascii_grid",
    "DiscreteMeasure", "empty_measure", "TestFunction", "parse_test_function",
    "integrate_test_function", "density_grid",
    "Environment", "EnvField", "constant_environment", "load_environment",
    "environment_from_prefix", "PopulationState", "init_population",
    "snapshot_measure", "total_mass", "advance", "simulate_run",
    "CallbackObserver", "CountRecorder", "RunningMaxRecorder", "MeasureRecorder",
    "RescalingSchedule", "initial_particle_count", "resample", "rescaled_run",
    "rescaled_mass_samples",
    "coverage_raster", "coverage_fraction", "uncovered_zones", "Zone",
    "coverage_series", "CoverageSeries", "recoverage_delay",
    "recoverage_summary", "RecoverageSummary", "first_passage_times",
    "FirstPassageRow", "front_speed_estimate",
    "ExperimentConfig", "parse_config",
]
