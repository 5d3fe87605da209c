"""qpe_lab: adaptive Bayesian quantum phase estimation, simulated and benchmarked.

The package simulates a single-qubit phase-sampling experiment with
depolarizing-style noise, maintains a grid posterior over the unknown
phase, and drives an adaptive depth-doubling measurement schedule against
non-adaptive baselines and analytic limit curves.
"""

from .adaptive import (
    AlgorithmConfig,
    AlgorithmTrace,
    InfeasibleIntervalError,
    StepRecord,
    chernoff_shot_budget,
    choose_center,
    max_shots_for_step,
    next_depth,
    required_confidence,
    run,
    validate_trace,
)
from .angles import TWO_PI, signed_gap, wrap, wrapped_distance
from .baselines import (
    BaselineResult,
    BoundParams,
    InfeasibleBoundError,
    QpeaConfig,
    appendix_loss_bound,
    default_step_count,
    limit_curves,
    qpea_outcome_distribution,
    run_classical,
    run_nonadaptive_doubling,
    run_qpea,
)
from .harness import (
    AggregateRow,
    DegenerateInputError,
    EmptyGroupError,
    SweepCellResult,
    SweepConfig,
    aggregate,
    derive_cell_seed,
    fit_loglog_slope,
    iter_sweep,
    read_aggregate_csv,
    read_results_csv,
    run_cell,
    run_sweep,
    write_aggregate_csv,
    write_manifest,
    write_results_csv,
)
from .model import (
    Circuit,
    DivergenceError,
    MeasurementRecord,
    NoiseModel,
    log_likelihood,
    minimum_achievable_variance,
    optimal_circuit,
    optimal_depth,
    sample_outcome,
    sigma_squared,
    success_probability,
)
from .posterior import (
    CircularInterval,
    GridPosterior,
    GridTooCoarseError,
    ImpossibleObservationError,
    InsufficientResourcesError,
    LossKind,
    UndefinedMeanError,
    circular_mean_estimate,
    confidence,
    expected_loss,
    map_estimate,
    mass_outside,
    predict_loss,
    predict_outcome,
    uniform_prior,
    update,
)
from .svg import ReferenceLine, Series, render_loglog

__version__ = "0.1.0"

__all__ = [
    "AggregateRow",
    "AlgorithmConfig",
    "AlgorithmTrace",
    "BaselineResult",
    "BoundParams",
    "Circuit",
    "CircularInterval",
    "DegenerateInputError",
    "DivergenceError",
    "EmptyGroupError",
    "GridPosterior",
    "GridTooCoarseError",
    "ImpossibleObservationError",
    "InfeasibleBoundError",
    "InfeasibleIntervalError",
    "InsufficientResourcesError",
    "LossKind",
    "MeasurementRecord",
    "NoiseModel",
    "QpeaConfig",
    "ReferenceLine",
    "Series",
    "StepRecord",
    "SweepCellResult",
    "SweepConfig",
    "TWO_PI",
    "UndefinedMeanError",
    "aggregate",
    "appendix_loss_bound",
    "chernoff_shot_budget",
    "choose_center",
    "circular_mean_estimate",
    "confidence",
    "default_step_count",
    "derive_cell_seed",
    "expected_loss",
    "fit_loglog_slope",
    "iter_sweep",
    "limit_curves",
    "log_likelihood",
    "map_estimate",
    "mass_outside",
    "max_shots_for_step",
    "minimum_achievable_variance",
    "next_depth",
    "optimal_circuit",
    "optimal_depth",
    "predict_loss",
    "predict_outcome",
    "qpea_outcome_distribution",
    "read_aggregate_csv",
    "read_results_csv",
    "render_loglog",
    "required_confidence",
    "run",
    "run_cell",
    "run_classical",
    "run_nonadaptive_doubling",
    "run_qpea",
    "run_sweep",
    "sample_outcome",
    "sigma_squared",
    "signed_gap",
    "success_probability",
    "uniform_prior",
    "update",
    "validate_trace",
    "wrap",
    "wrapped_distance",
    "write_aggregate_csv",
    "write_manifest",
    "write_results_csv",
]
