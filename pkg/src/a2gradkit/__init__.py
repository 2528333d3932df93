"""Adaptive accelerated gradient methods with a benchmark harness.

The package couples a Nesterov-style three-sequence momentum scheme with
per-coordinate adaptive scaling driven by gradient-error estimates, plus
reference baselines (SGD, AdaGrad, Adam, AMSGrad), synthetic convex test
problems, and a CLI for reproducible experiments.

Hot loops run through numba-compiled kernels when numba is importable; set
``A2GRADKIT_BACKEND=numpy`` (or ``numba``/``auto``) to pick explicitly. Both
backends produce bitwise-identical trajectories.
"""

from .backend import ENV_VAR, active_backend, available_backends, warmup
from .baselines import (
    METHODS,
    BaselineConfig,
    PeriodicCounterexample,
    baseline_step,
    init_baseline_state,
    make_periodic_counterexample,
    reference_adam_for_counterexample,
    run_baseline,
)
from .core import (
    CAP_EXACT_GRADIENT,
    CAP_OBJECTIVE,
    CAP_OPTIMUM_POINT,
    CAP_OPTIMUM_VALUE,
    GradientSample,
    ParamVector,
    StochasticOracle,
    has_capability,
    make_rng,
    param_vector,
)
from .errors import CapabilityError, ConfigError, ContractError, RunAbort
from .harness import (
    SWEEP_AXES,
    ComparisonTable,
    ExperimentConfig,
    ExperimentResult,
    RateFit,
    compare_methods,
    config_from_dict,
    fit_rate,
    fit_rate_arrays,
    from_yaml,
    load_config,
    run_experiment,
    selftest,
    sweep_experiment,
    to_yaml,
    write_summary,
)
from .optimizer import (
    FORMS,
    A2GradConfig,
    A2GradState,
    ProjectionSpec,
    StepInfo,
    box,
    init_state,
    run,
    step_three_sequence,
    step_two_sequence,
)
from .problems import (
    NOISE_KINDS,
    LogisticProblem,
    NoiseModel,
    QuadraticProblem,
    finite_difference_check,
    load_dataset_csv,
    make_logistic_synthetic,
    make_quadratic,
)
from .record import RunRecord, read_csv, records_equal, write_csv
from .scaling import (
    SCHEMES,
    DeltaEstimator,
    ScalerState,
    estimate_delta,
    make_delta_estimator,
    make_scaler,
    update_exponential,
    update_incremental,
    update_qweighted,
    update_scaler,
    update_uniform,
)
from .schedule import (
    ConditionViolation,
    MomentumSchedule,
    ScheduleStep,
    ValidationReport,
    step_at,
    steps_array,
    validate_conditions,
)

__version__ = "0.1.0"

__all__ = [
    "ENV_VAR",
    "active_backend",
    "available_backends",
    "warmup",
    "METHODS",
    "BaselineConfig",
    "PeriodicCounterexample",
    "baseline_step",
    "init_baseline_state",
    "make_periodic_counterexample",
    "reference_adam_for_counterexample",
    "run_baseline",
    "CAP_EXACT_GRADIENT",
    "CAP_OBJECTIVE",
    "CAP_OPTIMUM_POINT",
    "CAP_OPTIMUM_VALUE",
    "GradientSample",
    "ParamVector",
    "StochasticOracle",
    "has_capability",
    "make_rng",
    "param_vector",
    "CapabilityError",
    "ConfigError",
    "ContractError",
    "RunAbort",
    "SWEEP_AXES",
    "ComparisonTable",
    "ExperimentConfig",
    "ExperimentResult",
    "RateFit",
    "compare_methods",
    "config_from_dict",
    "fit_rate",
    "fit_rate_arrays",
    "from_yaml",
    "load_config",
    "run_experiment",
    "selftest",
    "sweep_experiment",
    "to_yaml",
    "write_summary",
    "FORMS",
    "A2GradConfig",
    "A2GradState",
    "ProjectionSpec",
    "StepInfo",
    "box",
    "init_state",
    "run",
    "step_three_sequence",
    "step_two_sequence",
    "NOISE_KINDS",
    "LogisticProblem",
    "NoiseModel",
    "QuadraticProblem",
    "finite_difference_check",
    "load_dataset_csv",
    "make_logistic_synthetic",
    "make_quadratic",
    "RunRecord",
    "read_csv",
    "records_equal",
    "write_csv",
    "SCHEMES",
    "DeltaEstimator",
    "ScalerState",
    "estimate_delta",
    "make_delta_estimator",
    "make_scaler",
    "update_exponential",
    "update_incremental",
    "update_qweighted",
    "update_scaler",
    "update_uniform",
    "ConditionViolation",
    "MomentumSchedule",
    "ScheduleStep",
    "ValidationReport",
    "step_at",
    "steps_array",
    "validate_conditions",
]
