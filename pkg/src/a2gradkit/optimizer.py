"""The adaptive accelerated iteration in both its forms.

Three-sequence form (the analysis form):

    under_k  = (1 - alpha_k) xbar_k + alpha_k x_k      extrapolation point
    G_k      = stochastic gradient at under_k
    x_{k+1}  = Pi_X( x_k - G_k / (gamma_k + beta h_k) )
    xbar_{k+1} = (1 - alpha_k) xbar_k + alpha_k x_{k+1}

Two-sequence form (the practical rewrite, unconstrained only): with
s_k = G_k / (gamma_k + beta h_k) and y_k = under_k,

    x_{k+1} = x_k - s_k
    y_{k+1} = (1 - alpha_{k+1}) y_k + alpha_{k+1} x_{k+1}
              - (1 - alpha_{k+1}) alpha_k s_k

The gradient is always taken at the extrapolation point (y_k in the second
form), so the scaler sees the same delta stream in both forms and the y trace
matches the under_x trace coordinate for coordinate.

`step_three_sequence` / `step_two_sequence` are the readable single-step
reference; `run` drives the same math through the selected kernel backend for
long horizons and returns the full metric table.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .backend import get_kernels
from .core import (
    CAP_EXACT_GRADIENT,
    CAP_OBJECTIVE,
    CAP_OPTIMUM_VALUE,
    ParamVector,
    StochasticOracle,
    elementwise_div_shift,
    has_capability,
    make_rng,
)
from .errors import CapabilityError, ConfigError, ContractError, RunAbort
from .record import RunRecord
from .scaling import (
    DeltaEstimator,
    ScalerState,
    estimate_delta,
    make_delta_estimator,
    make_scaler,
    update_scaler,
)
from .schedule import MomentumSchedule, step_at, steps_array

FORMS = ("three_sequence", "two_sequence")


@dataclass(frozen=True, eq=False)
class ProjectionSpec:
    """Feasible set: unconstrained, or a coordinate box [lower, upper]."""

    kind: str = "unconstrained"
    lower: ParamVector | None = None
    upper: ParamVector | None = None

    def __post_init__(self):
        if self.kind not in ("unconstrained", "box"):
            raise ConfigError(f"unknown projection kind {self.kind!r}")
        if self.kind == "box":
            if self.lower is None or self.upper is None:
                raise ConfigError("box projection requires lower and upper bounds")
            lo = np.asarray(self.lower, dtype=np.float64)
            hi = np.asarray(self.upper, dtype=np.float64)
            if lo.shape != hi.shape:
                raise ConfigError("box bounds must share a shape")
            if np.any(lo > hi):
                raise ConfigError("box requires lower <= upper coordinate-wise")
            object.__setattr__(self, "lower", lo)
            object.__setattr__(self, "upper", hi)

    def bounds(self, dim: int) -> tuple[ParamVector, ParamVector]:
        """(lo, hi) arrays for clipping; +-inf when unconstrained."""
        if self.kind == "unconstrained":
            return np.full(dim, -np.inf), np.full(dim, np.inf)
        if self.lower.shape != (dim,):
            raise ContractError(f"box bounds have dim {self.lower.shape[0]}, problem has {dim}")
        return self.lower, self.upper

    def project(self, x: ParamVector) -> ParamVector:
        if self.kind == "unconstrained":
            return x
        return np.clip(x, self.lower, self.upper)


def box(lower, upper) -> ProjectionSpec:
    return ProjectionSpec(kind="box", lower=np.asarray(lower, dtype=np.float64),
                          upper=np.asarray(upper, dtype=np.float64))


@dataclass(frozen=True)
class A2GradConfig:
    """Hyperparameters of one adaptive accelerated run.

    beta = 0 switches adaptivity off (pure accelerated descent); scheme
    "none" does the same by holding h at zero. Both are legal and used for
    ablation. A custom schedule may replace the default one built from
    `lipschitz`.
    """

    lipschitz: float
    beta: float = 10.0
    scheme: str = "uniform"
    rho: float = 0.9
    q: float | None = None
    delta_mode: str = "heuristic"
    projection: ProjectionSpec = field(default_factory=ProjectionSpec)
    form: str = "three_sequence"
    schedule: MomentumSchedule | None = None

    def __post_init__(self):
        if not self.beta >= 0.0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.form not in FORMS:
            raise ConfigError(f"unknown form {self.form!r}, expected one of {FORMS}")
        if self.form == "two_sequence" and self.projection.kind != "unconstrained":
            raise ConfigError(
                "the two-sequence form assumes an unconstrained step; "
                "use the three-sequence form with projections"
            )
        # Fail fast on bad scaler parameters; the state itself is built later.
        make_scaler(self.scheme, 1, rho=self.rho, q=self.q)
        make_delta_estimator(self.delta_mode, 1)
        if self.schedule is None:
            object.__setattr__(self, "schedule", MomentumSchedule(lipschitz=self.lipschitz))


@dataclass
class A2GradState:
    """Mutable per-run state; exactly one of xbar/y is active per the form."""

    form: str
    x: ParamVector
    xbar: ParamVector | None
    y: ParamVector | None
    k: int
    scaler: ScalerState
    delta_est: DeltaEstimator


def init_state(config: A2GradConfig, x0: ParamVector) -> A2GradState:
    """Fresh state at x0; the aggregated iterate starts at x0 as well.

    alpha_0 = 1 under the default schedule, so the starting value of the
    aggregated iterate never influences the trajectory.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise ContractError(f"x0 must be 1-D, got shape {x0.shape}")
    if not np.all(np.isfinite(x0)):
        raise ContractError("x0 contains NaN or Inf")
    d = x0.shape[0]
    three = config.form == "three_sequence"
    return A2GradState(
        form=config.form,
        x=x0.copy(),
        xbar=x0.copy() if three else None,
        y=None if three else x0.copy(),
        k=0,
        scaler=make_scaler(config.scheme, d, rho=config.rho, q=config.q),
        delta_est=make_delta_estimator(config.delta_mode, d),
    )


@dataclass(frozen=True)
class StepInfo:
    """Metrics of one completed step; eval_point is where the gradient was taken."""

    k: int
    alpha: float
    gamma: float
    h_min: float
    h_max: float
    eval_point: ParamVector


def _check_finite(x: ParamVector, k: int, label: str) -> None:
    if not np.all(np.isfinite(x)):
        raise RunAbort(f"non-finite {label} at iteration {k}", iteration=k)


def step_three_sequence(
    state: A2GradState,
    config: A2GradConfig,
    oracle: StochasticOracle,
    rng: np.random.Generator,
) -> StepInfo:
    if state.form != "three_sequence":
        raise ContractError("state was initialized for the two-sequence form")
    k = state.k
    sched = step_at(config.schedule, k)
    under = (1.0 - sched.alpha) * state.xbar + sched.alpha * state.x
    sample = oracle.stochastic_gradient(under, rng)
    delta = estimate_delta(state.delta_est, sample, under, oracle)
    h = update_scaler(state.scaler, delta)
    x_new = state.x - elementwise_div_shift(sample.gradient, sched.gamma, config.beta, h)
    x_new = config.projection.project(x_new)
    _check_finite(x_new, k, "iterate")
    xbar_new = (1.0 - sched.alpha) * state.xbar + sched.alpha * x_new
    state.x = x_new
    state.xbar = xbar_new
    state.k = k + 1
    return StepInfo(k=k, alpha=sched.alpha, gamma=sched.gamma,
                    h_min=float(h.min()), h_max=float(h.max()), eval_point=under)


def step_two_sequence(
    state: A2GradState,
    config: A2GradConfig,
    oracle: StochasticOracle,
    rng: np.random.Generator,
) -> StepInfo:
    if state.form != "two_sequence":
        raise ContractError("state was initialized for the three-sequence form")
    k = state.k
    sched = step_at(config.schedule, k)
    sched_next = step_at(config.schedule, k + 1)
    y = state.y
    sample = oracle.stochastic_gradient(y, rng)
    delta = estimate_delta(state.delta_est, sample, y, oracle)
    h = update_scaler(state.scaler, delta)
    s = elementwise_div_shift(sample.gradient, sched.gamma, config.beta, h)
    x_new = state.x - s
    a_next = sched_next.alpha
    y_new = (1.0 - a_next) * y + a_next * x_new - (1.0 - a_next) * sched.alpha * s
    _check_finite(x_new, k, "iterate")
    _check_finite(y_new, k, "evaluation point")
    state.x = x_new
    state.y = y_new
    state.k = k + 1
    return StepInfo(k=k, alpha=sched.alpha, gamma=sched.gamma,
                    h_min=float(h.min()), h_max=float(h.max()), eval_point=y)


def _scheme_code(kern, config: A2GradConfig) -> tuple[int, float]:
    if config.scheme == "none":
        return kern.SCHEME_NONE, 0.0
    if config.scheme == "exponential":
        return kern.SCHEME_EXPONENTIAL, 0.0
    q = {"uniform": 0.0, "incremental": 2.0}.get(config.scheme, config.q)
    return kern.SCHEME_QFAMILY, float(q)


def run(
    config: A2GradConfig,
    oracle: StochasticOracle,
    K: int,
    seed: int,
    x0: ParamVector | None = None,
    objective_every: int = 1,
) -> RunRecord:
    """Execute K+1 steps (k = 0..K) and return the per-step metric table.

    Row k logs the step that produced the state after k+1 updates: the
    reported point is xbar_{k+1} (three-sequence) or y_{k+1} (two-sequence),
    matching the quantity the convergence bound controls at horizon k.

    objective_every controls how often the objective columns are filled:
    1 = every row, m > 1 = rows with k % m == 0 plus the final row,
    0 = final row only. Skipped rows carry NaN. Non-finite iterates raise
    RunAbort; the rows completed so far ride along as `exc.partial`.
    """
    if K < 1:
        raise ConfigError(f"horizon must be >= 1, got {K}")
    if objective_every < 0:
        raise ConfigError(f"objective_every must be >= 0, got {objective_every}")
    d = oracle.dimension
    if x0 is None:
        x0 = np.zeros(d)
    state = init_state(config, x0)
    if state.x.shape[0] != d:
        raise ContractError(f"x0 has dim {state.x.shape[0]}, oracle has {d}")
    rng = make_rng(seed)
    kern = get_kernels()
    scheme, q = _scheme_code(kern, config)
    alpha, gamma, _, _ = steps_array(config.schedule, K + 1)
    lo, hi = config.projection.bounds(d)
    two_seq = config.form == "two_sequence"

    if config.delta_mode == "exact" and not has_capability(oracle, CAP_EXACT_GRADIENT):
        raise CapabilityError("exact delta mode requires an oracle with exact gradients")

    know_f = has_capability(oracle, CAP_OBJECTIVE)
    know_star = know_f and has_capability(oracle, CAP_OPTIMUM_VALUE)
    f_star = oracle.optimum_value() if know_star else np.nan

    rec = RunRecord.empty(K + 1)
    x = state.x
    xbar = state.xbar
    y = state.y
    v = state.scaler.v
    vtilde = state.scaler.v_tilde if state.scaler.v_tilde is not None else np.zeros(1)
    gtilde = state.delta_est.g_tilde
    exact = config.delta_mode == "exact"
    beta = config.beta
    rho = config.rho
    under = np.empty(d)
    h_stats = np.zeros(2)

    def fill_row(k: int, f_rep: float, f_ev: float, wall: int) -> None:
        rec.k[k] = k
        rec.f_reported[k] = f_rep
        rec.f_eval[k] = f_ev
        rec.suboptimality[k] = f_rep - f_star if know_star else np.nan
        rec.h_inf[k] = h_stats[1]
        rec.alpha[k] = alpha[k]
        rec.gamma[k] = gamma[k]
        rec.step_min[k] = 1.0 / (gamma[k] + beta * h_stats[1])
        rec.step_max[k] = 1.0 / (gamma[k] + beta * h_stats[0])
        rec.wall_nanos[k] = wall

    for k in range(K + 1):
        t0 = time.perf_counter_ns()
        kf = float(k)
        if two_seq:
            sample = oracle.stochastic_gradient(y, rng)
            g = sample.gradient
            if exact:
                ref = oracle.exact_gradient(y)
            else:
                kern.update_running_mean(gtilde, g, kf)
                ref = gtilde
            bad = kern.step_core_two_seq(x, y, g, ref, v, vtilde, gamma[k], beta,
                                         alpha[k], alpha[k + 1], kf, scheme, rho, q, h_stats)
        else:
            kern.mix(xbar, x, alpha[k], under)
            sample = oracle.stochastic_gradient(under, rng)
            g = sample.gradient
            if exact:
                ref = oracle.exact_gradient(under)
            else:
                kern.update_running_mean(gtilde, g, kf)
                ref = gtilde
            bad = kern.step_core(x, xbar, g, ref, v, vtilde, gamma[k], beta,
                                 alpha[k], kf, scheme, rho, q, lo, hi, h_stats)
        if bad:
            err = RunAbort(f"non-finite iterate at iteration {k}", iteration=k)
            err.partial = rec.truncated(k)
            raise err
        want_f = know_f and (
            k == K or (objective_every > 0 and k % objective_every == 0)
        )
        if want_f:
            if two_seq:
                f_rep = oracle.objective(y)
                f_ev = f_rep
            else:
                f_rep = oracle.objective(xbar)
                kern.mix(xbar, x, alpha[k + 1], under)
                f_ev = oracle.objective(under)
        else:
            f_rep = np.nan
            f_ev = np.nan
        fill_row(k, f_rep, f_ev, time.perf_counter_ns() - t0)

    state.k = K + 1
    state.scaler.k = K + 1
    state.delta_est.k = K + 1
    return rec
