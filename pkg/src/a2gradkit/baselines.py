"""Reference optimizers for comparison: SGD, AdaGrad, Adam, AMSGrad.

All four instantiate the generic adaptive template x_{k+1} = x_k - lr_k *
m_k / sqrt(v_k): SGD holds v at one, AdaGrad accumulates v += G^2, Adam keeps
exponential moving averages of both moments, AMSGrad additionally clamps the
second moment to its running max. An eps floor guards the division because
v_0 can be zero; the adaptive accelerated method needs no such floor since
its divisor gamma_k is always positive.

Adam and AMSGrad details (bias correction, eps placement) follow the common
reference formulations of their original papers; they are comparison
baselines, not contributions of this package.
"""

import time
from dataclasses import dataclass, field

import numpy as np

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
)
from .errors import ConfigError, ContractError, RunAbort
from .optimizer import ProjectionSpec, StepInfo, box
from .record import RunRecord

METHODS = ("sgd", "adagrad", "adam", "amsgrad")


@dataclass(frozen=True)
class BaselineConfig:
    """Hyperparameters for one baseline run.

    rate_policy "constant" uses lr at every step; "inverse_sqrt" uses
    lr/sqrt(k+1). second_moment "sum" (adam/amsgrad only) replaces the
    exponential average by a plain sum v += G^2, which together with
    bias_correction=False reduces Adam to AdaGrad exactly.
    """

    method: str
    learning_rate: float
    rate_policy: str = "constant"
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    bias_correction: bool = True
    second_moment: str = "ema"
    projection: ProjectionSpec = field(default_factory=ProjectionSpec)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if not self.learning_rate > 0.0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.rate_policy not in ("constant", "inverse_sqrt"):
            raise ConfigError(f"unknown rate_policy {self.rate_policy!r}")
        if self.method != "sgd" and not self.eps > 0.0:
            raise ConfigError("eps must be positive for methods dividing by sqrt(v)")
        if not 0.0 <= self.beta1 < 1.0:
            raise ConfigError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ConfigError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if self.second_moment not in ("ema", "sum"):
            raise ConfigError(f"unknown second_moment {self.second_moment!r}")


@dataclass
class BaselineState:
    x: ParamVector
    v: ParamVector
    m: ParamVector
    v_hat: ParamVector
    k: int = 0


def init_baseline_state(config: BaselineConfig, x0: ParamVector) -> BaselineState:
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1:
        raise ContractError(f"x0 must be 1-D, got shape {x0.shape}")
    d = x0.shape[0]
    return BaselineState(x=x0.copy(), v=np.zeros(d), m=np.zeros(d), v_hat=np.zeros(d))


def _rate_at(config: BaselineConfig, k: int) -> float:
    if config.rate_policy == "constant":
        return config.learning_rate
    return config.learning_rate / np.sqrt(k + 1.0)


def baseline_step(
    state: BaselineState,
    config: BaselineConfig,
    oracle: StochasticOracle,
    rng: np.random.Generator,
) -> StepInfo:
    k = state.k
    lr = _rate_at(config, k)
    sample = oracle.stochastic_gradient(state.x, rng)
    g = sample.gradient
    method = config.method
    if method == "sgd":
        x_new = state.x - lr * g
        h = np.zeros_like(g)
        denom = 1.0
        step_lo = step_hi = lr
    else:
        if method == "adagrad":
            state.v += g * g
            num = g
            v_eff = state.v
        else:
            state.m *= config.beta1
            state.m += (1.0 - config.beta1) * g
            if config.second_moment == "sum":
                state.v += g * g
            else:
                state.v *= config.beta2
                state.v += (1.0 - config.beta2) * (g * g)
            num = state.m
            if config.bias_correction:
                num = state.m / (1.0 - config.beta1 ** (k + 1))
            if method == "amsgrad":
                np.maximum(state.v_hat, state.v, out=state.v_hat)
                v_eff = state.v_hat
            else:
                v_eff = state.v
                if config.bias_correction and config.second_moment == "ema":
                    v_eff = state.v / (1.0 - config.beta2 ** (k + 1))
        h = np.sqrt(v_eff)
        denom = h + config.eps
        x_new = state.x - lr * (num / denom)
        step_lo = lr / float(denom.max())
        step_hi = lr / float(denom.min())
    x_new = config.projection.project(x_new)
    if not np.all(np.isfinite(x_new)):
        raise RunAbort(f"non-finite iterate at iteration {k}", iteration=k)
    eval_point = state.x
    state.x = x_new
    state.k = k + 1
    return StepInfo(k=k, alpha=np.nan, gamma=np.nan,
                    h_min=float(h.min()), h_max=float(h.max()), eval_point=eval_point)


def run_baseline(
    config: BaselineConfig,
    oracle: StochasticOracle,
    K: int,
    seed: int,
    x0: ParamVector | None = None,
    objective_every: int = 1,
) -> RunRecord:
    """K+1 baseline steps with the same record contract as the adaptive run.

    Row k reports f(x_{k+1}); alpha and gamma are NaN (no momentum schedule).
    """
    if K < 1:
        raise ConfigError(f"horizon must be >= 1, got {K}")
    if objective_every < 0:
        raise ConfigError(f"objective_every must be >= 0, got {objective_every}")
    d = oracle.dimension
    if x0 is None:
        x0 = np.zeros(d)
    state = init_baseline_state(config, x0)
    if state.x.shape[0] != d:
        raise ContractError(f"x0 has dim {state.x.shape[0]}, oracle has {d}")
    rng = make_rng(seed)
    know_f = has_capability(oracle, CAP_OBJECTIVE)
    know_star = know_f and has_capability(oracle, CAP_OPTIMUM_VALUE)
    f_star = oracle.optimum_value() if know_star else np.nan
    rec = RunRecord.empty(K + 1)
    for k in range(K + 1):
        t0 = time.perf_counter_ns()
        lr = _rate_at(config, k)
        try:
            info = baseline_step(state, config, oracle, rng)
        except RunAbort as err:
            err.partial = rec.truncated(k)
            raise
        want_f = know_f and (k == K or (objective_every > 0 and k % objective_every == 0))
        f_rep = oracle.objective(state.x) if want_f else np.nan
        rec.k[k] = k
        rec.f_reported[k] = f_rep
        rec.f_eval[k] = f_rep
        rec.suboptimality[k] = f_rep - f_star if know_star else np.nan
        rec.h_inf[k] = info.h_max
        rec.alpha[k] = np.nan
        rec.gamma[k] = np.nan
        if config.method == "sgd":
            rec.step_min[k] = lr
            rec.step_max[k] = lr
        else:
            rec.step_min[k] = lr / (info.h_max + config.eps)
            rec.step_max[k] = lr / (info.h_min + config.eps)
        rec.wall_nanos[k] = time.perf_counter_ns() - t0
    return rec


class PeriodicCounterexample:
    """1-D online problem with a period-3 gradient stream: one large positive
    gradient (`big`), then two of -1. The average gradient (big - 2)/3 is
    positive for big > 2, so the average objective over the box [-1, 1] is
    minimized at the corner x* = -1.

    This is the standard construction on which Adam provably fails to
    converge; constants and the Adam hyperparameters used against it
    (beta1 = 0, beta2 = 1/(1+big^2), lr_k = lr/sqrt(k+1), no bias correction)
    are imported from Reddi, Kale & Kumar, "On the Convergence of Adam and
    Beyond" (ICLR 2018).

    The oracle is stateful: a call counter fixes the position in the period,
    and sample_id reports it. Use one fresh instance per run, or reset().
    """

    dimension = 1
    capabilities = frozenset(
        {CAP_EXACT_GRADIENT, CAP_OBJECTIVE, CAP_OPTIMUM_VALUE, CAP_OPTIMUM_POINT}
    )

    def __init__(self, big: float = 5.0):
        if not big > 2.0:
            raise ConfigError(f"big must exceed 2 so the drift points at +1, got {big}")
        self.big = float(big)
        self.counter = 0

    def reset(self) -> None:
        """Rewind the periodic stream to its first element."""
        self.counter = 0

    def stochastic_gradient(self, x: ParamVector, rng: np.random.Generator) -> GradientSample:
        g = self.big if self.counter % 3 == 0 else -1.0
        sample_id = self.counter
        self.counter += 1
        return GradientSample(gradient=np.array([g]), sample_id=sample_id)

    def exact_gradient(self, x: ParamVector) -> ParamVector:
        return np.array([(self.big - 2.0) / 3.0])

    def objective(self, x: ParamVector) -> float:
        return float((self.big - 2.0) / 3.0 * x[0])

    def optimum_value(self) -> float:
        return -(self.big - 2.0) / 3.0

    def optimum_point(self) -> ParamVector:
        return np.array([-1.0])

    def default_projection(self) -> ProjectionSpec:
        return box([-1.0], [1.0])


def make_periodic_counterexample(big: float = 5.0) -> PeriodicCounterexample:
    """Fresh counterexample oracle; see PeriodicCounterexample for the construction."""
    return PeriodicCounterexample(big=big)


def reference_adam_for_counterexample(oracle: PeriodicCounterexample, lr: float = 0.5) -> BaselineConfig:
    """Adam configured exactly as in the non-convergence construction."""
    return BaselineConfig(
        method="adam",
        learning_rate=lr,
        rate_policy="inverse_sqrt",
        beta1=0.0,
        beta2=1.0 / (1.0 + oracle.big**2),
        bias_correction=False,
        projection=oracle.default_projection(),
    )
