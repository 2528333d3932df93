"""Momentum and step-size schedule (alpha_k, gamma_k, lambda_k), plus condition checks.

The default schedule is alpha_k = 2/(k+2), gamma_k = 2L/(k+1), for which the
aggregation weight lambda_k = 1/prod_{i=1..k}(1 - alpha_i) has the closed form
(k+1)(k+2)/2 and lambda_k * alpha_k * gamma_k is the constant 2L. Custom
schedules are supported for experimentation; their lambda is accumulated as a
compensated sum of log1p(-alpha_i) because the raw product drifts and
underflows at large k.

The two convergence conditions checked by `validate_conditions`:

  step_condition:    L * alpha_k <= gamma_k            for every k
  weight_condition:  lambda*alpha*gamma nonincreasing  in k
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

# Custom lambdas are running products; past this horizon the accumulated
# rounding is no longer negligible and the product form is refused.
MAX_CUSTOM_HORIZON = 10**6

# Relative slack for condition checks. The default schedule meets the weight
# condition with equality, so exact comparisons would flag float jitter.
_CONDITION_RTOL = 1e-9

STEP_CONDITION = "step_condition"
WEIGHT_CONDITION = "weight_condition"


@dataclass(frozen=True)
class MomentumSchedule:
    """Schedule family parameterized by the gradient-Lipschitz constant L.

    mode "default" emits the closed-form schedule above; mode "custom" takes
    per-k callables for alpha and gamma (alpha_0 may be 1, alpha_k for k >= 1
    must lie in (0, 1) so lambda stays finite).
    """

    lipschitz: float
    mode: str = "default"
    alpha_fn: Callable[[int], float] | None = None
    gamma_fn: Callable[[int], float] | None = None

    def __post_init__(self):
        if not (self.lipschitz > 0.0 and math.isfinite(self.lipschitz)):
            raise ConfigError(f"lipschitz must be positive and finite, got {self.lipschitz}")
        if self.mode not in ("default", "custom"):
            raise ConfigError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "custom" and (self.alpha_fn is None or self.gamma_fn is None):
            raise ConfigError("custom mode requires alpha_fn and gamma_fn")


@dataclass(frozen=True)
class ScheduleStep:
    k: int
    alpha: float
    gamma: float
    lam: float
    lambda_alpha: float


def _check_custom_alpha(alpha: float, k: int) -> None:
    ok = (0.0 < alpha <= 1.0) if k == 0 else (0.0 < alpha < 1.0)
    if not ok:
        rng = "(0, 1]" if k == 0 else "(0, 1)"
        raise ConfigError(f"custom alpha_{k} = {alpha} outside {rng}")


def step_at(schedule: MomentumSchedule, k: int) -> ScheduleStep:
    """Schedule values at iteration k (closed form for default mode).

    Custom mode recomputes the lambda product from scratch; use `steps_array`
    for whole-run tables.
    """
    if k < 0:
        raise ConfigError(f"iteration index must be >= 0, got {k}")
    if schedule.mode == "default":
        alpha = 2.0 / (k + 2.0)
        gamma = 2.0 * schedule.lipschitz / (k + 1.0)
        lam = 0.5 * (k + 1.0) * (k + 2.0)
        return ScheduleStep(k=k, alpha=alpha, gamma=gamma, lam=lam, lambda_alpha=lam * alpha)
    if k > MAX_CUSTOM_HORIZON:
        raise ConfigError(f"custom schedules support k <= {MAX_CUSTOM_HORIZON}, got {k}")
    # Neumaier-compensated sum of log1p(-alpha_i), i = 1..k; lambda = exp(-sum).
    total = 0.0
    comp = 0.0
    for i in range(1, k + 1):
        a_i = float(schedule.alpha_fn(i))
        _check_custom_alpha(a_i, i)
        term = math.log1p(-a_i)
        s = total + term
        if abs(total) >= abs(term):
            comp += (total - s) + term
        else:
            comp += (term - s) + total
        total = s
    alpha = float(schedule.alpha_fn(k))
    _check_custom_alpha(alpha, k)
    gamma = float(schedule.gamma_fn(k))
    if gamma <= 0.0:
        raise ConfigError(f"custom gamma_{k} = {gamma} must be positive")
    lam = math.exp(-(total + comp))
    return ScheduleStep(k=k, alpha=alpha, gamma=gamma, lam=lam, lambda_alpha=lam * alpha)


def steps_array(schedule: MomentumSchedule, K: int):
    """Vector form of the schedule for k = 0..K.

    Returns (alpha, gamma, lam, lambda_alpha) as float64 arrays of length K+1.
    """
    if K < 0:
        raise ConfigError(f"horizon must be >= 0, got {K}")
    if schedule.mode == "default":
        k = np.arange(K + 1, dtype=np.float64)
        alpha = 2.0 / (k + 2.0)
        gamma = 2.0 * schedule.lipschitz / (k + 1.0)
        lam = 0.5 * (k + 1.0) * (k + 2.0)
        return alpha, gamma, lam, lam * alpha
    if K > MAX_CUSTOM_HORIZON:
        raise ConfigError(f"custom schedules support K <= {MAX_CUSTOM_HORIZON}, got {K}")
    alpha = np.empty(K + 1)
    gamma = np.empty(K + 1)
    lam = np.empty(K + 1)
    total = 0.0
    comp = 0.0
    for k in range(K + 1):
        a_k = float(schedule.alpha_fn(k))
        _check_custom_alpha(a_k, k)
        g_k = float(schedule.gamma_fn(k))
        if g_k <= 0.0:
            raise ConfigError(f"custom gamma_{k} = {g_k} must be positive")
        if k >= 1:
            term = math.log1p(-a_k)
            s = total + term
            if abs(total) >= abs(term):
                comp += (total - s) + term
            else:
                comp += (term - s) + total
            total = s
        alpha[k] = a_k
        gamma[k] = g_k
        lam[k] = math.exp(-(total + comp))
    return alpha, gamma, lam, lam * alpha


@dataclass(frozen=True)
class ConditionViolation:
    k: int
    condition: str
    lhs: float
    rhs: float


@dataclass
class ValidationReport:
    horizon: int
    violations: list[ConditionViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_condition(self, condition: str) -> list[ConditionViolation]:
        return [v for v in self.violations if v.condition == condition]


def validate_conditions(schedule: MomentumSchedule, K: int) -> ValidationReport:
    """Report every k <= K violating either convergence condition.

    The weight condition compares consecutive lambda*alpha*gamma products; a
    violation at index k means the product rose from k-1 to k. Comparisons
    allow 1e-9 relative slack (the default schedule sits exactly on the
    equality case of the weight condition).
    """
    if K < 1:
        raise ConfigError(f"horizon must be >= 1, got {K}")
    alpha, gamma, _, lam_alpha = steps_array(schedule, K)
    report = ValidationReport(horizon=K)
    L = schedule.lipschitz
    for k in range(K + 1):
        lhs = L * alpha[k]
        rhs = gamma[k]
        if lhs > rhs * (1.0 + _CONDITION_RTOL):
            report.violations.append(ConditionViolation(k, STEP_CONDITION, lhs, rhs))
    weight = lam_alpha * gamma
    for k in range(1, K + 1):
        if weight[k] > weight[k - 1] * (1.0 + _CONDITION_RTOL):
            report.violations.append(
                ConditionViolation(k, WEIGHT_CONDITION, float(weight[k]), float(weight[k - 1]))
            )
    report.violations.sort(key=lambda v: (v.k, v.condition))
    return report
