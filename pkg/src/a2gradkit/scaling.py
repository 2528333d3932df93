"""Per-coordinate adaptive scaling state machines and gradient-error estimation.

Three named schemes produce the scaling vector h_k from the stream of gradient
errors delta_k:

  uniform:      v_k = v_{k-1} + delta_k^2,                  h_k = sqrt(v_k)
  incremental:  v_k = (k/(k+1))^2 v_{k-1} + delta_k^2,      h_k = sqrt(v_k)
  exponential:  vt_k = delta_0^2 at k=0, else rho*vt_{k-1} + (1-rho)*delta_k^2
                v_k = max(vt_k, v_{k-1}),                   h_k = sqrt((k+1) v_k)

uniform and incremental are the q = 0 and q = 2 members of one q-weighted
family, v_k = (k/(k+1))^q v_{k-1} + delta_k^2, whose closed form is
h_k = (1/(k+1)^{q/2}) * sqrt(sum_{tau<=k} (tau+1)^q delta_tau^2). All three
q-family entry points share one code path, so q=0 and q=2 traces are
bit-identical with the named schemes by construction.

The exponential scheme's max clamp plus the explicit sqrt(k+1) weight are what
make (k+1)*h_k nondecreasing, the monotonicity every scheme must satisfy; a
plain exponential average (Adam-style) does not have it.
"""

from dataclasses import dataclass

import numpy as np

from .core import (
    CAP_EXACT_GRADIENT,
    GradientSample,
    ParamVector,
    StochasticOracle,
    has_capability,
    running_mean_update,
)
from .errors import CapabilityError, ConfigError, ContractError

SCHEMES = ("none", "uniform", "incremental", "exponential", "qweighted")


@dataclass
class ScalerState:
    """Accumulator state for one run; single-owner mutable.

    q is the effective exponent for q-family schemes (0.0 for uniform, 2.0
    for incremental) and NaN otherwise. v_tilde exists only for the
    exponential scheme.
    """

    scheme: str
    v: ParamVector
    v_tilde: ParamVector | None
    rho: float
    q: float
    k: int = 0


def make_scaler(scheme: str, dim: int, rho: float = 0.9, q: float | None = None) -> ScalerState:
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scaler scheme {scheme!r}, expected one of {SCHEMES}")
    if dim < 1:
        raise ConfigError(f"dimension must be >= 1, got {dim}")
    v_tilde = None
    q_eff = float("nan")
    if scheme == "uniform":
        q_eff = 0.0
    elif scheme == "incremental":
        q_eff = 2.0
    elif scheme == "qweighted":
        if q is None:
            raise ConfigError("qweighted scheme requires q")
        q_eff = float(q)
        if not 0.0 <= q_eff <= 2.0:
            raise ConfigError(f"q must lie in [0, 2], got {q}")
    elif scheme == "exponential":
        if not 0.0 < rho < 1.0:
            raise ConfigError(f"rho must lie in (0, 1), got {rho}")
        v_tilde = np.zeros(dim)
    return ScalerState(scheme=scheme, v=np.zeros(dim), v_tilde=v_tilde, rho=float(rho), q=q_eff)


def _check_delta(state: ScalerState, delta: ParamVector) -> None:
    if delta.shape != state.v.shape:
        raise ContractError(f"dimension mismatch: delta {delta.shape} vs state {state.v.shape}")


def _qfamily_update(state: ScalerState, delta: ParamVector, q: float) -> ParamVector:
    # (k/(k+1))**q with float q everywhere; 0.0**0.0 == 1.0 covers k=0, q=0.
    shrink = (state.k / (state.k + 1.0)) ** q
    state.v *= shrink
    state.v += delta * delta
    state.k += 1
    return np.sqrt(state.v)


def update_uniform(state: ScalerState, delta: ParamVector) -> ParamVector:
    if state.scheme != "uniform":
        raise ContractError(f"update_uniform on scheme {state.scheme!r}")
    _check_delta(state, delta)
    return _qfamily_update(state, delta, 0.0)


def update_incremental(state: ScalerState, delta: ParamVector) -> ParamVector:
    if state.scheme != "incremental":
        raise ContractError(f"update_incremental on scheme {state.scheme!r}")
    _check_delta(state, delta)
    return _qfamily_update(state, delta, 2.0)


def update_qweighted(state: ScalerState, delta: ParamVector, q: float | None = None) -> ParamVector:
    """q-weighted update; q defaults to the value baked into the state."""
    if state.scheme != "qweighted":
        raise ContractError(f"update_qweighted on scheme {state.scheme!r}")
    _check_delta(state, delta)
    q_eff = state.q if q is None else float(q)
    if not 0.0 <= q_eff <= 2.0:
        raise ConfigError(f"q must lie in [0, 2], got {q_eff}")
    return _qfamily_update(state, delta, q_eff)


def update_exponential(state: ScalerState, delta: ParamVector) -> ParamVector:
    if state.scheme != "exponential":
        raise ContractError(f"update_exponential on scheme {state.scheme!r}")
    _check_delta(state, delta)
    d2 = delta * delta
    if state.k == 0:
        np.copyto(state.v_tilde, d2)
    else:
        state.v_tilde *= state.rho
        state.v_tilde += (1.0 - state.rho) * d2
    np.maximum(state.v_tilde, state.v, out=state.v)
    state.k += 1
    return np.sqrt(state.k * state.v)


def update_scaler(state: ScalerState, delta: ParamVector) -> ParamVector:
    """Dispatch on the state's scheme; scheme "none" always returns zeros."""
    if state.scheme == "none":
        _check_delta(state, delta)
        state.k += 1
        return np.zeros_like(state.v)
    if state.scheme == "uniform":
        return update_uniform(state, delta)
    if state.scheme == "incremental":
        return update_incremental(state, delta)
    if state.scheme == "qweighted":
        return update_qweighted(state, delta)
    return update_exponential(state, delta)


@dataclass
class DeltaEstimator:
    """Estimates the gradient error delta_k feeding the scaler.

    heuristic mode keeps a running mean g~ of the stochastic gradients and
    reports delta = G - g~, updating the mean with the current sample FIRST
    (so delta_0 = 0; the mean includes the newest draw). exact mode asks the
    oracle for the true gradient at the evaluation point.
    """

    mode: str
    g_tilde: ParamVector | None = None
    k: int = 0


def make_delta_estimator(mode: str, dim: int) -> DeltaEstimator:
    if mode not in ("heuristic", "exact"):
        raise ConfigError(f"unknown delta mode {mode!r}, expected 'heuristic' or 'exact'")
    g_tilde = np.zeros(dim) if mode == "heuristic" else None
    return DeltaEstimator(mode=mode, g_tilde=g_tilde)


def estimate_delta(
    est: DeltaEstimator,
    G: GradientSample,
    x: ParamVector,
    oracle: StochasticOracle,
) -> ParamVector:
    if est.mode == "heuristic":
        est.g_tilde = running_mean_update(est.g_tilde, G.gradient, est.k)
        est.k += 1
        return G.gradient - est.g_tilde
    if not has_capability(oracle, CAP_EXACT_GRADIENT):
        raise CapabilityError("exact delta mode requires an oracle with exact gradients")
    est.k += 1
    return G.gradient - oracle.exact_gradient(x)
