"""Foundational numeric types, the stochastic-gradient oracle contract, and seeded RNG.

Everything downstream works on dense float64 vectors. Oracles declare their
capabilities explicitly (see `StochasticOracle.capabilities`) so callers can
skip features an oracle does not support instead of guessing from attributes.
"""

from dataclasses import dataclass
from typing import Protocol, TypeAlias, runtime_checkable

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, ContractError

ParamVector: TypeAlias = NDArray[np.float64]

# Capability names an oracle may declare.
CAP_EXACT_GRADIENT = "exact_gradient"
CAP_OBJECTIVE = "objective"
CAP_OPTIMUM_VALUE = "optimum_value"
CAP_OPTIMUM_POINT = "optimum_point"


def param_vector(values) -> ParamVector:
    """Build a finite float64 vector, validating shape and finiteness."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ContractError(f"parameter vector must be 1-D with d >= 1, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ContractError("parameter vector contains NaN or Inf")
    return x


@dataclass(frozen=True)
class GradientSample:
    """A stochastic gradient draw plus an opaque identifier of the draw.

    sample_id is -1 when the oracle has no meaningful notion of a draw index
    (e.g. pure additive-noise oracles); minibatch oracles report the draw
    counter so runs can be audited.
    """

    gradient: ParamVector
    sample_id: int = -1


@runtime_checkable
class StochasticOracle(Protocol):
    """Problem interface the optimizers consume.

    Only `dimension`, `capabilities` and `stochastic_gradient` are mandatory.
    The optional methods must exist when the corresponding capability is
    declared; callers check `capabilities` rather than hasattr.
    """

    dimension: int
    capabilities: frozenset[str]

    def stochastic_gradient(self, x: ParamVector, rng: np.random.Generator) -> GradientSample: ...

    def exact_gradient(self, x: ParamVector) -> ParamVector: ...

    def objective(self, x: ParamVector) -> float: ...

    def optimum_value(self) -> float: ...

    def optimum_point(self) -> ParamVector: ...


SeededRng: TypeAlias = np.random.Generator


def make_rng(seed: int) -> SeededRng:
    """Seeded generator with a fixed algorithm (PCG64) for cross-platform streams.

    Identical seeds give identical sample streams; this is the only RNG
    constructor the package uses, so reproducibility is a single choke point.
    """
    return np.random.Generator(np.random.PCG64(int(seed)))


def elementwise_div_shift(g: ParamVector, gamma: float, beta: float, h: ParamVector) -> ParamVector:
    """Per-coordinate step g_i / (gamma + beta * h_i).

    gamma > 0 keeps the denominator positive even at h = 0, which is why no
    epsilon floor is needed anywhere in the adaptive step.
    """
    if gamma <= 0.0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    if g.shape != h.shape:
        raise ContractError(f"dimension mismatch: gradient {g.shape} vs scaling {h.shape}")
    return g / (gamma + beta * h)


def running_mean_update(mean: ParamVector, sample: ParamVector, k: int) -> ParamVector:
    """Mean of the first k+1 samples, updated incrementally.

    Uses mean + (sample - mean)/(k+1). k = 0 returns a copy of the sample so
    the first mean is exact (the incremental form could be off by one ulp).
    """
    if mean.shape != sample.shape:
        raise ContractError(f"dimension mismatch: mean {mean.shape} vs sample {sample.shape}")
    if k == 0:
        return sample.copy()
    return mean + (sample - mean) / (k + 1.0)


def has_capability(oracle: StochasticOracle, cap: str) -> bool:
    return cap in oracle.capabilities
