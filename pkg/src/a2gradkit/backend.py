"""Kernel backend selection: numba-compiled loops or the numpy fallback.

The environment variable A2GRADKIT_BACKEND picks the backend:

  auto (default)  numba when importable, else numpy
  numba           require numba, error if missing
  numpy           always the vectorized fallback

Selection is re-read on every `get_kernels()` call, so tests can flip the
variable; a single run resolves the backend once up front. The choice changes
speed, not results: both backends order their floating-point work identically.
"""

import os

from . import kernels_numpy
from .errors import ConfigError

ENV_VAR = "A2GRADKIT_BACKEND"

_numba_module = None
_numba_error: str | None = None


def _try_numba():
    global _numba_module, _numba_error
    if _numba_module is None and _numba_error is None:
        try:
            from . import kernels_numba

            _numba_module = kernels_numba
        except ImportError as exc:
            _numba_error = str(exc)
    return _numba_module


def available_backends() -> dict[str, bool]:
    return {"numpy": True, "numba": _try_numba() is not None}


def active_backend() -> str:
    """Resolved backend name for the current environment setting."""
    choice = os.environ.get(ENV_VAR, "auto").strip().lower() or "auto"
    if choice not in ("auto", "numba", "numpy"):
        raise ConfigError(f"{ENV_VAR} must be auto, numba or numpy, got {choice!r}")
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if _try_numba() is None:
            raise ConfigError(f"{ENV_VAR}=numba but numba is unavailable: {_numba_error}")
        return "numba"
    return "numba" if _try_numba() is not None else "numpy"


def get_kernels():
    """The kernel module for the active backend."""
    if active_backend() == "numba":
        return _numba_module
    return kernels_numpy


def warmup() -> str:
    """Force JIT compilation of the active backend's kernels on tiny inputs.

    Returns the backend name. Calling this before timed sections keeps
    compilation out of the measurements; the numpy backend is a no-op.
    """
    import numpy as np

    kern = get_kernels()
    d = 2
    x = np.zeros(d)
    buf = np.zeros(d)
    g = np.ones(d)
    ref = np.zeros(d)
    v = np.zeros(d)
    vtilde = np.zeros(d)
    lo = np.full(d, -np.inf)
    hi = np.full(d, np.inf)
    stats = np.zeros(2)
    kern.mix(x, g, 0.5, buf)
    kern.update_running_mean(buf, g, 0.0)
    for scheme in (kern.SCHEME_NONE, kern.SCHEME_QFAMILY, kern.SCHEME_EXPONENTIAL):
        kern.step_core(x.copy(), buf.copy(), g, ref, v.copy(), vtilde.copy(),
                       1.0, 1.0, 0.5, 0.0, scheme, 0.9, 0.0, lo, hi, stats)
        kern.step_core_two_seq(x.copy(), buf.copy(), g, ref, v.copy(), vtilde.copy(),
                               1.0, 1.0, 1.0, 0.5, 0.0, scheme, 0.9, 0.0, stats)
    return active_backend()
