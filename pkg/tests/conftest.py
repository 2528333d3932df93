"""Shared fixtures. Kernel JIT compilation happens once, up front, so the
acceptance criteria's runtime budgets measure the algorithms and not the
compiler."""

import numpy as np
import pytest

from a2gradkit.backend import warmup


@pytest.fixture(scope="session", autouse=True)
def compiled_kernels():
    return warmup()


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(1234))
