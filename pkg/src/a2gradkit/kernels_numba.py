"""Numba-compiled twins of the kernels in `kernels_numpy`.

Importing this module requires numba; the backend module treats ImportError
as "backend unavailable". No fastmath: the loops keep IEEE semantics so both
backends produce matching traces.
"""

import numpy as np
from numba import njit

from .kernels_numpy import SCHEME_EXPONENTIAL, SCHEME_NONE, SCHEME_QFAMILY

__all__ = [
    "SCHEME_NONE",
    "SCHEME_QFAMILY",
    "SCHEME_EXPONENTIAL",
    "mix",
    "update_running_mean",
    "step_core",
    "step_core_two_seq",
]


@njit(cache=True)
def mix(a, b, alpha, out):
    for i in range(a.shape[0]):
        out[i] = (1.0 - alpha) * a[i] + alpha * b[i]


@njit(cache=True)
def update_running_mean(mean, sample, kf):
    if kf == 0.0:
        for i in range(mean.shape[0]):
            mean[i] = sample[i]
    else:
        for i in range(mean.shape[0]):
            mean[i] = mean[i] + (sample[i] - mean[i]) / (kf + 1.0)


@njit(cache=True)
def step_core(x, xbar, g, ref, v, vtilde, gamma, beta, alpha, kf, scheme, rho, q, lo, hi, h_stats):
    d = x.shape[0]
    shrink = 0.0
    if scheme == SCHEME_QFAMILY:
        shrink = (kf / (kf + 1.0)) ** q
    hmin = np.inf
    hmax = -np.inf
    bad = 0
    for i in range(d):
        de = g[i] - ref[i]
        if scheme == SCHEME_QFAMILY:
            vi = shrink * v[i] + de * de
            v[i] = vi
            h = np.sqrt(vi)
        elif scheme == SCHEME_EXPONENTIAL:
            if kf == 0.0:
                vt = de * de
            else:
                vt = rho * vtilde[i] + (1.0 - rho) * (de * de)
            vtilde[i] = vt
            vi = v[i]
            if vt > vi:
                vi = vt
                v[i] = vt
            h = np.sqrt((kf + 1.0) * vi)
        else:
            h = 0.0
        if h < hmin:
            hmin = h
        if h > hmax:
            hmax = h
        xn = x[i] - g[i] / (gamma + beta * h)
        if xn < lo[i]:
            xn = lo[i]
        elif xn > hi[i]:
            xn = hi[i]
        x[i] = xn
        xbar[i] = (1.0 - alpha) * xbar[i] + alpha * xn
        if not np.isfinite(xn):
            bad = 1
    h_stats[0] = hmin
    h_stats[1] = hmax
    return bad


@njit(cache=True)
def step_core_two_seq(x, y, g, ref, v, vtilde, gamma, beta, alpha_k, alpha_next, kf, scheme, rho, q, h_stats):
    d = x.shape[0]
    shrink = 0.0
    if scheme == SCHEME_QFAMILY:
        shrink = (kf / (kf + 1.0)) ** q
    hmin = np.inf
    hmax = -np.inf
    bad = 0
    carry = (1.0 - alpha_next) * alpha_k
    for i in range(d):
        de = g[i] - ref[i]
        if scheme == SCHEME_QFAMILY:
            vi = shrink * v[i] + de * de
            v[i] = vi
            h = np.sqrt(vi)
        elif scheme == SCHEME_EXPONENTIAL:
            if kf == 0.0:
                vt = de * de
            else:
                vt = rho * vtilde[i] + (1.0 - rho) * (de * de)
            vtilde[i] = vt
            vi = v[i]
            if vt > vi:
                vi = vt
                v[i] = vt
            h = np.sqrt((kf + 1.0) * vi)
        else:
            h = 0.0
        if h < hmin:
            hmin = h
        if h > hmax:
            hmax = h
        s = g[i] / (gamma + beta * h)
        xn = x[i] - s
        x[i] = xn
        yn = (1.0 - alpha_next) * y[i] + alpha_next * xn - carry * s
        y[i] = yn
        if not (np.isfinite(xn) and np.isfinite(yn)):
            bad = 1
    h_stats[0] = hmin
    h_stats[1] = hmax
    return bad
