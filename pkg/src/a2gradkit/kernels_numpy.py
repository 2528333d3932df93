"""Vectorized numpy implementations of the per-iteration hot kernels.

`kernels_numba` provides the same functions compiled with numba; the backend
module picks one of the two. Both backends perform the floating-point
operations in the same order so traces agree to roundoff.

Scheme codes collapse the named scaler schemes for the kernels: uniform,
incremental and qweighted are all SCHEME_QFAMILY with q = 0, 2, or the
configured value.
"""

import numpy as np

SCHEME_NONE = 0
SCHEME_QFAMILY = 1
SCHEME_EXPONENTIAL = 2


def mix(a, b, alpha, out):
    """out = (1 - alpha)*a + alpha*b (convex combination)."""
    np.multiply(a, 1.0 - alpha, out=out)
    out += alpha * b


def update_running_mean(mean, sample, kf):
    """In-place running mean over k+1 samples; kf is float(k)."""
    if kf == 0.0:
        np.copyto(mean, sample)
    else:
        mean += (sample - mean) / (kf + 1.0)


def _scaling_vector(g, ref, v, vtilde, kf, scheme, rho, q):
    de = g - ref
    if scheme == SCHEME_QFAMILY:
        shrink = (kf / (kf + 1.0)) ** q
        v *= shrink
        v += de * de
        return np.sqrt(v)
    if scheme == SCHEME_EXPONENTIAL:
        d2 = de * de
        if kf == 0.0:
            np.copyto(vtilde, d2)
        else:
            vtilde *= rho
            vtilde += (1.0 - rho) * d2
        np.maximum(vtilde, v, out=v)
        return np.sqrt((kf + 1.0) * v)
    return np.zeros_like(v)


def step_core(x, xbar, g, ref, v, vtilde, gamma, beta, alpha, kf, scheme, rho, q, lo, hi, h_stats):
    """One fused three-sequence update after the gradient draw.

    Computes delta = g - ref, advances the scaler state (v, vtilde), steps and
    clips x in place, and folds x into xbar. Writes (h_min, h_max) into
    h_stats. Returns 1 if x picked up a non-finite coordinate, else 0.
    """
    h = _scaling_vector(g, ref, v, vtilde, kf, scheme, rho, q)
    x -= g / (gamma + beta * h)
    np.clip(x, lo, hi, out=x)
    xbar *= 1.0 - alpha
    xbar += alpha * x
    h_stats[0] = h.min()
    h_stats[1] = h.max()
    return 0 if np.isfinite(x).all() else 1


def step_core_two_seq(x, y, g, ref, v, vtilde, gamma, beta, alpha_k, alpha_next, kf, scheme, rho, q, h_stats):
    """One fused two-sequence update (unconstrained only).

    x_{k+1} = x_k - s,  y_{k+1} = (1-a')y_k + a' x_{k+1} - (1-a') a_k s
    with s = g/(gamma + beta*h), a_k = alpha_k, a' = alpha_next.
    """
    h = _scaling_vector(g, ref, v, vtilde, kf, scheme, rho, q)
    s = g / (gamma + beta * h)
    x -= s
    y *= 1.0 - alpha_next
    y += alpha_next * x
    y -= ((1.0 - alpha_next) * alpha_k) * s
    h_stats[0] = h.min()
    h_stats[1] = h.max()
    ok = np.isfinite(x).all() and np.isfinite(y).all()
    return 0 if ok else 1
