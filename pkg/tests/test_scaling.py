"""Scaler state machines: hand-checked traces, closed forms, the monotone
growth property, and delta estimation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from a2gradkit.core import GradientSample, make_rng
from a2gradkit.errors import CapabilityError, ConfigError, ContractError
from a2gradkit.problems import make_quadratic
from a2gradkit.scaling import (
    SCHEMES,
    estimate_delta,
    make_delta_estimator,
    make_scaler,
    update_exponential,
    update_incremental,
    update_qweighted,
    update_scaler,
    update_uniform,
)


def run_stream(scheme, deltas, rho=0.9, q=None):
    """Feed a (T, d) delta stream through a fresh scaler; returns (T, d) h."""
    deltas = np.atleast_2d(np.asarray(deltas, dtype=np.float64))
    state = make_scaler(scheme, deltas.shape[1], rho=rho, q=q)
    return np.array([update_scaler(state, d) for d in deltas])


class TestUniform:
    def test_hand_values(self):
        h = run_stream("uniform", [[3.0], [4.0]])
        assert_allclose(h, [[3.0], [5.0]])  # sqrt(9), sqrt(9+16)

    def test_zero_deltas_keep_h_zero(self):
        h = run_stream("uniform", np.zeros((50, 3)))
        assert np.all(h == 0.0)

    def test_sum_of_squares_closed_form(self, rng):
        deltas = rng.standard_normal((200, 5))
        h = run_stream("uniform", deltas)
        closed = np.sqrt(np.cumsum(deltas**2, axis=0))
        assert_allclose(h, closed, rtol=1e-10)

    def test_order_invariance_of_final_h(self, rng):
        deltas = rng.standard_normal((64, 4))
        h_fwd = run_stream("uniform", deltas)[-1]
        h_rev = run_stream("uniform", deltas[::-1])[-1]
        assert_allclose(h_fwd, h_rev, rtol=1e-12)

    def test_wrong_scheme_guard(self):
        state = make_scaler("incremental", 2)
        with pytest.raises(ContractError):
            update_uniform(state, np.zeros(2))


class TestIncremental:
    def test_hand_values(self):
        # k=0: shrink 0, v=4, h=2; k=1: v=1*4/4+0=1, h=1; then delta=sqrt(3).
        h = run_stream("incremental", [[2.0], [0.0]])
        assert_allclose(h, [[2.0], [1.0]])
        h = run_stream("incremental", [[2.0], [np.sqrt(3.0)]])
        assert_allclose(h[-1], [2.0], rtol=1e-15)

    def test_closed_form(self, rng):
        deltas = rng.standard_normal((10_000, 3))
        h = run_stream("incremental", deltas)
        tau = np.arange(1, 10_001, dtype=np.float64)[:, None]
        closed = np.sqrt(np.cumsum((tau * deltas) ** 2, axis=0)) / tau
        assert_allclose(h, closed, rtol=1e-10)


class TestExponential:
    def test_first_step_uses_raw_delta_square(self):
        h = run_stream("exponential", [[2.0]], rho=0.5)
        assert_allclose(h, [[2.0]])  # v_tilde_0 = 4, h = sqrt(1*4)

    def test_max_clamp_holds_h_up(self):
        # Second sample of zero would halve v_tilde; the clamp keeps v at 4.
        h = run_stream("exponential", [[2.0], [0.0]], rho=0.5)
        assert_allclose(h[-1], [np.sqrt(8.0)])  # sqrt(2 * max(2, 4))

    def test_growing_tilde_passes_through(self):
        h = run_stream("exponential", [[0.0], [2.0]], rho=0.5)
        assert_allclose(h, [[0.0], [2.0]])  # v_tilde_1 = 2, h = sqrt(2*2)

    def test_zero_stream_stays_zero(self):
        h = run_stream("exponential", np.zeros((20, 2)), rho=0.9)
        assert np.all(h == 0.0)

    @pytest.mark.parametrize("bad_rho", [0.0, 1.0, -0.5, 1.5])
    def test_rho_range(self, bad_rho):
        with pytest.raises(ConfigError):
            make_scaler("exponential", 2, rho=bad_rho)


class TestQWeighted:
    def test_q_one_hand_value(self):
        # Stream [1], [1]: v_1 = (1/2)*1 + 1 = 3/2, h = sqrt(3/2).
        h = run_stream("qweighted", [[1.0], [1.0]], q=1.0)
        assert_allclose(h[-1], [np.sqrt(1.5)], rtol=1e-15)

    @pytest.mark.parametrize("q, named", [(0.0, "uniform"), (2.0, "incremental")])
    def test_endpoints_bit_compatible_with_named_schemes(self, q, named, rng):
        deltas = rng.standard_normal((500, 4))
        h_q = run_stream("qweighted", deltas, q=q)
        h_named = run_stream(named, deltas)
        assert np.array_equal(h_q, h_named)

    def test_closed_form_general_q(self, rng):
        q = 1.3
        deltas = rng.standard_normal((2000, 2))
        h = run_stream("qweighted", deltas, q=q)
        tau = np.arange(1, 2001, dtype=np.float64)[:, None]
        closed = np.sqrt(np.cumsum(tau**q * deltas**2, axis=0)) / tau ** (q / 2.0)
        assert_allclose(h, closed, rtol=1e-10)

    @pytest.mark.parametrize("bad_q", [-0.1, 2.1])
    def test_q_range(self, bad_q):
        with pytest.raises(ConfigError):
            make_scaler("qweighted", 2, q=bad_q)
        state = make_scaler("qweighted", 2, q=1.0)
        with pytest.raises(ConfigError):
            update_qweighted(state, np.zeros(2), q=bad_q)


class TestMonotoneGrowth:
    """(k+1) * h_k must never decrease, coordinate-wise, for any stream."""

    @pytest.mark.parametrize("scheme", ["uniform", "incremental", "exponential"])
    def test_random_streams(self, scheme):
        rng = make_rng(99)
        for trial in range(20):
            deltas = rng.standard_normal((1000, 3)) * rng.uniform(0.1, 10.0)
            h = run_stream(scheme, deltas, rho=0.9)
            weighted = (np.arange(1, 1001, dtype=np.float64)[:, None]) * h
            diffs = np.diff(weighted, axis=0)
            scale = np.maximum(weighted[:-1], 1.0)
            assert np.all(diffs >= -1e-12 * scale)

    @settings(max_examples=60, deadline=None)
    @given(
        scheme=st.sampled_from(["uniform", "incremental", "exponential"]),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        spike=st.floats(min_value=0.0, max_value=1e6),
    )
    def test_streams_with_spikes(self, scheme, seed, spike):
        rng = make_rng(seed)
        deltas = rng.standard_normal((100, 2))
        deltas[rng.integers(0, 100)] = spike
        h = run_stream(scheme, deltas, rho=0.5)
        weighted = (np.arange(1, 101, dtype=np.float64)[:, None]) * h
        diffs = np.diff(weighted, axis=0)
        assert np.all(diffs >= -1e-12 * np.maximum(weighted[:-1], 1.0))


class TestSchemeNone:
    def test_always_zero(self, rng):
        h = run_stream("none", rng.standard_normal((10, 3)))
        assert np.all(h == 0.0)

    def test_unknown_scheme(self):
        with pytest.raises(ConfigError):
            make_scaler("adaptive", 2)
        assert "adaptive" not in SCHEMES


class TestDeltaEstimation:
    def test_heuristic_first_delta_is_zero(self):
        est = make_delta_estimator("heuristic", 1)
        d = estimate_delta(est, GradientSample(np.array([4.0])), np.zeros(1), oracle=None)
        assert_allclose(d, [0.0])

    def test_heuristic_second_delta(self):
        # Samples [2], [4]: mean after two is 3, so delta_1 = 1.
        est = make_delta_estimator("heuristic", 1)
        estimate_delta(est, GradientSample(np.array([2.0])), np.zeros(1), oracle=None)
        d = estimate_delta(est, GradientSample(np.array([4.0])), np.zeros(1), oracle=None)
        assert_allclose(d, [1.0])

    def test_heuristic_mean_matches_direct_average(self, rng):
        est = make_delta_estimator("heuristic", 4)
        samples = rng.standard_normal((30, 4))
        for s in samples:
            estimate_delta(est, GradientSample(s), np.zeros(4), oracle=None)
        assert_allclose(est.g_tilde, samples.mean(axis=0), rtol=1e-12)

    def test_exact_mode_subtracts_true_gradient(self):
        quad = make_quadratic(3, 5.0, seed=0)
        est = make_delta_estimator("exact", 3)
        x = np.array([0.5, -1.0, 2.0])
        g_true = quad.exact_gradient(x)
        sample = GradientSample(g_true + 2.0)
        d = estimate_delta(est, sample, x, quad)
        assert_allclose(d, np.full(3, 2.0), rtol=1e-14)

    def test_exact_mode_needs_capability(self):
        class GradientOnly:
            dimension = 1
            capabilities = frozenset()

            def stochastic_gradient(self, x, rng):
                return GradientSample(np.zeros(1))

        est = make_delta_estimator("exact", 1)
        with pytest.raises(CapabilityError):
            estimate_delta(est, GradientSample(np.zeros(1)), np.zeros(1), GradientOnly())

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            make_delta_estimator("kalman", 1)


class TestDimensionGuards:
    @pytest.mark.parametrize("scheme", ["uniform", "incremental", "exponential", "none"])
    def test_mismatched_delta_rejected(self, scheme):
        state = make_scaler(scheme, 3, rho=0.9)
        with pytest.raises(ContractError):
            update_scaler(state, np.zeros(2))

    def test_exponential_update_guard(self):
        state = make_scaler("uniform", 2)
        with pytest.raises(ContractError):
            update_exponential(state, np.zeros(2))

    def test_incremental_update_guard(self):
        state = make_scaler("exponential", 2, rho=0.5)
        with pytest.raises(ContractError):
            update_incremental(state, np.zeros(2))
