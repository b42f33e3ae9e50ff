"""Delay schedules, discard logic, and the two network error schemes."""

import numpy as np
import pytest

from measchain.comm_network import (
    CnErrorConfig,
    HistoryCoverageError,
    HistorySeries,
    apply_cn,
    build_delay_schedule,
    schedule_from_latencies,
    scheme1_errors,
    scheme2_errors,
)
from measchain.distributions import GmmParams, LmmParams, gmm_total_moments

WIDE_LMM = LmmParams([0.6, 0.4], [-2.5, -0.5], [0.5, 0.8])


def brute_force_inversions(latencies, period):
    """Oracle: discards are exactly the arrival-order inversions."""
    arrivals = [k * period + lat for k, lat in enumerate(latencies)]
    return {k for k in range(len(arrivals) - 1) if arrivals[k + 1] - arrivals[k] < 0.0}


class TestDelaySchedule:
    def test_constant_latency_keeps_everything(self):
        params = LmmParams([1.0], [np.log(0.3)], [1e-15])
        sched = build_delay_schedule(params, 0.2, 500, np.random.default_rng(0))
        assert np.allclose(sched.buffer_limit[:-1], 0.2, atol=1e-12)
        assert sched.n_discarded == 0

    def test_spec_arithmetic_example(self):
        # latencies [0.5, 0.1] with S=0.2: b_0 = 0.2 + 0.1 - 0.5 = -0.2 < 0
        sched = schedule_from_latencies([0.5, 0.1], 0.2, np.random.default_rng(0))
        assert sched.buffer_limit[0] == pytest.approx(-0.2, abs=1e-15)
        assert not sched.retained[0]
        assert sched.retained[1]  # final sample kept with zero draw
        assert sched.buffer_draw[1] == 0.0

    def test_discards_match_arrival_inversion_oracle(self):
        sched = build_delay_schedule(WIDE_LMM, 0.05, 10_000, np.random.default_rng(42))
        oracle = brute_force_inversions(sched.latency.tolist(), 0.05)
        assert {int(k) for k in np.flatnonzero(~sched.retained)} == oracle
        assert sched.n_discarded > 0  # the configuration actually exercises discards

    def test_buffer_limit_matches_arrival_difference(self):
        sched = build_delay_schedule(WIDE_LMM, 0.05, 10_000, np.random.default_rng(42))
        arrival = sched.arrival_time
        assert np.max(np.abs(np.diff(arrival) - sched.buffer_limit[:-1])) < 1e-12

    def test_adjacent_retained_arrivals_increase(self):
        # the per-sample rule guarantees ordering between CONSECUTIVE
        # retained samples; a spike recovering over several periods can
        # still invert non-adjacent arrivals
        sched = build_delay_schedule(WIDE_LMM, 0.05, 5_000, np.random.default_rng(7))
        arrival = sched.arrival_time
        both_kept = sched.retained[:-1] & sched.retained[1:]
        assert np.all(np.diff(arrival)[both_kept] >= 0.0)

    def test_every_discard_has_an_inversion_with_successor(self):
        sched = build_delay_schedule(WIDE_LMM, 0.05, 5_000, np.random.default_rng(7))
        arrival = sched.arrival_time
        dropped = np.flatnonzero(~sched.retained)
        assert dropped.size > 0
        assert np.all(arrival[dropped + 1] < arrival[dropped])

    def test_buffer_bounds_and_delay_composition(self):
        sched = build_delay_schedule(WIDE_LMM, 0.1, 5_000, np.random.default_rng(3))
        kept = sched.retained.copy()
        kept[-1] = False
        assert np.all(sched.buffer_draw[kept] >= 0.0)
        assert np.all(sched.buffer_draw[kept] <= sched.buffer_limit[kept])
        assert np.array_equal(sched.total_delay, sched.latency + sched.buffer_draw)
        assert np.all(sched.total_delay >= sched.latency)

    def test_validation(self):
        with pytest.raises(ValueError):
            build_delay_schedule(WIDE_LMM, 0.0, 100, np.random.default_rng(0))
        with pytest.raises(ValueError):
            build_delay_schedule(WIDE_LMM, 0.1, 1, np.random.default_rng(0))
        with pytest.raises(ValueError):
            schedule_from_latencies([-0.1, 0.2], 0.1, np.random.default_rng(0))

    def test_deterministic(self):
        a = build_delay_schedule(WIDE_LMM, 0.1, 1000, np.random.default_rng(5))
        b = build_delay_schedule(WIDE_LMM, 0.1, 1000, np.random.default_rng(5))
        assert np.array_equal(a.latency, b.latency)
        assert np.array_equal(a.buffer_draw, b.buffer_draw)
        assert np.array_equal(a.retained, b.retained)


def ramp_history(t_end=2000.0, step=0.5, v_slope=1.0, p_slope=0.0, q_slope=0.0):
    t = np.arange(0.0, t_end, step)
    return HistorySeries(t=t, v=v_slope * t, p=p_slope * t + 3.0, q=q_slope * t - 1.0)


class TestScheme1:
    def test_zero_delay_zero_error(self):
        sched = schedule_from_latencies(np.zeros(50), 1.0, np.random.default_rng(0))
        # zero latency gives b_k = S > 0; force zero buffer draws too
        sched.buffer_draw[:] = 0.0
        sched.total_delay[:] = 0.0
        history = ramp_history(v_slope=2.0, p_slope=-1.0, q_slope=0.3)
        e_v, e_p, e_q = scheme1_errors(history, sched)
        assert np.all(e_v == 0.0)
        assert np.all(e_p == 0.0)
        assert np.all(e_q == 0.0)

    def test_constant_history_zero_error_any_delay(self):
        sched = build_delay_schedule(WIDE_LMM, 1.0, 200, np.random.default_rng(1))
        t = np.arange(0.0, 500.0, 0.25)
        history = HistorySeries(t=t, v=np.full_like(t, 1.05), p=np.full_like(t, 0.4),
                                q=np.full_like(t, -0.2))
        e_v, e_p, e_q = scheme1_errors(history, sched)
        assert np.allclose(e_v, 0.0, atol=1e-12)
        assert np.allclose(e_p, 0.0, atol=1e-12)
        assert np.allclose(e_q, 0.0, atol=1e-12)

    def test_ramp_history_yields_slope_times_delay(self):
        sched = schedule_from_latencies(np.full(100, 0.3), 1.0, np.random.default_rng(2))
        history = ramp_history()
        e_v, _, _ = scheme1_errors(history, sched)
        assert np.allclose(e_v, sched.total_delay, atol=1e-9)
        # with buffers zeroed the error is the bare 0.3 s latency
        sched.buffer_draw[:] = 0.0
        sched.total_delay = sched.latency + sched.buffer_draw
        e_v, _, _ = scheme1_errors(history, sched)
        assert np.allclose(e_v, 0.3, atol=1e-9)

    def test_time_offset_maps_onto_history_clock(self):
        sched = schedule_from_latencies(np.full(10, 0.25), 1.0, np.random.default_rng(3))
        sched.buffer_draw[:] = 0.0
        sched.total_delay = sched.latency.copy()
        history = ramp_history(v_slope=4.0)
        e_v, _, _ = scheme1_errors(history, sched, t_offset=100.0)
        assert np.allclose(e_v, 4.0 * 0.25, atol=1e-9)

    def test_insufficient_coverage_names_instant(self):
        sched = schedule_from_latencies(np.full(10, 5.0), 1.0, np.random.default_rng(0))
        history = ramp_history(t_end=8.0)
        with pytest.raises(HistoryCoverageError, match="does not cover instant"):
            scheme1_errors(history, sched)

    def test_nearest_interpolation_mode(self):
        sched = schedule_from_latencies(np.full(4, 0.2), 1.0, np.random.default_rng(0))
        sched.buffer_draw[:] = 0.0
        sched.total_delay = sched.latency.copy()
        t = np.arange(0.0, 10.0, 1.0)
        history = HistorySeries(t=t, v=t**2, p=t, q=t)
        e_v, _, _ = scheme1_errors(history, sched, interp="nearest")
        # delayed instants (k + 0.2) snap back to sample k
        assert np.allclose(e_v, 0.0, atol=1e-12)


class TestScheme2:
    CFG = CnErrorConfig(
        scheme="scheme2",
        v_gmm=GmmParams([0.5, 0.5], [-0.002, 0.002], [0.001, 0.001]),
        p_gmm=GmmParams([1.0], [0.001], [0.003]),
        q_gmm=GmmParams([0.3, 0.7], [0.0, -0.001], [0.002, 0.0005]),
    )

    def test_degenerate_mixtures_near_zero(self):
        cfg = CnErrorConfig(
            scheme="scheme2",
            v_gmm=GmmParams([1.0], [0.0], [1e-12]),
            p_gmm=GmmParams([1.0], [0.0], [1e-12]),
            q_gmm=GmmParams([1.0], [0.0], [1e-12]),
        )
        e_v, e_p, e_q = scheme2_errors(cfg, 1000, np.random.default_rng(0))
        for err in (e_v, e_p, e_q):
            assert np.all(np.abs(err) < 1e-9)

    def test_moments_match_mixture_analytics(self):
        e_v, e_p, e_q = scheme2_errors(self.CFG, 1_000_000, np.random.default_rng(6))
        for err, gmm in ((e_v, self.CFG.v_gmm), (e_p, self.CFG.p_gmm), (e_q, self.CFG.q_gmm)):
            mean, std = gmm_total_moments(gmm)
            se_mean = err.std() / np.sqrt(err.size)
            assert abs(err.mean() - mean) < 4 * se_mean
            assert abs(err.std() - std) / std < 0.01

    def test_deterministic(self):
        a = scheme2_errors(self.CFG, 1000, np.random.default_rng(9))
        b = scheme2_errors(self.CFG, 1000, np.random.default_rng(9))
        for x, y in zip(a, b):
            assert np.array_equal(x, y)

    def test_config_validation(self):
        with pytest.raises(ValueError, match="missing"):
            CnErrorConfig(scheme="scheme2", v_gmm=GmmParams([1.0], [0.0], [1.0]))
        with pytest.raises(ValueError, match="historical series"):
            CnErrorConfig(scheme="scheme1")
        with pytest.raises(ValueError, match="scheme"):
            CnErrorConfig(scheme="scheme3")


class TestApplyCn:
    def test_zero_errors_identity(self):
        v4, p4, q4 = apply_cn(1.0, 0.5, -0.2, 0.0, 0.0, 0.0)
        assert (v4, p4, q4) == (1.0, 0.5, -0.2)

    def test_addition_arithmetic(self):
        v4, _, _ = apply_cn(1.0, 0.0, 0.0, -0.003, 0.0, 0.0)
        assert v4 == pytest.approx(0.997, rel=1e-15)

    def test_composed_with_zero_delay_scheme1(self):
        sched = schedule_from_latencies(np.zeros(20), 1.0, np.random.default_rng(0))
        sched.buffer_draw[:] = 0.0
        sched.total_delay[:] = 0.0
        history = ramp_history(v_slope=3.0, p_slope=1.0, q_slope=-2.0)
        e_v, e_p, e_q = scheme1_errors(history, sched)
        v3 = np.linspace(0.9, 1.1, 20)
        v4, _, _ = apply_cn(v3, v3, v3, e_v, e_p, e_q)
        assert np.array_equal(v4, v3)
