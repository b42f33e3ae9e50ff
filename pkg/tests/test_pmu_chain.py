"""Filter coefficients, the phasor estimator, and the timing-error models."""

import cmath
import math

import mpmath as mp
import numpy as np
import pytest

from measchain.pmu_chain import (
    DEFAULT_FILTER_ORDER,
    FILTER_REFERENCE_FREQ,
    SQRT2,
    TimingErrorModel,
    UnsupportedFilterError,
    estimate_phasor,
    estimate_phasor_series,
    generate_gps_events,
    gps_loss_phase_error,
    make_filter,
    merge_events,
    off_nominal_error_frequency,
    run_pmu_chain,
    sampling_offsets,
    sampling_time_phase_error,
    synth_waveform,
)

SPEC_60 = make_filter(60, 60)


def brute_force_phasor(samples, center, spec):
    """Independent direct evaluation of the windowed estimator sum."""
    half = spec.order // 2
    dt = 1.0 / spec.sampling_freq
    omega0 = 2.0 * math.pi * spec.nominal_freq
    acc = 0.0 + 0.0j
    for k in range(-half, half + 1):
        n = center + k
        acc += samples[n] * spec.coefficients[k + half] * cmath.exp(-1j * n * dt * omega0)
    return math.sqrt(2.0) / spec.gain * acc


def mp_coefficient(k, ffr, fsamp, order):
    if k == 0:
        return mp.mpf(1)
    x = 2 * mp.pi * (2 * mp.mpf(str(ffr)) / fsamp) * k
    h = mp.mpf("0.54") + mp.mpf("0.46") * mp.cos(2 * mp.pi * k / order)
    return mp.sin(x) / x * h


class TestMakeFilter:
    def test_even_symmetry_and_center_tap(self):
        for f0, rates in FILTER_REFERENCE_FREQ.items():
            for rate in rates:
                spec = make_filter(rate, f0)
                assert np.array_equal(spec.coefficients, spec.coefficients[::-1])
                assert spec.coefficients[spec.half_order] == 1.0
                assert spec.gain > 0.0
                assert spec.order % 2 == 0

    def test_coefficients_match_high_precision_oracle(self):
        mp.mp.dps = 40
        spec = SPEC_60
        half = spec.half_order
        for k in range(-half, half + 1):
            want = float(mp_coefficient(k, 8.19, 960, 70))
            assert spec.coefficients[k + half] == pytest.approx(want, abs=1e-15)

    def test_frozen_w10_value(self):
        # independently computed with 50-digit arithmetic
        assert SPEC_60.coefficients[10 + 35] == pytest.approx(0.67728285510383484, abs=1e-15)

    def test_unknown_pair_lists_supported(self):
        with pytest.raises(UnsupportedFilterError, match="supported pairs"):
            make_filter(45, 60)
        with pytest.raises(UnsupportedFilterError, match="supported pairs"):
            make_filter(60, 55)

    def test_override_allows_unknown_pair(self):
        spec = make_filter(45, 60, order=80, filter_ref_freq=6.0)
        assert spec.order == 80
        assert spec.filter_ref_freq == 6.0

    def test_ref_freq_override_requires_order(self):
        with pytest.raises(UnsupportedFilterError, match="requires an explicit order"):
            make_filter(60, 60, filter_ref_freq=9.0)

    def test_default_sampling_is_16_per_cycle(self):
        assert make_filter(50, 50).sampling_freq == 800.0
        assert SPEC_60.sampling_freq == 960.0

    def test_reference_configuration_order(self):
        assert DEFAULT_FILTER_ORDER[60][60] == 70
        assert SPEC_60.order == 70

    def test_coefficient_table_roundtrip(self):
        table = SPEC_60.coefficient_table()
        lines = table.splitlines()
        assert lines[0] == "k,W(k)"
        assert len(lines) == SPEC_60.order + 2
        k, w = lines[1].split(",")
        assert int(k) == -35
        assert float(w) == SPEC_60.coefficients[0]


def unit_phasor_wave(spec, n, angle=0.0, mag=1.0, freq=None):
    freq = spec.nominal_freq if freq is None else freq
    t = np.arange(n) / spec.sampling_freq
    return SQRT2 * mag * np.cos(2.0 * math.pi * freq * t + angle)


class TestEstimator:
    def test_zero_samples_zero_phasor(self):
        assert estimate_phasor(np.zeros(200), 100, SPEC_60) == 0.0

    def test_nominal_accuracy(self):
        n = 960 * 2
        wave = unit_phasor_wave(SPEC_60, n, angle=0.0)
        ph = estimate_phasor(wave, 960, SPEC_60)
        assert abs(abs(ph) - 1.0) < 1e-3
        assert abs(math.degrees(cmath.phase(ph))) < 0.02

    def test_matches_brute_force_evaluation(self):
        rng = np.random.default_rng(0)
        samples = rng.normal(size=500)
        for center in (35, 120, 464):
            got = estimate_phasor(samples, center, SPEC_60)
            want = brute_force_phasor(samples, center, SPEC_60)
            assert abs(got - want) <= 1e-12 * max(abs(want), 1.0)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=400)
        y = rng.normal(size=400)
        a, b = 1.7, -0.4
        combined = estimate_phasor(a * x + b * y, 200, SPEC_60)
        separate = a * estimate_phasor(x, 200, SPEC_60) + b * estimate_phasor(y, 200, SPEC_60)
        assert abs(combined - separate) <= 1e-12 * max(abs(separate), 1.0)

    def test_doubling_amplitude_doubles_magnitude_exactly(self):
        wave = unit_phasor_wave(SPEC_60, 960)
        one = estimate_phasor(wave, 480, SPEC_60)
        two = estimate_phasor(2.0 * wave, 480, SPEC_60)
        assert two == 2.0 * one

    def test_window_overflow_raises(self):
        with pytest.raises(ValueError, match="exceeds"):
            estimate_phasor(np.zeros(100), 5, SPEC_60)
        with pytest.raises(ValueError, match="exceeds"):
            estimate_phasor(np.zeros(100), 95, SPEC_60)

    def test_series_matches_single_calls(self):
        # batched and single-center evaluation may take different BLAS
        # paths on the fallback backend, so compare to 1e-12 not bitwise
        wave = unit_phasor_wave(SPEC_60, 960, angle=0.3)
        centers = np.arange(48, 912, 16)
        series = estimate_phasor_series(wave, centers, SPEC_60)
        for j, c in enumerate(centers):
            single = estimate_phasor(wave, int(c), SPEC_60)
            assert abs(series[j] - single) <= 1e-12 * max(abs(single), 1.0)


class TestSynthWaveform:
    def test_sample_zero_is_amplitude_times_cos_angle(self):
        wave = synth_waveform(1.0, 0.0, 60.0, 960.0, 4)
        assert wave[0] == 1.0

    def test_matches_direct_cosine_without_timing(self):
        # independent evaluation; tolerance covers the ~1 ULP difference in
        # building the time grid (i*dt vs i/fs) amplified by phases ~1e2 rad
        n = 960
        t = np.arange(n) / 960.0
        wave = synth_waveform(0.9, 0.25, 60.0, 960.0, n, TimingErrorModel())
        assert np.allclose(wave, 0.9 * np.cos(2 * np.pi * 60.0 * t + 0.25), rtol=0, atol=1e-12)

    def test_constant_offset_is_a_time_shift(self):
        n = 960
        timing = TimingErrorModel(sampling_time_error=5e-6, pps_locked=False)
        # tau(i) = 5e-6 * i accumulates; compare against direct evaluation at
        # the shifted instants
        t = np.arange(n) / 960.0
        tau = 5e-6 * np.arange(n)
        wave = synth_waveform(1.0, 0.1, 60.0, 960.0, n, timing)
        expected = np.cos(2 * np.pi * 60.0 * (t + tau) + 0.1)
        assert np.allclose(wave, expected, rtol=0, atol=1e-9)

    def test_rejects_bad_frequency(self):
        with pytest.raises(ValueError):
            synth_waveform(1.0, 0.0, -60.0, 960.0, 10)


class TestScalarErrorFormulas:
    def test_sampling_time_zero(self):
        assert sampling_time_phase_error(0.0, 60.0) == 0.0

    def test_sampling_time_one_microsecond(self):
        assert sampling_time_phase_error(1e-6, 60.0) == pytest.approx(0.0216, rel=1e-12)

    def test_sampling_time_sign_preserved(self):
        assert sampling_time_phase_error(-1e-6, 60.0) == pytest.approx(-0.0216, rel=1e-12)

    def test_off_nominal_zero_at_nominal(self):
        assert off_nominal_error_frequency(60.0, 60.0) == 0.0

    def test_off_nominal_below(self):
        assert off_nominal_error_frequency(60.0, 59.5) == pytest.approx(1.0, rel=1e-12)

    def test_off_nominal_symmetric(self):
        assert off_nominal_error_frequency(60.0, 60.5) == off_nominal_error_frequency(60.0, 59.5)

    def test_gps_loss_zero_elapsed(self):
        assert gps_loss_phase_error(0.15, 0.0, 60.0) == 0.0

    def test_gps_loss_ten_minute_drift(self):
        # 0.15 us/s over 10 minutes at 60 Hz -> 1.94 degrees
        err_deg = math.degrees(gps_loss_phase_error(0.15, 600.0, 60.0))
        assert err_deg == pytest.approx(1.944, rel=1e-12)
        assert abs(err_deg - 1.94) / 1.94 < 0.005

    def test_gps_loss_linear_accumulation(self):
        one = gps_loss_phase_error(0.15, 137.0, 60.0)
        two = gps_loss_phase_error(0.15, 274.0, 60.0)
        assert two == pytest.approx(2.0 * one, rel=1e-12)


class TestGpsEvents:
    def test_zero_rate_gives_empty_list(self):
        assert generate_gps_events(0.0, 0.13, 86400.0, np.random.default_rng(0)) == []

    def test_poisson_mean_count(self):
        rng = np.random.default_rng(10)
        counts = [len(generate_gps_events(5.0, 0.13, 86400.0, rng)) for _ in range(1000)]
        se = math.sqrt(5.0 / 1000.0)
        assert abs(np.mean(counts) - 5.0) < 3 * se

    def test_durations_follow_recovery_distribution(self):
        rng = np.random.default_rng(11)
        events = generate_gps_events(43.2, 0.13, 2_000_000.0, rng)  # ~1000 sparse events
        durations = np.array([d for _, d in events])
        se = (1.0 / 0.13) / math.sqrt(durations.size)
        assert abs(durations.mean() - 1.0 / 0.13) < 5 * se

    def test_merge_overlaps(self):
        merged = merge_events([(0.0, 5.0), (3.0, 4.0), (10.0, 1.0)])
        assert merged == [(0.0, 7.0), (10.0, 1.0)]

    def test_events_sorted_and_disjoint(self):
        events = generate_gps_events(2000.0, 0.13, 86400.0, np.random.default_rng(12))
        for (s1, d1), (s2, _) in zip(events, events[1:]):
            assert s2 > s1 + d1


class TestSamplingOffsets:
    def test_sawtooth_resets_each_second(self):
        timing = TimingErrorModel(sampling_time_error=1e-8, pps_locked=True)
        tau = sampling_offsets(timing, 960 * 5 + 1, 960.0)
        boundaries = np.arange(0, tau.size, 960)
        assert np.all(tau[boundaries] == 0.0)
        # strictly monotone between resets
        within = np.diff(tau)
        assert np.all(within[np.arange(tau.size - 1) % 960 != 959] > 0.0)

    def test_unlocked_accumulates_without_reset(self):
        timing = TimingErrorModel(sampling_time_error=1e-8, pps_locked=False)
        tau = sampling_offsets(timing, 2000, 960.0)
        assert np.array_equal(tau, 1e-8 * np.arange(2000))

    def test_loss_event_suppresses_resets(self):
        timing = TimingErrorModel(
            sampling_time_error=1e-8, pps_locked=True, loss_events=[(1.5, 2.0)]
        )
        tau = sampling_offsets(timing, 960 * 5 + 1, 960.0)
        assert tau[960] == 0.0          # boundary at 1.0 s: before the event
        assert tau[1920] > 0.0          # 2.0 s: inside the loss, no reset
        assert tau[2880] > tau[1920]    # 3.0 s: still inside, keeps growing
        assert tau[3840] == 0.0         # 4.0 s: after recovery at 3.5 s

    def test_negative_duration_rejected(self):
        with pytest.raises(ValueError):
            TimingErrorModel(loss_events=[(0.0, -1.0)])


class TestRunPmuChain:
    def test_null_chain_matches_stage2_phasors(self):
        n = 960 * 2 + 1
        frames = run_pmu_chain(
            np.full(n, 1.0), np.full(n, 0.3), np.full(n, 0.5), np.full(n, -0.2), SPEC_60
        )
        assert frames.n_frames > 0
        assert np.all(np.abs(np.abs(frames.v_phasor) - 1.0) < 1e-3)
        assert np.all(np.abs(np.degrees(np.angle(frames.v_phasor)) - np.degrees(0.3)) < 0.02)
        assert np.all(np.abs(np.abs(frames.i_phasor) - 0.5) < 0.5 * 1e-3)
        assert np.all(np.abs(np.degrees(np.angle(frames.i_phasor)) - np.degrees(-0.2)) < 0.02)
        assert np.all(frames.gps_locked)
        assert np.all(frames.injected_angle_error == 0.0)

    def test_report_times_are_frame_multiples(self):
        frames = run_pmu_chain(np.ones(960 * 3), 0.0, np.ones(960 * 3), 0.0, SPEC_60)
        ticks = frames.report_time * SPEC_60.reporting_rate
        assert np.allclose(ticks, np.round(ticks), atol=1e-9)

    @pytest.mark.parametrize("offset", [0.1, 0.5, 1.0])
    def test_off_nominal_error_oscillates_at_twice_the_offset(self, offset):
        f_sig = 60.0 - offset
        n = int(20 * 960)
        frames = run_pmu_chain(
            np.ones(n), 0.2, np.ones(n), 0.0, SPEC_60, signal_freq=f_sig
        )
        truth_angle = 2 * np.pi * (f_sig - 60.0) * frames.report_time + 0.2
        err = np.angle(frames.v_phasor * np.exp(-1j * truth_angle))
        err -= err.mean()
        spectrum = np.abs(np.fft.rfft(err))
        freqs = np.fft.rfftfreq(err.size, d=1.0 / SPEC_60.reporting_rate)
        peak = freqs[1:][np.argmax(spectrum[1:])]
        bin_width = freqs[1] - freqs[0]
        assert abs(peak - off_nominal_error_frequency(60.0, f_sig)) <= bin_width

    def test_gps_loss_ramps_linearly(self):
        n = 960 * 10 + 1
        timing = TimingErrorModel(gps_drift_rate=0.15, loss_events=[(0.0, 1e9)])
        frames = run_pmu_chain(np.ones(n), 0.0, np.ones(n), 0.0, SPEC_60, timing=timing)
        injected_deg = np.degrees(frames.injected_angle_error)
        slopes = np.diff(injected_deg) / np.diff(frames.report_time)
        assert np.allclose(slopes, 0.00324, rtol=1e-9)
        assert not np.any(frames.gps_locked)
        # the reported angle carries the same ramp
        angles = np.degrees(np.angle(frames.v_phasor))
        drift = angles - angles[0]
        expected = injected_deg - injected_deg[0]
        assert np.allclose(drift, expected, atol=5e-3)

    def test_too_short_series_raises(self):
        with pytest.raises(ValueError, match="too short"):
            run_pmu_chain(np.ones(30), 0.0, np.ones(30), 0.0, SPEC_60)
