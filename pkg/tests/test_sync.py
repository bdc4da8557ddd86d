import numpy as np
import pytest

from wlanradar.airlink import NoiseClutterSpec, Target, synthesize_radar_rx
from wlanradar.bench import Scenario
from wlanradar.dsp import IqStream, RrcSpec, matched_filter, pulse_shape, symbol_sample
from wlanradar.frame import FrameLayout, assemble_frame, build_preamble
from wlanradar.sync import (
    detect_frame_start,
    estimate_channel_cef,
    estimate_symbol_timing,
    fine_timing_cef_phase,
    fine_timing_preamble,
    fine_timing_stf,
    preamble_sync,
    stf_autocorr_metric,
)

W = 1.76e9
TS = 1 / W
RRC = RrcSpec()
Q = RRC.oversample


def _noisy_frame_symbols(delay: int, scnr_db: float, rng, k: int = 4352,
                         h0: complex = 1.0) -> np.ndarray:
    """Symbol-rate received frame at integer delay: the discrete post-MF model."""
    frame = assemble_frame(FrameLayout(k=k, header_len=0), rng)
    sigma = np.sqrt(1.0 / 10 ** (scnr_db / 10) / 2)
    n = delay + k + 64
    y = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    y[delay : delay + k] += h0 * frame
    return y


class TestSymbolTiming:
    def test_zero_delay(self):
        frame = assemble_frame(FrameLayout(k=4352, header_len=0), seed=0)
        rx = matched_filter(pulse_shape(frame, RRC, W), RRC, W)
        st = estimate_symbol_timing(rx, RRC, W)
        assert st.confident
        assert st.phase == 0
        assert st.frac_of_ts == 0.0

    def test_quarter_symbol_delay(self):
        frame = assemble_frame(FrameLayout(k=4352, header_len=0), seed=1)
        rx = matched_filter(pulse_shape(frame, RRC, W, delay=0.25 * TS), RRC, W)
        st = estimate_symbol_timing(rx, RRC, W)
        assert st.confident
        assert abs(st.frac_of_ts - 0.25) <= 1 / (2 * Q) + 1e-12

    def test_half_symbol_wraps_negative(self):
        frame = assemble_frame(FrameLayout(k=4352, header_len=0), seed=2)
        rx = matched_filter(pulse_shape(frame, RRC, W, delay=0.5 * TS), RRC, W)
        st = estimate_symbol_timing(rx, RRC, W)
        assert st.frac_of_ts in (-0.5, 0.5 - 1 / Q)
        assert -0.5 <= st.frac_of_ts < 0.5

    def test_noise_only_flagged(self):
        rng = np.random.default_rng(3)
        noise = (rng.standard_normal(80_000) + 1j * rng.standard_normal(80_000))
        st = estimate_symbol_timing(IqStream(noise, W * Q), RRC, W)
        assert not st.confident
        assert st.frac_of_ts == 0.0


class TestFrameDetect:
    def test_metric_bounded_by_one(self):
        rng = np.random.default_rng(4)
        y = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
        r1 = stf_autocorr_metric(y)
        assert r1.max() <= 1.0 + 1e-12

    def test_noiseless_frame_at_offset(self):
        rng = np.random.default_rng(5)
        y = _noisy_frame_symbols(600, 80.0, rng)
        est = detect_frame_start(y)
        assert est is not None
        assert 600 <= est < 600 + 3 * 128

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        y = _noisy_frame_symbols(600, 10.0, rng)
        a = detect_frame_start(y)
        b = detect_frame_start(7.3 * y)
        assert a == b

    def test_noise_only_rarely_detects(self):
        rng = np.random.default_rng(7)
        false_hits = 0
        trials = 1000
        for _ in range(trials):
            y = (rng.standard_normal(1500) + 1j * rng.standard_normal(1500))
            if detect_frame_start(y) is not None:
                false_hits += 1
        assert false_hits <= trials * 0.01

    def test_bad_threshold_rejected(self):
        with pytest.raises(ValueError):
            detect_frame_start(np.zeros(600, complex), chi2_stf=1.5)


class TestFineTiming:
    def test_noiseless_exact(self):
        rng = np.random.default_rng(8)
        y = _noisy_frame_symbols(587, 80.0, rng)
        assert fine_timing_stf(y, (587 - 384, 587 + 384)) == 587
        idx, peak = fine_timing_preamble(y, (587 - 384, 587 + 384))
        assert idx == 587
        assert abs(peak - 1.0) < 1e-2

    def test_0db_within_one_sample(self):
        rng = np.random.default_rng(9)
        hits = 0
        trials = 1000
        for _ in range(trials):
            y = _noisy_frame_symbols(587, 0.0, rng, k=3328)
            est = fine_timing_stf(y, (587 - 64, 587 + 64))
            hits += abs(est - 587) <= 1
        assert hits >= trials * 0.99

    def test_two_echoes_strongest_wins(self):
        rng = np.random.default_rng(10)
        frame = assemble_frame(FrameLayout(k=3328, header_len=0), rng).astype(complex)
        y = np.zeros(5000, complex)
        y[300 : 300 + 3328] += 0.4 * frame
        y[700 : 700 + 3328] += 1.0 * frame
        assert fine_timing_stf(y, (0, 1200)) == 700

    def test_window_too_short_rejected(self):
        with pytest.raises(ValueError):
            fine_timing_stf(np.zeros(100, complex), (0, 10))


class TestChannelEstimate:
    def test_clean_delta(self):
        # synchronized noiseless target on the discrete model: exact delta
        h0 = 0.8 - 0.3j
        rng = np.random.default_rng(11)
        y = _noisy_frame_symbols(0, 500.0, rng, h0=h0)
        y = h0 * assemble_frame(FrameLayout(k=4352, header_len=0), np.random.default_rng(0)).astype(complex)
        h = estimate_channel_cef(y, 2176)
        assert abs(h[256] - h0) < 1e-10
        off = np.abs(np.delete(h, 256))
        assert off.max() < 1e-10

    def test_delayed_three_samples(self):
        y = np.concatenate([np.zeros(3), build_preamble(), np.zeros(64)]).astype(complex)
        h = estimate_channel_cef(y, 2176)
        assert np.argmax(np.abs(h)) == 259

    def test_noise_only_bin_variance(self):
        # background variance sigma^2/(2*512) at the synchronized bin
        rng = np.random.default_rng(12)
        sigma2 = 4.0
        vals = []
        for _ in range(400):
            y = np.sqrt(sigma2 / 2) * (
                rng.standard_normal(4500) + 1j * rng.standard_normal(4500)
            )
            h = estimate_channel_cef(y, 2176)
            vals.append(h[256])
        var = np.var(vals)
        assert var == pytest.approx(sigma2 / 1024, rel=0.2)

    def test_sliding_mode_uniform_noise_floor(self):
        rng = np.random.default_rng(13)
        sigma2 = 1.0
        acc = np.zeros(512)
        trials = 300
        for _ in range(trials):
            y = np.sqrt(sigma2 / 2) * (
                rng.standard_normal(4500) + 1j * rng.standard_normal(4500)
            )
            h = estimate_channel_cef(y, 2176, gated=False)
            acc += np.abs(h) ** 2
        mean_power = acc / trials
        assert np.median(mean_power) == pytest.approx(sigma2 / 1024, rel=0.15)
        assert mean_power.max() / mean_power.min() < 2.0

    def test_peak_unbiased_in_noise(self):
        h0 = 1.0
        rng = np.random.default_rng(14)
        vals = []
        trials = 1000
        sigma2 = 1.0
        for _ in range(trials):
            y = _noisy_frame_symbols(0, 0.0, rng, k=4352, h0=h0)
            vals.append(estimate_channel_cef(y, 2176)[256])
        mean = np.mean(vals)
        sigma_mean = np.sqrt(sigma2 / 1024 / trials)
        assert abs(mean - h0) < 3 * sigma_mean * 1.5


class TestPipeline:
    def test_delay_composability_at_0db(self):
        # fine index + fractional phase recovers the injected delay within
        # Ts * (1 + 1/(2Q)) in at least 99% of trials
        from wlanradar.airlink import SPEED_OF_LIGHT

        scen = Scenario()
        trials = 60
        hits = 0
        for i in range(trials):
            rng = np.random.default_rng(100 + i)
            d_symbols = 587 + rng.uniform(0, 1)
            target = Target(range_m=d_symbols * TS * SPEED_OF_LIGHT / 2)
            frame = assemble_frame(FrameLayout(k=4352, header_len=0), rng)
            tx = pulse_shape(frame, RRC, W)
            nc = NoiseClutterSpec(noise_power=1.0)  # SCNR = 0 dB with unit gain
            rx = synthesize_radar_rx(tx, [target], nc, scen.array, None,
                                     seed=rng, unit_gains=True)
            timing, _ = preamble_sync(rx, RRC, W, fine_template="preamble",
                                      search=(587 - 384, 587 + 384))
            err = abs(timing.delay_symbols() - d_symbols)
            hits += err <= 1 + 1 / (2 * Q)
        assert hits >= int(np.ceil(trials * 0.99))

    def test_coarse_then_fine_consistency(self):
        rng = np.random.default_rng(15)
        y = _noisy_frame_symbols(600, 20.0, rng)
        timing_stream = IqStream(np.repeat(y, 1), W)  # symbol-rate stream, Q=1
        spec1 = RrcSpec(oversample=1)
        timing, sym = preamble_sync(timing_stream, spec1, W)
        assert timing is not None
        assert timing.coarse_start is not None
        assert abs(timing.fine_start - 600) <= 1
        assert abs(timing.fine_start - timing.coarse_start) <= 3 * 128


class TestCefPhaseTiming:
    def test_recovers_fractional_delay(self):
        # documented alternative path: phase-slope timing on the CEF
        frac = 0.3
        frame = assemble_frame(FrameLayout(k=4352, header_len=0), seed=16)
        tx = pulse_shape(frame, RRC, W, delay=frac * TS)
        sym = symbol_sample(matched_filter(tx, RRC, W), W, 0)
        est = fine_timing_cef_phase(sym, 2176)
        assert est == pytest.approx(frac, abs=0.05)
