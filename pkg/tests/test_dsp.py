import numpy as np
import pytest

from wlanradar.dsp import (
    IqStream,
    RrcSpec,
    apply_delay_doppler,
    matched_filter,
    occupied_bandwidth,
    pulse_shape,
    rc_pulse,
    rrc_taps,
    symbol_sample,
)
from wlanradar.frame import FrameLayout, assemble_frame

W = 1.76e9
TS = 1 / W
SPEC = RrcSpec()


class TestRrcTaps:
    def test_unit_energy(self):
        taps = rrc_taps(SPEC)
        assert abs(np.sum(taps**2) - 1.0) < 1e-9

    def test_symmetry(self):
        taps = rrc_taps(SPEC)
        assert np.allclose(taps, taps[::-1])

    def test_cascade_nyquist(self):
        taps = rrc_taps(SPEC)
        g = np.convolve(taps, taps)
        mid = len(g) // 2
        q = SPEC.oversample
        sym = np.concatenate([g[mid + q :: q], g[mid - q :: -q]])
        assert np.abs(sym).max() < 1e-3
        assert abs(g[mid] - 1.0) < 1e-6

    def test_occupied_bandwidth(self):
        assert occupied_bandwidth(SPEC, W) == pytest.approx(2.2e9)

    @pytest.mark.parametrize("kwargs", [
        dict(rolloff=0.0), dict(rolloff=1.5), dict(span=3), dict(span=0),
        dict(oversample=0),
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            RrcSpec(**kwargs)

    def test_rc_pulse_nyquist_zeros(self):
        k = np.arange(1, 20)
        assert np.abs(rc_pulse(k, 0.25)).max() < 1e-12
        assert rc_pulse(np.array([0.0]), 0.25)[0] == pytest.approx(1.0)


class TestPulseShape:
    def test_single_symbol_is_impulse_response(self):
        es = 2.5
        out = pulse_shape([1.0], SPEC, W, es=es)
        taps = rrc_taps(SPEC)
        assert np.allclose(out.samples[: len(taps)], np.sqrt(es) * taps)
        assert np.abs(out.samples[len(taps) :]).max() < 1e-12

    def test_energy_per_symbol(self):
        frame = assemble_frame(FrameLayout(k=6656), seed=3)
        es = 1.7
        out = pulse_shape(frame, SPEC, W, es=es)
        per_symbol = np.sum(np.abs(out.samples) ** 2) / len(frame)
        assert per_symbol == pytest.approx(es, rel=0.01)

    def test_q1_degenerates_to_symbol_rate(self):
        spec1 = RrcSpec(oversample=1)
        out = pulse_shape([1.0, -1.0, 1.0], spec1, W)
        assert out.rate == W

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            pulse_shape([], SPEC, W)

    def test_time_axis_places_symbols(self):
        out = pulse_shape([1.0], SPEC, W, delay=5 * TS)
        t_peak = out.times()[np.argmax(np.abs(out.samples))]
        assert t_peak == pytest.approx(5 * TS, abs=TS / SPEC.oversample / 2)


class TestMatchedFilter:
    def test_round_trip_symbol_recovery(self):
        frame = assemble_frame(FrameLayout(k=6656), seed=11)
        rx = matched_filter(pulse_shape(frame, SPEC, W), SPEC, W)
        sym = symbol_sample(rx, W, 0)
        assert np.abs(sym[: len(frame)] - frame).max() < 1e-3

    def test_noise_variance_preserved(self):
        # filtered samples are correlated over ~Q*span taps, so a long record
        # is needed to push the estimator noise below the 1% tolerance
        rng = np.random.default_rng(4)
        n = 1_000_000
        noise = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        out = matched_filter(IqStream(noise, W * SPEC.oversample), SPEC)
        body = out.samples[len(rrc_taps(SPEC)) : -len(rrc_taps(SPEC))]
        assert np.mean(np.abs(body) ** 2) == pytest.approx(1.0, rel=0.01)

    def test_inband_tone_unit_gain_through_cascade(self):
        # tone well inside the flat raised-cosine passband
        f = 0.2 * W
        n = np.arange(4096)
        tone = np.exp(2j * np.pi * f * n * TS)
        rx = matched_filter(pulse_shape(tone, SPEC, W), SPEC, W)
        sym = symbol_sample(rx, W, 0)
        body = sym[SPEC.span : 4096 - SPEC.span]
        gain = np.abs(body / tone[SPEC.span : 4096 - SPEC.span])
        assert np.abs(gain - 1.0).max() < 2e-3

    def test_rate_mismatch_rejected(self):
        stream = IqStream(np.zeros(64), rate=3 * W)
        with pytest.raises(ValueError):
            matched_filter(stream, SPEC, W)


class TestSymbolSample:
    def test_q1_identity(self):
        x = np.arange(10, dtype=complex)
        out = symbol_sample(IqStream(x, W), W, 0)
        assert np.array_equal(out, x)

    def test_wrong_phase_lowers_energy(self):
        frame = assemble_frame(FrameLayout(k=6656), seed=2)
        rx = matched_filter(pulse_shape(frame, SPEC, W), SPEC, W)
        e = [np.mean(np.abs(symbol_sample(rx, W, p)[:6000]) ** 2)
             for p in range(SPEC.oversample)]
        assert np.argmax(e) == 0
        assert e[0] > e[SPEC.oversample // 2]

    def test_invalid_phase(self):
        with pytest.raises(ValueError):
            symbol_sample(IqStream(np.zeros(64), 8 * W), W, 8)


class TestDelayDoppler:
    def setup_method(self):
        frame = assemble_frame(FrameLayout(k=4352, header_len=0), seed=6)
        self.tx = pulse_shape(frame, SPEC, W)

    def test_identity(self):
        out = apply_delay_doppler(self.tx, 0.0, 0.0, 1.0)
        assert np.allclose(out.samples, self.tx.samples)

    def test_integer_shift_exact(self):
        d = 7 / self.tx.rate
        out = apply_delay_doppler(self.tx, d, 0.0, 1.0)
        assert np.array_equal(out.samples[7 : len(self.tx)], self.tx.samples[: len(self.tx) - 7])

    def test_doppler_phase_slope(self):
        nu = 8e3
        out = apply_delay_doppler(self.tx, 0.0, nu, 1.0)
        ratio = out.samples[1000:5000] / self.tx.samples[1000:5000]
        slope = np.polyfit(np.arange(4000), np.unwrap(np.angle(ratio)), 1)[0]
        assert slope * self.tx.rate / (2 * np.pi) == pytest.approx(nu, rel=1e-9)

    def test_composability(self):
        t1, t2 = 0.37 / self.tx.rate, 1.41 / self.tx.rate
        once = apply_delay_doppler(self.tx, t1 + t2, 0.0, 1.0)
        twice = apply_delay_doppler(apply_delay_doppler(self.tx, t1, 0.0, 1.0), t2, 0.0, 1.0)
        n = min(len(once), len(twice))
        err = np.abs(once.samples[300 : n - 300] - twice.samples[300 : n - 300])
        assert err.max() < 1e-3

    def test_gain_applied(self):
        g = 0.3 - 0.4j
        out = apply_delay_doppler(self.tx, 0.0, 0.0, g)
        assert np.allclose(out.samples, g * self.tx.samples)

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError):
            apply_delay_doppler(self.tx, -1e-9, 0.0, 1.0)

    def test_excess_doppler_rejected(self):
        with pytest.raises(ValueError):
            apply_delay_doppler(self.tx, 0.0, self.tx.rate, 1.0)


class TestIqStream:
    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            IqStream(np.array([1.0, np.inf]), W)

    def test_bad_rate_rejected(self):
        with pytest.raises(ValueError):
            IqStream(np.zeros(4), 0.0)
