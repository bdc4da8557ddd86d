"""Radar processing: CFAR detection, range/velocity estimation, delay-Doppler map,
and the closed-form CRLB / resolution expressions used as benchmarks.

Detection statistics
--------------------
Both statistics are normalized so their noise-only background is a zero-mean
complex Gaussian power with a known variance, making the CFAR threshold
chi_D = -noise_var * ln(P_FA) exact:

* preamble statistic: squared magnitude of the cross-correlation between the
  received stream and the transmitted preamble at the timing peak, divided by
  the template energy -> background variance sigma_cn^2, signal N * Es|h0|^2;
* CEF statistic: |h_hat[peak bin]|^2 -> background variance sigma_cn^2 / (2P)
  with P = 512.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import ncx2

from .airlink import SPEED_OF_LIGHT
from .dsp import IqStream

__all__ = [
    "DetectionDecision",
    "RadarEstimate",
    "DelayDopplerMap",
    "MapDetection",
    "cfar_threshold",
    "detect_target",
    "matched_preamble_statistic",
    "cef_peak_statistic",
    "estimate_range",
    "estimate_velocity_moose",
    "moose_ambiguity_limit",
    "build_delay_doppler_map",
    "detect_targets_map",
    "crlb_range",
    "crlb_velocity",
    "resolutions",
    "detection_probability",
]


@dataclass(frozen=True)
class DetectionDecision:
    statistic: float
    threshold: float
    detected: bool
    pfa: float


@dataclass(frozen=True)
class RadarEstimate:
    """Scalar target estimate; range and velocity follow from delay and Doppler."""

    range_m: float | None = None
    velocity_mps: float | None = None
    delay_s: float | None = None
    doppler_hz: float | None = None


def cfar_threshold(noise_var: float, pfa: float) -> float:
    """Threshold chi_D = -noise_var * ln(pfa) for an exponential background.

    ``noise_var`` is the variance of the complex Gaussian statistic background
    (post-correlation), not the raw stream variance.
    """
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    if not (0 < pfa <= 1):
        raise ValueError("pfa must lie in (0, 1]")
    return -noise_var * np.log(pfa)


def detect_target(statistic: float, noise_var: float, pfa: float) -> DetectionDecision:
    """Simple thresholding of a power statistic at constant false-alarm rate."""
    chi = cfar_threshold(noise_var, pfa)
    return DetectionDecision(
        statistic=float(statistic),
        threshold=float(chi),
        detected=bool(statistic > chi),
        pfa=pfa,
    )


def matched_preamble_statistic(
    rx: IqStream,
    template: np.ndarray,
    lags,
) -> tuple[float, int]:
    """Preamble detection statistic: peak |cross-correlation|^2 / template energy.

    ``template`` is the shaped transmitted preamble at the stream rate; the
    statistic background on white noise of per-sample variance sigma^2 is an
    exponential with mean sigma^2, so cfar_threshold(sigma_cn^2, pfa) applies
    directly.  Returns (statistic, lag of the peak).
    """
    t = np.asarray(template, dtype=complex)
    energy = np.real(np.vdot(t, t))
    y = rx.samples
    lags = np.asarray(lags, dtype=int)
    best_val = -1.0
    best_lag = int(lags[0])
    for lag in lags:
        if lag < 0 or lag + len(t) > len(y):
            continue
        c = np.vdot(t, y[lag : lag + len(t)])
        v = np.abs(c) ** 2 / energy
        if v > best_val:
            best_val = v
            best_lag = int(lag)
    if best_val < 0:
        raise ValueError("no admissible lag inside the stream")
    return float(best_val), best_lag


def cef_peak_statistic(h_hat: np.ndarray, bin_index: int = 256) -> float:
    """CEF detection statistic |h_hat[l_CEF]|^2."""
    return float(np.abs(h_hat[bin_index]) ** 2)


def estimate_range(
    delay_symbols: float,
    ts: float,
    tx_reference_time: float = 0.0,
) -> float:
    """Range from a round-trip delay estimate measured in symbol periods."""
    tau = delay_symbols * ts - tx_reference_time
    return SPEED_OF_LIGHT * tau / 2.0


def moose_ambiguity_limit(n_d: int, ts: float, wavelength: float) -> float:
    """Largest unambiguous |velocity| for training spacing N_D: lambda/(4 N_D Ts)."""
    nu_max = 1.0 / (2.0 * n_d * ts)
    return wavelength * nu_max / 2.0


def estimate_velocity_moose(
    p,
    n_d: int,
    p_len: int,
    m: int,
    ts: float,
    wavelength: float,
) -> RadarEstimate:
    """Least-squares (Moose) Doppler estimate from repeated training blocks.

    ``p`` is the stacked training vector: M frames of P = p_len synchronized
    training samples each (length M * P).  ``n_d`` is the stream-domain
    spacing of the correlated blocks: the frame length K for multi-frame
    estimation, or the intra-STF repetition distance (512) for the
    single-frame mode, where correlation runs over the P - N_D valid offsets.
    Multi-frame pipelines typically pass per-frame matched-filter-compressed
    training (p_len = 1), which suppresses the correlator's |noise|^2
    self-term at low SCNR while leaving the angle formula unchanged.

    The estimate is exact on noiseless input for |nu| < 1/(2 N_D Ts) and
    aliases by multiples of 1/(N_D Ts) outside that span.
    """
    p = np.asarray(p, dtype=complex)
    if m < 1 or p_len < 1 or len(p) != m * p_len:
        raise ValueError("stacked vector length must equal M * P")
    if m > 1:
        blocks = p.reshape(m, p_len)
        acc = np.sum(blocks[1:] * np.conj(blocks[:-1]))
    else:
        if not (0 < n_d < p_len):
            raise ValueError("single-frame mode needs 0 < N_D < P")
        acc = np.sum(p[n_d:] * np.conj(p[:-n_d]))
    t_d = n_d * ts
    nu = float(np.angle(acc) / (2 * np.pi * t_d))
    return RadarEstimate(velocity_mps=wavelength * nu / 2.0, doppler_hz=nu)


@dataclass
class DelayDopplerMap:
    """Delay/Doppler grid from per-frame CEF channel estimates.

    Rows are the 512 delay bins (bin l <-> round-trip delay l * Ts); columns
    are M * Z Doppler bins covering +-1/(2 K Ts) after FFT shift.
    """

    grid: np.ndarray            # (512, M*Z) complex
    ts: float
    frame_period: float         # K * Ts
    zero_pad: int
    wavelength: float
    n_frames: int

    def doppler_axis_hz(self) -> np.ndarray:
        # padded-DFT bin j of an M-frame record at spacing K*Ts sits at
        # frequency j / (M * Z * K * Ts)
        n = self.grid.shape[1]
        return np.fft.fftshift(np.fft.fftfreq(n, d=self.frame_period))

    def velocity_axis_mps(self) -> np.ndarray:
        return self.doppler_axis_hz() * self.wavelength / 2.0

    def range_axis_m(self) -> np.ndarray:
        return np.arange(self.grid.shape[0]) * self.ts * SPEED_OF_LIGHT / 2.0

    def magnitude_db(self) -> np.ndarray:
        mag = np.abs(self.grid)
        peak = mag.max()
        if peak == 0:
            return np.full_like(mag, -np.inf)
        with np.errstate(divide="ignore"):
            return 20 * np.log10(mag / peak)


def build_delay_doppler_map(
    h: np.ndarray,
    zero_pad: int = 16,
    ts: float = 1 / 1.76e9,
    frame_len: int | None = None,
    wavelength: float = SPEED_OF_LIGHT / 60e9,
    frame_period: float | None = None,
) -> DelayDopplerMap:
    """Per-delay-bin DFT across frames of the channel-estimate matrix.

    ``h`` is M x 512 (frame-major).  Each delay row is zero-padded to M * Z
    and transformed, then FFT-shifted so Doppler zero sits at the center
    column.  Requires M >= 2.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] < 2:
        raise ValueError("need an M x L matrix with M >= 2 frames")
    if zero_pad < 1:
        raise ValueError("zero_pad factor must be >= 1")
    m, n_bins = h.shape
    if frame_period is None:
        if frame_len is None:
            raise ValueError("provide frame_len (K) or frame_period (K*Ts)")
        frame_period = frame_len * ts
    grid = np.fft.fftshift(np.fft.fft(h, n=m * zero_pad, axis=0), axes=0)
    return DelayDopplerMap(
        grid=grid.T.copy(),
        ts=ts,
        frame_period=frame_period,
        zero_pad=zero_pad,
        wavelength=wavelength,
        n_frames=m,
    )


@dataclass(frozen=True)
class MapDetection:
    delay_bin: int
    doppler_bin: int            # column in the shifted grid
    range_m: float
    velocity_mps: float
    power: float


def detect_targets_map(
    ddm: DelayDopplerMap,
    pfa: float,
    bin_noise_var: float,
) -> list[MapDetection]:
    """Threshold the map at constant false-alarm rate and keep local maxima.

    ``bin_noise_var`` is the per-bin variance of the channel-estimate noise;
    a map cell built from an M-point DFT of such bins has background variance
    M * bin_noise_var.  A cell is kept when it exceeds the threshold and both
    of its neighbours along each axis (delay clipped, Doppler wrapped).
    """
    power = np.abs(ddm.grid) ** 2
    cell_var = ddm.n_frames * bin_noise_var
    chi = cfar_threshold(cell_var, pfa)

    above = power > chi
    # local maxima: strictly greater than the axis neighbours
    up = np.roll(power, 1, axis=1)
    down = np.roll(power, -1, axis=1)
    left = np.zeros_like(power)
    right = np.zeros_like(power)
    left[1:, :] = power[:-1, :]
    right[:-1, :] = power[1:, :]
    is_peak = above & (power >= up) & (power > down) & (power >= left) & (power > right)

    vel_axis = ddm.velocity_axis_mps()
    rng_axis = ddm.range_axis_m()
    out = []
    for l_bin, d_bin in zip(*np.nonzero(is_peak)):
        out.append(
            MapDetection(
                delay_bin=int(l_bin),
                doppler_bin=int(d_bin),
                range_m=float(rng_axis[l_bin]),
                velocity_mps=float(vel_axis[d_bin]),
                power=float(power[l_bin, d_bin]),
            )
        )
    out.sort(key=lambda d: -d.power)
    return out


# ----------------------------------------------------------------------------
# Closed-form benchmarks
# ----------------------------------------------------------------------------

# flat preamble spectrum: eta^2 = (2 pi)^2 / 12
_ETA2 = (2 * np.pi) ** 2 / 12


def crlb_range(scnr: float, p: int = 2048, bandwidth: float = 1.76e9) -> float:
    """Range-estimation CRLB in m^2: c^2 / (8 eta^2 W^2 P zeta).

    ``p`` is the number of preamble symbols integrated (2048 for the STF,
    1024 for the CEF pair); ``scnr`` is linear.
    """
    if scnr <= 0:
        raise ValueError("SCNR must be positive (linear)")
    return SPEED_OF_LIGHT**2 / (8 * _ETA2 * bandwidth**2 * p * scnr)


def crlb_velocity(
    scnr: float,
    mode: str = "single",
    p: int = 2048,
    m: int = 1,
    k: int = 0,
    ts: float = 1 / 1.76e9,
    wavelength: float = SPEED_OF_LIGHT / 60e9,
) -> float:
    """Velocity-estimation CRLB in (m/s)^2.

    mode="single":  6 lambda^2 / ((4 pi)^2 P^3 Ts^2 zeta), one frame's STF.
    mode="multi":   6 lambda^2 / ((4 pi)^2 (M P^3 + M^3 P K^2) Ts^2 zeta),
                    the large-M approximation for M frames of P training
                    symbols spaced K symbols apart.
    mode="exact":   Fisher-sum form: xi / (sum n^2 - (sum n)^2 / PM) over the
                    actual training positions n = k_i + m K, with
                    xi = (P M zeta + 1) / (2 P M zeta^2); converts the
                    angular-frequency bound through omega = 2 pi nu Ts and
                    v = lambda nu / 2.
    """
    if scnr <= 0:
        raise ValueError("SCNR must be positive (linear)")
    if mode == "single":
        return 6 * wavelength**2 / ((4 * np.pi) ** 2 * p**3 * ts**2 * scnr)
    if mode == "multi":
        if m < 1 or k <= 0:
            raise ValueError("multi-frame mode needs M >= 1 and K > 0")
        denom = m * p**3 + m**3 * p * k**2
        return 6 * wavelength**2 / ((4 * np.pi) ** 2 * denom * ts**2 * scnr)
    if mode == "exact":
        if m < 1 or (m > 1 and k <= 0):
            raise ValueError("exact mode needs M >= 1 (and K > 0 when M > 1)")
        n = np.concatenate([mm * k + np.arange(p) for mm in range(m)]).astype(float)
        pm = p * m
        xi = (pm * scnr + 1) / (2 * pm * scnr**2)
        spread = np.sum(n**2) - np.sum(n) ** 2 / pm
        var_omega = xi / spread
        var_nu = var_omega / (2 * np.pi * ts) ** 2
        return (wavelength / 2) ** 2 * var_nu
    raise ValueError(f"unknown CRLB mode {mode!r}")


def resolutions(bandwidth: float, t_int: float, wavelength: float) -> tuple[float, float]:
    """(range resolution c/(2W), velocity resolution lambda/(2 T_int))."""
    if bandwidth <= 0 or t_int <= 0 or wavelength <= 0:
        raise ValueError("arguments must be positive")
    return SPEED_OF_LIGHT / (2 * bandwidth), wavelength / (2 * t_int)


def detection_probability(scnr: float, pfa: float, n_symbols: int) -> float:
    """Theoretical Pd of the coherent preamble statistic (Marcum Q form).

    The statistic is |sqrt(N zeta) + CN(0,1)|^2 against the exponential-tail
    threshold: Pd = Q_1(sqrt(2 N zeta), sqrt(-2 ln pfa)).  This is the
    information-theoretic ceiling for single-frame preamble detection and is
    attached to detection benches as a reference column.
    """
    if scnr <= 0:
        raise ValueError("SCNR must be positive (linear)")
    if not (0 < pfa < 1):
        raise ValueError("pfa must lie in (0, 1)")
    return float(ncx2.sf(-2 * np.log(pfa), 2, 2 * n_symbols * scnr))
