"""Experiment harness: Monte Carlo pipelines, figure benches, data-rate metric.

Every experiment is described by an ExperimentSpec and produces a ResultTable
whose CSV rendering is byte-reproducible for a fixed seed and trial count,
independent of the worker count: per-trial RNGs are derived from
(seed, point index, trial index) and aggregation runs in trial order.

SCNR convention: experiments pin the ratio Es |h0|^2 / sigma_cn^2 directly by
normalizing the reference echo gain to unit magnitude and setting the
injected clutter-plus-noise variance, so the per-symbol SNR after matched
filtering equals the sweep value exactly.  CRLB columns are evaluated at the
same per-symbol SNR.
"""

from __future__ import annotations

import json
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .airlink import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    LinkBudget,
    NoiseClutterSpec,
    Target,
    link_budget_sweep,
    synthesize_radar_rx,
    synthesize_radar_rx_symbol_rate,
)
from .dsp import RrcSpec, pulse_shape
from .frame import PREAMBLE_LEN, STF_LEN, CpiConfig, FrameLayout, assemble_cpi, assemble_frame, build_preamble
from .golay import GolayPair, generate_golay_pair, golay_pair_correlate
from .radar import (
    build_delay_doppler_map,
    cfar_threshold,
    crlb_range,
    crlb_velocity,
    detect_targets_map,
    detection_probability,
    estimate_range,
    estimate_velocity_moose,
    matched_preamble_statistic,
)
from .sync import estimate_channel_cef, fine_timing_preamble, preamble_sync

__all__ = [
    "Scenario",
    "ExperimentSpec",
    "ResultTable",
    "ambiguity_function",
    "data_rate",
    "run_experiment",
    "two_vehicle_scenario",
    "run_manifest",
]

EXPERIMENT_KINDS = (
    "ambiguity",
    "detection",
    "range-mse",
    "velocity-mse",
    "tradeoff",
    "linkbudget",
    "ddmap",
    "crlb",
)


@dataclass(frozen=True)
class Scenario:
    """Physical and frame-level configuration shared by all experiments."""

    symbol_rate: float = 1.76e9
    carrier_hz: float = 60e9
    rolloff: float = 0.25
    rrc_span: int = 48
    oversample: int = 8
    frame_k: int = 12800
    header_len: int = 1024
    n_frames: int = 10
    detection_frame_k: int = 3840      # short frames for per-trial detection runs
    detection_window_symbols: int = 3  # +- delay uncertainty searched, in symbols
    targets: tuple = (Target(range_m=50.0, velocity_mps=20.0, rcs_dbsm=10.0),)
    n_horizontal: int = 8
    n_vertical: int = 2
    eirp_dbm: float = 43.0
    noise_figure_db: float = 6.0
    pl_exponent: float = 2.0
    rician_k_db: float = 10.0
    cpi_duration_s: float = 6e-5       # trade-off bench CPI
    zero_pad: int = 16

    @property
    def ts(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def rrc(self) -> RrcSpec:
        return RrcSpec(self.rolloff, self.rrc_span, self.oversample)

    @property
    def array(self) -> ArrayConfig:
        return ArrayConfig(self.n_horizontal, self.n_vertical, 0.5, self.wavelength)

    @property
    def link_budget(self) -> LinkBudget:
        return LinkBudget(self.eirp_dbm, self.noise_figure_db, self.pl_exponent,
                          self.rician_k_db)

    def layout(self, k: int | None = None, header_len: int | None = None) -> FrameLayout:
        return FrameLayout(
            k=self.frame_k if k is None else k,
            header_len=self.header_len if header_len is None else header_len,
        )

    def cpi(self) -> CpiConfig:
        return CpiConfig(self.n_frames, self.frame_k, self.ts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["targets"] = [asdict(t) for t in self.targets]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "targets" in d:
            d["targets"] = tuple(Target(**t) for t in d["targets"])
        return cls(**d)


def two_vehicle_scenario(**overrides) -> Scenario:
    """Two-target map bench: the recipient at 14.32 m / 30 m/s (beam reference)
    plus a second vehicle 4.26 m closer and 30 m/s faster, 10 degrees off
    boresight."""
    base = dict(
        targets=(
            Target(range_m=14.32, velocity_mps=30.0, rcs_dbsm=10.0,
                   azimuth_deg=90.0, elevation_deg=90.0),
            Target(range_m=10.06, velocity_mps=60.0, rcs_dbsm=10.0,
                   azimuth_deg=100.0, elevation_deg=90.0),
        ),
        n_frames=10,
        frame_k=12800,
    )
    base.update(overrides)
    return Scenario(**base)


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: experiment kind, scenario, sweep axis, trial budget."""

    kind: str
    scenario: Scenario = field(default_factory=Scenario)
    sweep: tuple = ()
    trials: int = 1000
    seed: int = 0
    pfa: float = 1e-6
    doppler_grid: tuple = ()           # ambiguity bench only
    tradeoff_scnr_db: float = 10.0     # operating SCNR of the trade-off bench

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        needs_sweep = self.kind in (
            "detection", "range-mse", "velocity-mse", "tradeoff", "linkbudget", "crlb",
        )
        if needs_sweep and len(self.sweep) == 0:
            raise ValueError(f"experiment {self.kind!r} needs a nonempty sweep")
        if not (0 < self.pfa <= 1):
            raise ValueError("pfa must lie in (0, 1]")


@dataclass
class ResultTable:
    """Long-format results: one (sweep value, metric, value) row at a time."""

    rows: list = field(default_factory=list)

    def add(self, sweep, metric: str, value: float, trials: int = 0,
            half_width: float = 0.0):
        self.rows.append((sweep, str(metric), float(value), int(trials),
                          float(half_width)))

    def column(self, metric: str) -> list:
        return [(r[0], r[2]) for r in self.rows if r[1] == metric]

    def value(self, sweep, metric: str) -> float:
        for r in self.rows:
            if r[1] == metric and r[0] == sweep:
                return r[2]
        raise KeyError(f"no row for metric={metric!r} at sweep={sweep!r}")

    def to_csv_text(self) -> str:
        lines = ["sweep,metric,value,trials,half_width"]
        for sweep, metric, value, trials, hw in self.rows:
            lines.append(f"{_fmt(sweep)},{metric},{_fmt(value)},{trials},{_fmt(hw)}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def run_manifest(spec: ExperimentSpec) -> str:
    """Reproducibility manifest: config, seed, and version stamps (JSON)."""
    import scipy

    info = {
        "experiment": {
            "kind": spec.kind,
            "sweep": list(spec.sweep),
            "trials": spec.trials,
            "seed": spec.seed,
            "pfa": spec.pfa,
        },
        "scenario": spec.scenario.to_dict(),
        "versions": {
            "wlanradar": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    return json.dumps(info, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------------
# ambiguity function and data rate
# ----------------------------------------------------------------------------

def ambiguity_function(
    waveform,
    lags,
    dopplers,
    ts: float,
    pair: GolayPair | None = None,
) -> np.ndarray:
    """|ambiguity| over (doppler, lag): sum_n x[n] conj(x[n-lag]) e^{j2pi nu n Ts}.

    With ``pair`` given, the waveform is treated as the time-multiplexed
    complementary pair [a b] and processed through the segment-gated pair
    correlator (scaled by 2N so the zero-Doppler peak equals the total
    energy); the zero-Doppler cut is then an exact delta.
    """
    x = np.asarray(waveform, dtype=complex)
    lags = np.asarray(lags, dtype=int)
    dopplers = np.asarray(dopplers, dtype=float)
    if np.any(np.abs(dopplers) > 1 / (2 * ts)):
        raise ValueError("doppler grid exceeds +-1/(2 Ts)")
    n = np.arange(len(x))
    out = np.empty((len(dopplers), len(lags)))
    for i, nu in enumerate(dopplers):
        z = x * np.exp(2j * np.pi * nu * n * ts)
        if pair is None:
            c = np.correlate(z, x, mode="full")          # lags -(N-1)..N-1
            idx = lags + len(x) - 1
            ok = (idx >= 0) & (idx < len(c))
            vals = np.zeros(len(lags), dtype=complex)
            vals[ok] = c[idx[ok]]
        else:
            vals = 2 * len(pair) * golay_pair_correlate(z, pair, lags=lags, gate=0)
        out[i] = np.abs(vals)
    return out


def data_rate(m: int, k_cd: int, ts: float, t: float, snr_samples) -> float:
    """Average data rate in bits/s: duty fraction times spectral efficiency.

    R = (M K_CD Ts / T) * mean(log2(1 + snr)) / Ts, i.e. the duty-weighted
    per-symbol efficiency reported per second at the symbol rate.  K_CD = 0
    (no data symbols) yields zero rate.
    """
    if k_cd < 0:
        raise ValueError("K_CD must be nonnegative")
    if k_cd == 0:
        return 0.0
    snr = np.asarray(snr_samples, dtype=float)
    spectral = float(np.mean(np.log2(1.0 + snr)))
    duty = m * k_cd * ts / t
    return duty * spectral / ts


# ----------------------------------------------------------------------------
# per-trial work functions (module level so worker processes can import them)
# ----------------------------------------------------------------------------


def _rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, point, trial])


def _shaped_preamble(scen: Scenario):
    return _shaped_preamble_cached(
        scen.symbol_rate, scen.rolloff, scen.rrc_span, scen.oversample
    )


_template_cache: dict = {}


def _shaped_preamble_cached(symbol_rate, rolloff, span, oversample):
    key = (symbol_rate, rolloff, span, oversample)
    if key not in _template_cache:
        spec = RrcSpec(rolloff, span, oversample)
        _template_cache[key] = pulse_shape(build_preamble(), spec, symbol_rate)
    return _template_cache[key]


def _detection_trial(args) -> float:
    """One end-to-end detection trial; returns 1.0 when the target is declared.

    The statistic is the oversampled matched-filter correlation of the raw
    received stream with the shaped preamble, searched over the scenario's
    delay-uncertainty window around the expected echo lag; threshold set for
    the per-cell false-alarm rate from the known noise variance.
    """
    scen, scnr_db, pfa, point, trial, seed = args
    rng = _rng(seed, point, trial)
    target = scen.targets[0]
    layout = scen.layout(k=scen.detection_frame_k, header_len=0)
    symbols = assemble_frame(layout, rng)
    tx = pulse_shape(symbols, scen.rrc, scen.symbol_rate)
    sigma_cn2 = 1.0 / 10 ** (scnr_db / 10)
    nc = NoiseClutterSpec(noise_power=sigma_cn2)
    rx = synthesize_radar_rx(tx, [target], nc, scen.array, None, rng, unit_gains=True)

    template = _shaped_preamble(scen)
    lag0 = int(np.round(target.delay() * rx.rate))
    w = scen.detection_window_symbols * scen.oversample
    lags = lag0 + np.arange(-w, w + 1)
    stat, _ = matched_preamble_statistic(rx, template.samples, lags)
    return 1.0 if stat > cfar_threshold(sigma_cn2, pfa) else 0.0


def _range_trial(args) -> float:
    """One range-estimation trial; returns the squared range error in m^2.

    The true range is jittered by up to half a range bin so the Monte Carlo
    samples the sub-sample quantization error of the synchronizer.
    """
    scen, scnr_db, point, trial, seed = args
    rng = _rng(seed, point, trial)
    base = scen.targets[0]
    bin_m = SPEED_OF_LIGHT * scen.ts / 2
    rho = base.range_m + (rng.uniform(-0.5, 0.5)) * bin_m
    target = replace(base, range_m=rho)

    layout = scen.layout(k=max(PREAMBLE_LEN + scen.header_len + 512, 5376))
    symbols = assemble_frame(layout, rng)
    tx = pulse_shape(symbols, scen.rrc, scen.symbol_rate)
    sigma_cn2 = 1.0 / 10 ** (scnr_db / 10)
    nc = NoiseClutterSpec(noise_power=sigma_cn2)
    rx = synthesize_radar_rx(tx, [target], nc, scen.array, None, rng, unit_gains=True)

    expect = int(np.round(target.delay() / scen.ts))
    timing, _ = preamble_sync(
        rx, scen.rrc, scen.symbol_rate,
        fine_template="preamble",
        search=(expect - 3 * 128, expect + 3 * 128),
    )
    rho_hat = estimate_range(timing.delay_symbols(), scen.ts)
    return float((rho_hat - rho) ** 2)


def _velocity_trial(args) -> float:
    """One multi-frame velocity trial at symbol rate; returns squared error.

    Each frame's known 3328-symbol training block is first compressed by the
    preamble matched filter (per-frame SNR P * zeta), and the multi-frame
    Moose angle is taken across the compressed per-frame values.  Feeding raw
    symbol products instead would add the |noise|^2 self-term of the
    correlator, which costs ~10 log10(1 + (M-1)/(2 zeta)) dB at low SCNR.
    """
    scen, scnr_db, point, trial, seed = args
    rng = _rng(seed, point, trial)
    target = scen.targets[0]
    m = scen.n_frames
    k = scen.frame_k
    layout = scen.layout()
    cpi = assemble_cpi(CpiConfig(m, k, scen.ts), layout,
                       seed=int(rng.integers(2**63)))
    sigma_cn2 = 1.0 / 10 ** (scnr_db / 10)
    nc = NoiseClutterSpec(noise_power=sigma_cn2)
    y = synthesize_radar_rx_symbol_rate(
        cpi, [target], nc, scen.array, None, scen.ts, rng,
        unit_gains=True, rolloff=scen.rolloff, span=scen.rrc_span,
    )

    expect = int(np.round(target.delay() / scen.ts))
    fine, _ = fine_timing_preamble(y, (expect - 32, expect + 33))
    template = np.conj(build_preamble().astype(complex))
    q = np.array([
        np.dot(y[fine + i * k : fine + i * k + PREAMBLE_LEN], template)
        for i in range(m)
    ])
    est = estimate_velocity_moose(q, n_d=k, p_len=1, m=m,
                                  ts=scen.ts, wavelength=scen.wavelength)
    return float((est.velocity_mps - target.velocity_mps) ** 2)


def _comm_snr_draws(scen: Scenario, scnr_db: float, m: int, rng) -> np.ndarray:
    """Per-frame communication SNR draws: Rician fading around the mean SNR."""
    k_lin = 10 ** (scen.rician_k_db / 10)
    n_el = scen.array.n_elements
    # beam-aligned fade: sqrt(K/(K+1)) * N e^{j phi} + sqrt(1/(K+1)) * CN(0,1)
    los = np.sqrt(k_lin / (k_lin + 1)) * n_el * np.exp(
        2j * np.pi * rng.uniform(size=m)
    )
    scatter = np.sqrt(1 / (k_lin + 1)) * (
        rng.standard_normal(m) + 1j * rng.standard_normal(m)
    ) / np.sqrt(2)
    fade = np.abs(los + scatter) ** 2
    mean_fade = k_lin / (k_lin + 1) * n_el**2 + 1 / (k_lin + 1)
    return 10 ** (scnr_db / 10) * fade / mean_fade


# ----------------------------------------------------------------------------
# experiment pipelines
# ----------------------------------------------------------------------------


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("WLANRADAR_WORKERS")
    return max(1, int(env)) if env else 1


def _map_trials(fn, args_list, workers: int):
    if workers <= 1 or len(args_list) < 2 * workers:
        return [fn(a) for a in args_list]
    chunk = max(1, len(args_list) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=chunk))


def _binomial_halfwidth(p: float, n: int) -> float:
    return 1.96 * np.sqrt(max(p * (1 - p), 0.0) / n)


def _mean_halfwidth(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return 1.96 * float(np.std(values, ddof=1)) / np.sqrt(len(values))


def _run_detection(spec: ExperimentSpec, workers: int) -> ResultTable:
    table = ResultTable()
    scen = spec.scenario
    _shaped_preamble(scen)  # warm the template cache before forking workers
    for i, scnr_db in enumerate(spec.sweep):
        args = [(scen, scnr_db, spec.pfa, i, j, spec.seed) for j in range(spec.trials)]
        hits = np.array(_map_trials(_detection_trial, args, workers))
        pd = float(np.mean(hits))
        table.add(scnr_db, "pd", pd, spec.trials, _binomial_halfwidth(pd, spec.trials))
        table.add(
            scnr_db, "pd_theory",
            detection_probability(10 ** (scnr_db / 10), spec.pfa, PREAMBLE_LEN),
        )
    return table


def _run_range_mse(spec: ExperimentSpec, workers: int) -> ResultTable:
    table = ResultTable()
    scen = spec.scenario
    for i, scnr_db in enumerate(spec.sweep):
        args = [(scen, scnr_db, i, j, spec.seed) for j in range(spec.trials)]
        sq = np.array(_map_trials(_range_trial, args, workers))
        table.add(scnr_db, "range_mse_m2", float(np.mean(sq)), spec.trials,
                  _mean_halfwidth(sq))
        table.add(scnr_db, "range_crlb_m2",
                  crlb_range(10 ** (scnr_db / 10), p=2048, bandwidth=scen.symbol_rate))
    return table


def _velocity_crlb_columns(table: ResultTable, scen: Scenario, scnr_db: float):
    zeta = 10 ** (scnr_db / 10)
    table.add(scnr_db, "velocity_crlb_multi_m2s2",
              crlb_velocity(zeta, "multi", p=PREAMBLE_LEN, m=scen.n_frames,
                            k=scen.frame_k, ts=scen.ts, wavelength=scen.wavelength))
    table.add(scnr_db, "velocity_crlb_exact_m2s2",
              crlb_velocity(zeta, "exact", p=PREAMBLE_LEN, m=scen.n_frames,
                            k=scen.frame_k, ts=scen.ts, wavelength=scen.wavelength))


def _run_velocity_mse(spec: ExperimentSpec, workers: int) -> ResultTable:
    table = ResultTable()
    scen = spec.scenario
    for i, scnr_db in enumerate(spec.sweep):
        args = [(scen, scnr_db, i, j, spec.seed) for j in range(spec.trials)]
        sq = np.array(_map_trials(_velocity_trial, args, workers))
        table.add(scnr_db, "velocity_mse_m2s2", float(np.mean(sq)), spec.trials,
                  _mean_halfwidth(sq))
        _velocity_crlb_columns(table, scen, scnr_db)
    return table


def _run_tradeoff(spec: ExperimentSpec, workers: int) -> ResultTable:
    """Sweep the frame count M inside a fixed-duration CPI at one SCNR.

    Data rate and velocity RMSE move in opposite directions with M: more
    frames mean more training (better velocity) but fewer data symbols.
    """
    table = ResultTable()
    scen = spec.scenario
    scnr_db = spec.tradeoff_scnr_db
    t_cpi = scen.cpi_duration_s
    total_symbols = int(round(t_cpi / scen.ts))
    for i, m_frames in enumerate(spec.sweep):
        m_frames = int(m_frames)
        k = total_symbols // m_frames
        if k < PREAMBLE_LEN + scen.header_len + 1:
            table.add(m_frames, "infeasible", 1.0)
            continue
        sub = replace(scen, n_frames=m_frames, frame_k=k)
        args = [(sub, scnr_db, i, j, spec.seed) for j in range(spec.trials)]
        sq = np.array(_map_trials(_velocity_trial, args, workers))
        rmse = float(np.sqrt(np.mean(sq)))
        table.add(m_frames, "velocity_rmse_mps", rmse, spec.trials)
        k_cd = k - PREAMBLE_LEN - scen.header_len
        snr = _comm_snr_draws(scen, scnr_db, max(spec.trials, 256),
                              _rng(spec.seed, i, 10**6))
        t = m_frames * k * scen.ts
        table.add(m_frames, "data_rate_bps", data_rate(m_frames, k_cd, scen.ts, t, snr))
        zeta = 10 ** (scnr_db / 10)
        table.add(m_frames, "velocity_crlb_exact_m2s2",
                  crlb_velocity(zeta, "exact", p=PREAMBLE_LEN, m=m_frames, k=k,
                                ts=scen.ts, wavelength=scen.wavelength))
    return table


def _run_linkbudget(spec: ExperimentSpec) -> ResultTable:
    table = ResultTable()
    scen = spec.scenario
    rows = link_budget_sweep(scen.link_budget, spec.sweep, scen.array,
                             scen.symbol_rate,
                             rcs_dbsm=scen.targets[0].rcs_dbsm)
    for rho, (zc, zr) in zip(spec.sweep, rows):
        table.add(rho, "snr_com_db", zc)
        table.add(rho, "scnr_rad_db", zr)
    return table


def _cef_start_for_frame(m: int, k: int, base_delay_symbols: int = 0) -> int:
    """Stream index where a zero-delay echo's a_512 would begin in frame m."""
    return m * k + STF_LEN + base_delay_symbols


def _channel_matrix(y: np.ndarray, m: int, k: int) -> np.ndarray:
    """M x 512 matrix of sliding-mode CEF estimates referenced to TX time."""
    rows = []
    for mm in range(m):
        start = _cef_start_for_frame(mm, k) + 256
        rows.append(estimate_channel_cef(y, start, gated=False))
    return np.array(rows)


def _run_ddmap(spec: ExperimentSpec) -> ResultTable:
    """Multi-target delay-Doppler bench: peaks, widths, and back-mapped physics.

    Beams point at the first target; per-target echo gains follow the
    physical path-gain/beam couplings scaled so the reference (first) target
    sits at the requested SCNR.
    """
    from .airlink import radar_coupling, select_beams

    table = ResultTable()
    scen = spec.scenario
    rng = _rng(spec.seed, 0, 0)
    m, k = scen.n_frames, scen.frame_k
    layout = scen.layout()
    cpi = assemble_cpi(CpiConfig(m, k, scen.ts), layout, seed=spec.seed)

    ref = scen.targets[0]
    beams = select_beams(scen.array, ref.azimuth_deg, ref.elevation_deg)
    h_ref = abs(radar_coupling(ref, scen.array, beams, 0.0))
    # normalize all couplings by the reference magnitude, then pin the SCNR
    scnr_db = spec.sweep[0] if len(spec.sweep) else 20.0
    sigma_cn2 = 1.0 / 10 ** (scnr_db / 10)
    nc = NoiseClutterSpec(noise_power=sigma_cn2)

    scaled = np.asarray(cpi, dtype=complex) / h_ref
    y = synthesize_radar_rx_symbol_rate(
        scaled, scen.targets, nc, scen.array, beams, scen.ts, rng,
        unit_gains=False, rolloff=scen.rolloff, span=scen.rrc_span,
    )

    h = _channel_matrix(y, m, k)
    ddm = build_delay_doppler_map(h, zero_pad=scen.zero_pad, ts=scen.ts,
                                  frame_len=k, wavelength=scen.wavelength)
    bin_noise_var = sigma_cn2 / (2 * 512)
    dets = detect_targets_map(ddm, spec.pfa, bin_noise_var)

    for i, d in enumerate(dets[:8]):
        table.add(i, "delay_bin", d.delay_bin)
        table.add(i, "doppler_bin", d.doppler_bin)
        table.add(i, "range_m", d.range_m)
        table.add(i, "velocity_mps", d.velocity_mps)
        table.add(i, "power_db", 10 * np.log10(d.power / dets[0].power))

    if dets:
        dl, dw = _mainlobe_widths(ddm, dets[0])
        table.add(0, "delay_3db_bins", dl)
        table.add(0, "doppler_3db_bins", dw)
        table.add(0, "velocity_3db_mps",
                  dw * scen.wavelength / 2 / (m * k * scen.ts))
    return table


def _mainlobe_widths(ddm, det) -> tuple[float, float]:
    """(delay width in bins, Doppler width in interpolated bins/Z) at -3 dB."""
    power = np.abs(ddm.grid) ** 2
    pk = power[det.delay_bin, det.doppler_bin]
    half = pk / 2

    row = power[:, det.doppler_bin]
    lo = det.delay_bin
    while lo - 1 >= 0 and row[lo - 1] >= half:
        lo -= 1
    hi = det.delay_bin
    while hi + 1 < len(row) and row[hi + 1] >= half:
        hi += 1
    delay_width = hi - lo + 1

    col = power[det.delay_bin, :]
    lo = det.doppler_bin
    while lo - 1 >= 0 and col[lo - 1] >= half:
        lo -= 1
    hi = det.doppler_bin
    while hi + 1 < len(col) and col[hi + 1] >= half:
        hi += 1
    doppler_width = (hi - lo + 1) / ddm.zero_pad
    return float(delay_width), float(doppler_width)


def _run_crlb(spec: ExperimentSpec) -> ResultTable:
    table = ResultTable()
    scen = spec.scenario
    for scnr_db in spec.sweep:
        zeta = 10 ** (scnr_db / 10)
        table.add(scnr_db, "range_crlb_m2",
                  crlb_range(zeta, p=2048, bandwidth=scen.symbol_rate))
        table.add(scnr_db, "velocity_crlb_single_m2s2",
                  crlb_velocity(zeta, "single", p=2048, ts=scen.ts,
                                wavelength=scen.wavelength))
        _velocity_crlb_columns(table, scen, scnr_db)
    return table


def _run_ambiguity(spec: ExperimentSpec) -> ResultTable:
    table = ResultTable()
    scen = spec.scenario
    pair = generate_golay_pair(512)
    waveform = np.concatenate([pair.a, pair.b]).astype(complex)
    lags = np.arange(-64, 65)
    dopplers = np.asarray(spec.doppler_grid or (0.0,), dtype=float)
    amb = ambiguity_function(waveform, lags, dopplers, scen.ts, pair=pair)
    for i, nu in enumerate(dopplers):
        for j, lag in enumerate(lags):
            table.add(int(lag), f"mag@nu={_fmt(nu)}Hz", amb[i, j])
    return table


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> ResultTable:
    """Dispatch an ExperimentSpec to its pipeline and return the ResultTable.

    Results are byte-reproducible for a fixed (spec, seed) regardless of the
    worker count; workers default to 1 or the WLANRADAR_WORKERS env var.
    """
    w = _worker_count(workers)
    if spec.kind == "detection":
        return _run_detection(spec, w)
    if spec.kind == "range-mse":
        return _run_range_mse(spec, w)
    if spec.kind == "velocity-mse":
        return _run_velocity_mse(spec, w)
    if spec.kind == "tradeoff":
        return _run_tradeoff(spec, w)
    if spec.kind == "linkbudget":
        return _run_linkbudget(spec)
    if spec.kind == "ddmap":
        return _run_ddmap(spec)
    if spec.kind == "crlb":
        return _run_crlb(spec)
    if spec.kind == "ambiguity":
        return _run_ambiguity(spec)
    raise AssertionError(f"unhandled kind {spec.kind}")
