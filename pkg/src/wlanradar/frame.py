"""SC PHY frame assembly: STF, CEF, header/payload, and CPI grouping.

Frame layout at symbol rate:

    [ STF 2176 | CEF 1152 | header | payload ]   -> K symbols total

STF  = 16 repetitions of a_128 followed by -a_128.
CEF  = [a_512, b_512, -b_128]; the STF's trailing -a_128 doubles as the
       128-sample cyclic-prefix context for CEF processing.

A coherent processing interval (CPI) is M frames of identical length K;
the preamble is bit-identical in every frame while header/payload symbols
are drawn fresh per frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .golay import generate_golay_pair, pi2_rotate

__all__ = [
    "STF_LEN",
    "CEF_LEN",
    "PREAMBLE_LEN",
    "N_CP",
    "CEF_PEAK_BIN",
    "FrameLayout",
    "CpiConfig",
    "build_stf",
    "build_cef",
    "build_preamble",
    "assemble_frame",
    "assemble_cpi",
    "use_golay_override",
    "clear_golay_overrides",
]

STF_LEN = 17 * 128          # 16 x a_128 then -a_128
CEF_LEN = 512 + 512 + 128   # a_512, b_512, -b_128
PREAMBLE_LEN = STF_LEN + CEF_LEN
N_CP = 128                  # cyclic-prefix span honoured by CEF processing
CEF_PEAK_BIN = 256          # on-target channel-estimate bin when synchronized


_overrides: dict = {}


def use_golay_override(length: int, pair) -> None:
    """Substitute a specific complementary pair (e.g. loaded from files) for
    one length; affects every subsequently built STF/CEF/preamble."""
    if len(pair) != length:
        raise ValueError(f"override pair has length {len(pair)}, expected {length}")
    if not pair.is_complementary():
        raise ValueError("override pair fails the complementarity check")
    _overrides[length] = pair
    _cached_pair.cache_clear()


def clear_golay_overrides() -> None:
    _overrides.clear()
    _cached_pair.cache_clear()


@lru_cache(maxsize=None)
def _cached_pair(length: int, _generation: int):
    return _overrides.get(length) or generate_golay_pair(length)


def _pair(length: int):
    return _cached_pair(length, id(_overrides.get(length)))


@dataclass(frozen=True)
class FrameLayout:
    """Symbol-level description of one SC PHY frame."""

    k: int
    header_len: int = 1024

    def __post_init__(self):
        if self.header_len < 0:
            raise ValueError("header_len must be nonnegative")
        if self.k < PREAMBLE_LEN + self.header_len:
            raise ValueError(
                f"K={self.k} too small: need at least preamble ({PREAMBLE_LEN}) "
                f"+ header ({self.header_len}) symbols"
            )

    @property
    def stf_len(self) -> int:
        return STF_LEN

    @property
    def cef_len(self) -> int:
        return CEF_LEN

    @property
    def preamble_len(self) -> int:
        return PREAMBLE_LEN

    @property
    def payload_len(self) -> int:
        return self.k - PREAMBLE_LEN - self.header_len


@dataclass(frozen=True)
class CpiConfig:
    """Coherent processing interval: M frames of K symbols at period Ts."""

    m: int
    k: int
    ts: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a CPI needs at least one frame")
        if self.ts <= 0:
            raise ValueError("symbol period must be positive")

    @property
    def t(self) -> float:
        """CPI duration in seconds, T = M K Ts."""
        return self.m * self.k * self.ts


def build_stf(rotated: bool = False) -> np.ndarray:
    """Short Training Field: [a_128 x16, -a_128], 2176 +-1 symbols."""
    a128 = _pair(128).a
    stf = np.concatenate([np.tile(a128, 16), -a128]).astype(float)
    return pi2_rotate(stf) if rotated else stf


def build_cef(rotated: bool = False) -> np.ndarray:
    """Channel Estimation Field: [a_512, b_512, -b_128], 1152 +-1 symbols."""
    p512 = _pair(512)
    b128 = _pair(128).b
    cef = np.concatenate([p512.a, p512.b, -b128]).astype(float)
    return pi2_rotate(cef) if rotated else cef


def build_preamble(rotated: bool = False) -> np.ndarray:
    if rotated:
        # rotation phase continues across the STF/CEF boundary
        return pi2_rotate(np.concatenate([build_stf(), build_cef()]))
    return np.concatenate([build_stf(), build_cef()])


def _random_symbols(n: int, rng: np.random.Generator, modulation: str) -> np.ndarray:
    if modulation == "bpsk":
        return rng.integers(0, 2, n) * 2.0 - 1.0
    if modulation == "qpsk":
        re = rng.integers(0, 2, n) * 2.0 - 1.0
        im = rng.integers(0, 2, n) * 2.0 - 1.0
        return (re + 1j * im) / np.sqrt(2.0)
    raise ValueError(f"unknown modulation {modulation!r}")


def assemble_frame(
    layout: FrameLayout,
    seed=None,
    modulation: str = "bpsk",
    rotated: bool = False,
) -> np.ndarray:
    """One frame of K unit-energy symbols: preamble, then random header/payload.

    ``seed`` may be an int or a numpy Generator; the same seed reproduces the
    same frame exactly.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    data = _random_symbols(layout.header_len + layout.payload_len, rng, modulation)
    frame = np.concatenate([build_preamble(rotated=rotated), data])
    if frame.ndim != 1 or len(frame) != layout.k:
        raise AssertionError("frame bookkeeping error")
    return frame


def assemble_cpi(
    cfg: CpiConfig,
    layout: FrameLayout,
    seed=None,
    modulation: str = "bpsk",
    rotated: bool = False,
) -> np.ndarray:
    """M concatenated frames; identical preambles, per-frame fresh payloads."""
    if cfg.k != layout.k:
        raise ValueError(f"CpiConfig.k={cfg.k} disagrees with FrameLayout.k={layout.k}")
    streams = np.random.SeedSequence(seed).spawn(cfg.m)
    frames = [
        assemble_frame(layout, np.random.default_rng(s), modulation, rotated)
        for s in streams
    ]
    return np.concatenate(frames)
