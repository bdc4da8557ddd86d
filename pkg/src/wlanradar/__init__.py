"""Link-level simulator and analysis library for a WLAN-preamble joint
communication-radar system: SC PHY frame synthesis, channel and echo models,
the full radar receiver (detection, range, velocity, delay-Doppler map), and
closed-form CRLB/resolution benchmarks."""

__version__ = "0.1.0"

from .airlink import (
    ArrayConfig,
    LinkBudget,
    NoiseClutterSpec,
    Target,
)
from .dsp import IqStream, RrcSpec
from .frame import CpiConfig, FrameLayout
from .golay import GolayPair, generate_golay_pair

__all__ = [
    "__version__",
    "ArrayConfig",
    "LinkBudget",
    "NoiseClutterSpec",
    "Target",
    "IqStream",
    "RrcSpec",
    "CpiConfig",
    "FrameLayout",
    "GolayPair",
    "generate_golay_pair",
]
