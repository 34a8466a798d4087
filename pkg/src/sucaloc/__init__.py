"""Near-field localization with sectored uniform circular arrays (sUCA).

Backprojection on a polar grid, an FFT fill for the reconstruction grids,
resolution calculators, a near-field MUSIC baseline and a Monte-Carlo harness.
"""

__version__ = "0.1.0"

from .errors import (
    DomainError,
    InsufficientPeaksError,
    InvalidConfigError,
    InvalidSceneError,
    QuadratureError,
    SucaError,
)
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    PolarCoord,
    approx_distance,
    cartesian_to_polar,
    element_angles,
    exact_distance,
    min_antennas,
    min_antennas_narrow,
    min_antennas_wide,
    polar_to_cartesian,
    wavelength,
)
from .channel import (
    OfdmConfig,
    PathSpec,
    ReceivedSignal,
    Scene,
    channel_vector,
    draw_scene,
    effective_attenuation,
    noise_power_for_snr,
    subcarrier_freq,
    synthesize_received,
)
from .localizer import (
    AmbiguityStack,
    GridSpec,
    LocalizationResult,
    localize,
)
from .music import MusicConfig, music_localize

__all__ = [
    "SPEED_OF_LIGHT",
    "AmbiguityStack",
    "ArrayConfig",
    "DomainError",
    "GridSpec",
    "InsufficientPeaksError",
    "InvalidConfigError",
    "InvalidSceneError",
    "LocalizationResult",
    "MusicConfig",
    "OfdmConfig",
    "PathSpec",
    "PolarCoord",
    "QuadratureError",
    "ReceivedSignal",
    "Scene",
    "SucaError",
    "approx_distance",
    "cartesian_to_polar",
    "channel_vector",
    "draw_scene",
    "effective_attenuation",
    "element_angles",
    "exact_distance",
    "localize",
    "min_antennas",
    "min_antennas_narrow",
    "min_antennas_wide",
    "music_localize",
    "noise_power_for_snr",
    "polar_to_cartesian",
    "subcarrier_freq",
    "synthesize_received",
    "wavelength",
]
