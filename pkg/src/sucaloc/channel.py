"""
OFDM uplink signal model
========================

Spherical-wave channel between a UE (line-of-sight path) plus ``L`` scatterers
and the sUCA, received-signal synthesis with AWGN, and random scene generation.

Subcarrier ``k`` (1-based) sits at ``f_c + k * f_scs`` so that adjacent
subcarriers are ``f_scs`` apart and the occupied bandwidth is ``K * f_scs``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfigError, InvalidSceneError
from .geometry import SPEED_OF_LIGHT, ArrayConfig, PolarCoord, element_distances


@dataclass(frozen=True)
class OfdmConfig:
    """Carrier, numerology and noise level of the uplink pilot."""

    f_c: float
    num_subcarriers: int
    f_scs: float
    noise_power: float = 0.0
    pilot: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.f_c > 0 and self.f_scs > 0):
            raise InvalidConfigError("carrier frequency and subcarrier spacing must be positive")
        if int(self.num_subcarriers) != self.num_subcarriers or self.num_subcarriers < 1:
            raise InvalidConfigError(f"need K >= 1 subcarriers, got {self.num_subcarriers}")
        if self.noise_power < 0:
            raise InvalidConfigError(f"noise power must be non-negative, got {self.noise_power}")
        object.__setattr__(self, "num_subcarriers", int(self.num_subcarriers))
        K = self.num_subcarriers
        pilot = np.ones(K, dtype=complex) if self.pilot is None else np.asarray(self.pilot, complex)
        if pilot.shape != (K,):
            raise InvalidConfigError(f"pilot must have length K={K}, got shape {pilot.shape}")
        if not np.allclose(np.abs(pilot), 1.0, rtol=0, atol=1e-12):
            raise InvalidConfigError("pilot symbols must have unit modulus")
        pilot = pilot.copy()
        pilot.setflags(write=False)
        object.__setattr__(self, "pilot", pilot)

    @property
    def K(self) -> int:
        return self.num_subcarriers

    @property
    def bandwidth(self) -> float:
        return self.num_subcarriers * self.f_scs

    @property
    def frequencies(self) -> np.ndarray:
        """All subcarrier frequencies, index 0 holding subcarrier k=1."""
        return self.f_c + self.f_scs * np.arange(1, self.num_subcarriers + 1)

    def to_dict(self):
        return {
            "f_c": self.f_c,
            "num_subcarriers": self.num_subcarriers,
            "f_scs": self.f_scs,
            "noise_power": self.noise_power,
            "pilot": {"re": self.pilot.real.tolist(), "im": self.pilot.imag.tolist()},
        }

    @classmethod
    def from_dict(cls, data):
        pilot = data.get("pilot")
        if pilot is not None:
            pilot = np.asarray(pilot["re"]) + 1j * np.asarray(pilot["im"])
        return cls(
            f_c=data["f_c"],
            num_subcarriers=data["num_subcarriers"],
            f_scs=data["f_scs"],
            noise_power=data.get("noise_power", 0.0),
            pilot=pilot,
        )


@dataclass(frozen=True)
class PathSpec:
    """One propagation path. ``ue_to_scatterer_m`` is ignored for the LoS path."""

    coord: PolarCoord
    gain: complex = 1.0 + 0.0j
    ue_to_scatterer_m: float = 0.0
    is_los: bool = False

    def to_dict(self):
        return {
            "coord": self.coord.to_dict(),
            "gain": {"re": complex(self.gain).real, "im": complex(self.gain).imag},
            "ue_to_scatterer_m": self.ue_to_scatterer_m,
            "is_los": self.is_los,
        }

    @classmethod
    def from_dict(cls, data):
        g = data.get("gain", {"re": 1.0, "im": 0.0})
        return cls(
            coord=PolarCoord.from_dict(data["coord"]),
            gain=complex(g["re"], g["im"]),
            ue_to_scatterer_m=data.get("ue_to_scatterer_m", 0.0),
            is_los=data.get("is_los", False),
        )


@dataclass(frozen=True)
class Scene:
    """Index 0 is the UE (LoS); indices 1..L are scatterers."""

    paths: tuple[PathSpec, ...]

    def __post_init__(self):
        paths = tuple(self.paths)
        if not paths or not paths[0].is_los:
            raise InvalidSceneError("scene must start with the LoS path")
        if any(p.is_los for p in paths[1:]):
            raise InvalidSceneError("scene has more than one LoS path")
        object.__setattr__(self, "paths", paths)

    @property
    def num_scatterers(self) -> int:
        return len(self.paths) - 1

    @property
    def coords(self) -> list[PolarCoord]:
        return [p.coord for p in self.paths]

    @classmethod
    def los_only(cls, coord: PolarCoord) -> "Scene":
        return cls((PathSpec(coord, is_los=True),))

    def to_dict(self):
        return {"paths": [p.to_dict() for p in self.paths]}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(PathSpec.from_dict(p) for p in data["paths"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Scene":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ReceivedSignal:
    """``samples[k, n]``: subcarrier row k (0-based), element column n (0-based).

    ``order`` maps rows to subcarriers of ``ofdm`` when the rows have been
    permuted; ``None`` means natural order.
    """

    samples: np.ndarray = field(compare=False)
    array: ArrayConfig
    ofdm: OfdmConfig
    order: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        shape = (self.ofdm.num_subcarriers, self.array.num_elements)
        if np.shape(self.samples) != shape:
            raise InvalidConfigError(f"samples shape {np.shape(self.samples)} != {shape}")

    def permuted(self, order) -> "ReceivedSignal":
        """Same measurements with subcarrier rows reordered."""
        order = np.asarray(order)
        base = np.arange(self.ofdm.num_subcarriers) if self.order is None else self.order
        return ReceivedSignal(self.samples[order], self.array, self.ofdm, base[order])

    @property
    def frequencies(self) -> np.ndarray:
        f = self.ofdm.frequencies
        return f if self.order is None else f[self.order]

    @property
    def pilot(self) -> np.ndarray:
        s = self.ofdm.pilot
        return s if self.order is None else s[self.order]


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def subcarrier_freq(cfg: OfdmConfig, k: int) -> float:
    """Frequency of subcarrier ``k`` (1-based): ``f_c + k * f_scs``."""
    if not 1 <= k <= cfg.num_subcarriers:
        raise IndexError(f"subcarrier index {k} outside 1..{cfg.num_subcarriers}")
    return cfg.f_c + k * cfg.f_scs


def effective_attenuation(path: PathSpec, cfg: OfdmConfig, k: int, L: int, N: int) -> complex:
    """Per-subcarrier path coefficient; exactly 1 for the LoS path."""
    if path.is_los:
        return 1.0 + 0.0j
    d = path.ue_to_scatterer_m
    if not d > 0:
        raise InvalidSceneError("NLoS path needs a positive UE-to-scatterer distance")
    if L < 1:
        raise InvalidSceneError("NLoS path in a scene without scatterers")
    fk = subcarrier_freq(cfg, k)
    phase = np.exp(1j * 2 * math.pi / SPEED_OF_LIGHT * fk * d)
    return complex(path.gain * phase / (d * math.sqrt(N * L)))


def _check_scene(scene: Scene, arr: ArrayConfig):
    for p in scene.paths:
        if p.coord.r <= arr.radius_m:
            raise InvalidSceneError(
                f"path at r={p.coord.r} lies inside the array circle (R={arr.radius_m})"
            )


def _attenuations(scene: Scene, freqs: np.ndarray, N: int) -> np.ndarray:
    L = scene.num_scatterers
    out = np.empty((len(scene.paths), len(freqs)), dtype=complex)
    for ell, path in enumerate(scene.paths):
        if path.is_los:
            out[ell] = 1.0
            continue
        d = path.ue_to_scatterer_m
        if not d > 0 or L < 1:
            raise InvalidSceneError("NLoS path needs a positive UE-to-scatterer distance")
        out[ell] = path.gain * np.exp(2j * math.pi / SPEED_OF_LIGHT * freqs * d) / (d * math.sqrt(N * L))
    return out


def channel_matrix(scene: Scene, arr: ArrayConfig, cfg: OfdmConfig) -> np.ndarray:
    """Channel for all subcarriers at once, shape ``(K, N)``."""
    _check_scene(scene, arr)
    freqs = cfg.frequencies
    r = np.array([p.coord.r for p in scene.paths])
    phi = np.array([p.coord.phi for p in scene.paths])
    d = element_distances(r, phi, arr.radius_m, arr.angles)  # (paths, N)
    att = _attenuations(scene, freqs, arr.num_elements)  # (paths, K)
    kappa = 2 * math.pi * freqs / SPEED_OF_LIGHT
    prop = np.exp(1j * kappa[None, :, None] * d[:, None, :]) / d[:, None, :]
    return np.einsum("lk,lkn->kn", att, prop)


def channel_vector(scene: Scene, arr: ArrayConfig, cfg: OfdmConfig, k: int) -> np.ndarray:
    """Channel ``h_k`` of subcarrier ``k`` (1-based), length N."""
    subcarrier_freq(cfg, k)
    return channel_matrix(scene, arr, cfg)[k - 1]


def synthesize_received(scene: Scene, arr: ArrayConfig, cfg: OfdmConfig, rng_seed) -> ReceivedSignal:
    """``y_k = h_k s_k + n_k`` with circular complex Gaussian noise of power ``noise_power``.

    The noise draw depends only on ``rng_seed`` and the array/OFDM sizes, so
    re-running with a different noise power scales the same realization.
    """
    h = channel_matrix(scene, arr, cfg)
    y = h * cfg.pilot[:, None]
    rng = np.random.default_rng(_seed_sequence(rng_seed).spawn(2)[1])
    w = (rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)) / math.sqrt(2)
    if cfg.noise_power > 0:
        y = y + math.sqrt(cfg.noise_power) * w
    return ReceivedSignal(y, arr, cfg)


def los_signal_power(coord: PolarCoord, arr: ArrayConfig) -> float:
    """Mean ``|h_k[n] s_k|^2`` of the LoS-only channel (it does not depend on k)."""
    d = element_distances(coord.r, coord.phi, arr.radius_m, arr.angles)
    return float(np.mean(1.0 / d**2))


def noise_power_for_snr(scene: Scene, arr: ArrayConfig, snr_db: float) -> float:
    """Noise power that yields ``snr_db`` relative to the scene's LoS-only channel."""
    return los_signal_power(scene.paths[0].coord, arr) / 10 ** (snr_db / 10)


def draw_scene(rng_seed, arr: ArrayConfig, L: int = 0, r_range=(2.0, 21.0)) -> Scene:
    """Random UE plus ``L`` scatterers, uniform in distance and sector azimuth."""
    lo, hi = map(float, r_range)
    if lo <= arr.radius_m:
        raise InvalidConfigError(f"r_range lower bound {lo} must exceed the radius {arr.radius_m}")
    if hi <= lo:
        raise InvalidConfigError(f"empty distance range {r_range}")
    if L < 0:
        raise InvalidConfigError(f"scatterer count must be >= 0, got {L}")
    pos_seq, gain_seq = _seed_sequence(rng_seed).spawn(2)
    pos = np.random.default_rng(pos_seq)
    gains = np.random.default_rng(gain_seq)
    a_lo, a_hi = arr.sector
    r = pos.uniform(lo, hi, L + 1)
    phi = pos.uniform(a_lo, a_hi, L + 1)
    alpha = (gains.standard_normal(L) + 1j * gains.standard_normal(L)) / math.sqrt(2)
    ue = np.array([r[0] * math.cos(phi[0]), r[0] * math.sin(phi[0])])
    paths = [PathSpec(PolarCoord(r[0], phi[0]), is_los=True)]
    for ell in range(1, L + 1):
        sc = np.array([r[ell] * math.cos(phi[ell]), r[ell] * math.sin(phi[ell])])
        paths.append(
            PathSpec(
                PolarCoord(r[ell], phi[ell]),
                gain=complex(alpha[ell - 1]),
                ue_to_scatterer_m=float(np.linalg.norm(sc - ue)),
            )
        )
    return Scene(tuple(paths))


def with_noise_power(cfg: OfdmConfig, noise_power: float) -> OfdmConfig:
    return replace(cfg, noise_power=noise_power)
