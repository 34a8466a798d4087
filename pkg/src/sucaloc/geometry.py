"""
sUCA geometry
=============

Polar coordinates, the sectored uniform circular array, element distances and
the minimum-antenna calculators that keep grating lobes out of the sector.

Angles are radians throughout. Element indices ``n`` are 1-based to match the
usual array notation (``n = 1..N``); vectorized helpers work on 0-based numpy
arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidConfigError

SPEED_OF_LIGHT = 299_792_458.0
TWO_PI = 2.0 * math.pi


def wavelength(freq_hz: float) -> float:
    """Free-space wavelength in meters for a frequency in Hz."""
    if freq_hz <= 0:
        raise DomainError(f"frequency must be positive, got {freq_hz}")
    return SPEED_OF_LIGHT / freq_hz


def wrap_angle(phi):
    """Map an angle (or array of angles) into [0, 2*pi)."""
    out = np.mod(phi, TWO_PI)
    # np.mod can return 2*pi for tiny negative inputs
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PolarCoord:
    """Point in the array plane, ``r`` meters from the sUCA center at azimuth ``phi``."""

    r: float
    phi: float

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise DomainError(f"polar radius must be positive and finite, got {self.r}")
        if not math.isfinite(self.phi):
            raise DomainError(f"azimuth must be finite, got {self.phi}")
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "phi", wrap_angle(float(self.phi)))

    def to_dict(self):
        return {"r": self.r, "phi": self.phi}

    @classmethod
    def from_dict(cls, data):
        return cls(r=data["r"], phi=data["phi"])


@dataclass(frozen=True)
class ArrayConfig:
    """Sectored UCA: ``num_elements`` antennas on an arc of radius ``radius_m``.

    The arc spans ``[pi/2 - half_span_rad, pi/2 + half_span_rad]``, endpoints
    included.
    """

    radius_m: float
    half_span_rad: float
    num_elements: int
    _angles: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.radius_m > 0 and math.isfinite(self.radius_m)):
            raise InvalidConfigError(f"radius must be positive, got {self.radius_m}")
        if not (0 < self.half_span_rad < math.pi / 2):
            raise InvalidConfigError(
                f"half span must lie in (0, pi/2), got {self.half_span_rad}"
            )
        if int(self.num_elements) != self.num_elements or self.num_elements < 2:
            raise InvalidConfigError(
                f"need an integer element count >= 2, got {self.num_elements}"
            )
        object.__setattr__(self, "num_elements", int(self.num_elements))
        angles = element_angles(self)
        angles.setflags(write=False)
        object.__setattr__(self, "_angles", angles)

    @property
    def angles(self) -> np.ndarray:
        """Element azimuths, strictly increasing (read-only array)."""
        return self._angles

    @property
    def y0(self) -> float:
        """Offset ``R cos(alpha)`` of the edge elements from the array center's x-axis."""
        return self.radius_m * math.cos(self.half_span_rad)

    @property
    def sector(self) -> tuple[float, float]:
        return (math.pi / 2 - self.half_span_rad, math.pi / 2 + self.half_span_rad)

    def to_dict(self):
        return {
            "radius_m": self.radius_m,
            "half_span_rad": self.half_span_rad,
            "num_elements": self.num_elements,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["radius_m"], data["half_span_rad"], data["num_elements"])


def element_angles(config: ArrayConfig) -> np.ndarray:
    """Uniform element azimuths over the sector with both endpoints included."""
    n = config.num_elements
    if n < 2:
        raise InvalidConfigError(f"need at least 2 elements, got {n}")
    alpha = config.half_span_rad
    return math.pi / 2 - alpha + 2 * alpha * np.arange(n) / (n - 1)


def _element(config: ArrayConfig, n: int) -> float:
    if not 1 <= n <= config.num_elements:
        raise IndexError(f"element index {n} outside 1..{config.num_elements}")
    return float(config.angles[n - 1])


def exact_distance(p: PolarCoord, config: ArrayConfig, n: int) -> float:
    """Euclidean distance from ``p`` to element ``n`` (1-based)."""
    R = config.radius_m
    d2 = p.r * p.r + R * R - 2 * R * p.r * math.cos(_element(config, n) - p.phi)
    return math.sqrt(max(d2, 0.0))


def approx_distance(p: PolarCoord, config: ArrayConfig, n: int) -> float:
    """Binomial (Fresnel-style) approximation ``r + R^2/(2r) - R cos(theta_n - phi)``."""
    R = config.radius_m
    return p.r + R * R / (2 * p.r) - R * math.cos(_element(config, n) - p.phi)


def element_distances(r, phi, radius, angles):
    """Exact distances with broadcasting; trailing axis indexes the elements."""
    r = np.asarray(r, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    d2 = r * r + radius * radius - 2 * radius * r * np.cos(angles - phi)
    return np.sqrt(np.maximum(d2, 0.0))


def approx_element_distances(r, phi, radius, angles):
    r = np.asarray(r, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    return r + radius * radius / (2 * r) - radius * np.cos(angles - phi)


def _check_lengths(R, lam):
    if not (R > 0 and lam > 0):
        raise DomainError(f"radius and wavelength must be positive, got R={R}, lambda={lam}")


def min_antennas_wide(alpha: float, R: float, lam: float) -> int:
    """Minimum element count ``ceil(4 alpha R / lambda)`` for ``pi/4 <= alpha < pi/2``.

    Results below 2 are clamped to 2.
    """
    if not (math.pi / 4 <= alpha < math.pi / 2):
        raise DomainError(
            f"alpha={alpha:.6g} outside [pi/4, pi/2); use min_antennas_narrow for alpha < pi/4"
        )
    _check_lengths(R, lam)
    return max(2, math.ceil(4 * alpha * R / lam))


def min_antennas_narrow(alpha: float, R: float, lam: float) -> int:
    """Minimum element count for a narrow sector, ``0 < alpha < pi/4``.

    Solves ``R cos(2a - 2a/N) - R cos(2a) <= lambda/2`` for N. When
    ``lambda/(2R) + cos 2a >= 1`` any spacing satisfies the constraint and the
    clamp value 2 is returned.
    """
    if not (0 < alpha < math.pi / 4):
        raise DomainError(
            f"alpha={alpha:.6g} outside (0, pi/4); use min_antennas_wide for alpha >= pi/4"
        )
    _check_lengths(R, lam)
    arg = lam / (2 * R) + math.cos(2 * alpha)
    if arg >= 1.0:
        return 2
    return max(2, math.ceil(2 * alpha / (2 * alpha - math.acos(arg))))


def min_antennas(alpha: float, R: float, lam: float) -> int:
    """Dispatch to the wide or narrow formula depending on ``alpha``."""
    if alpha >= math.pi / 4:
        return min_antennas_wide(alpha, R, lam)
    return min_antennas_narrow(alpha, R, lam)


def polar_to_cartesian(p: PolarCoord) -> tuple[float, float]:
    return (p.r * math.cos(p.phi), p.r * math.sin(p.phi))


def cartesian_to_polar(x: float, y: float) -> PolarCoord:
    if x == 0 and y == 0:
        raise DomainError("the origin has no polar representation")
    return PolarCoord(math.hypot(x, y), math.atan2(y, x))
