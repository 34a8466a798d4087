"""
Near-field MUSIC baseline
=========================

Conventional 2D MUSIC over the same (angle, distance) grid as the
backprojection localizer. Subcarriers are treated as snapshots and steering
vectors are evaluated at the carrier frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ReceivedSignal
from .errors import InvalidConfigError, SucaError
from .geometry import SPEED_OF_LIGHT, ArrayConfig, PolarCoord, element_distances
from .localizer import (
    GridSpec,
    LocalizationResult,
    default_min_separation,
    find_peaks,
    index_to_coord,
)

DENOMINATOR_FLOOR = 1e-18


@dataclass(frozen=True)
class MusicConfig:
    grid: GridSpec
    source_count: int = 1
    f_steer: float | None = None  # defaults to the carrier of the signal
    amplitude_taper: bool = True

    def validate(self, arr: ArrayConfig):
        if not 1 <= self.source_count < arr.num_elements:
            raise InvalidConfigError(
                f"source count {self.source_count} must lie in 1..N-1 (N={arr.num_elements})"
            )


def sample_covariance(y: ReceivedSignal) -> np.ndarray:
    """``(1/K) sum_k y_k y_k^H`` over subcarrier snapshots."""
    Y = np.asarray(y.samples if isinstance(y, ReceivedSignal) else y, dtype=complex)
    cov = Y.T @ Y.conj() / Y.shape[0]
    return 0.5 * (cov + cov.conj().T)


def steering_vector(arr: ArrayConfig, f_c: float, p: PolarCoord, amplitude_taper: bool = True) -> np.ndarray:
    """Spherical-wave steering ``exp(j k d_n) / d_n`` (or phase only)."""
    return steering_matrix(arr, f_c, p.r, np.array([p.phi]), amplitude_taper)[0]


def steering_matrix(arr: ArrayConfig, f_c, r, phis, amplitude_taper=True):
    d = element_distances(r, phis, arr.radius_m, arr.angles)
    a = np.exp(1j * 2 * math.pi * f_c / SPEED_OF_LIGHT * d)
    return a / d if amplitude_taper else a


def eigh_descending(cov):
    """Eigenvalues (non-increasing) and matching eigenvectors of a Hermitian matrix."""
    try:
        w, v = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise SucaError(f"eigendecomposition failed: {exc}") from exc
    return w[::-1], v[:, ::-1]


def noise_subspace(cov, source_count: int) -> np.ndarray:
    _, v = eigh_descending(cov)
    # contiguous copy keeps the projection on the BLAS path
    return np.ascontiguousarray(v[:, source_count:])


def music_spectrum(cov, arr: ArrayConfig, cfg: MusicConfig, f_steer: float) -> np.ndarray:
    """Pseudo-spectrum ``1 / ||E_n^H a||^2`` on the G_a x G_d grid, ``a`` unit-norm."""
    cfg.validate(arr)
    En = noise_subspace(cov, cfg.source_count)
    grid = cfg.grid
    phis = grid.angles(arr)
    out = np.empty((grid.g_a, grid.g_d))
    for j, r in enumerate(grid.distances()):
        A = steering_matrix(arr, f_steer, r, phis, cfg.amplitude_taper)
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        proj = A.conj() @ En
        den = np.einsum("ij,ij->i", proj, proj.conj()).real
        out[:, j] = 1.0 / np.maximum(den, DENOMINATOR_FLOOR)
    return out


def music_localize(y: ReceivedSignal, cfg: MusicConfig, min_separation: int | None = None) -> LocalizationResult:
    """Peaks of the angular max-projection, then the best distance per peak angle."""
    arr = y.array
    cfg.grid.validate(arr)
    f_steer = y.ofdm.f_c if cfg.f_steer is None else cfg.f_steer
    spec = music_spectrum(sample_covariance(y), arr, cfg, f_steer)
    profile = spec.max(axis=1)
    if min_separation is None:
        min_separation = default_min_separation(arr, cfg.grid, y.ofdm.f_c)
    peaks = find_peaks(profile, cfg.source_count, min_separation)
    indices = [(p + 1, int(np.argmax(spec[p])) + 1) for p in peaks]
    estimates = [index_to_coord(i, j, cfg.grid, arr) for i, j in indices]
    return LocalizationResult(estimates, indices, profile)
