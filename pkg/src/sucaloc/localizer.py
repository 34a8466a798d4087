"""
Low-complexity localizer
========================

Fills one reconstruction grid ``Theta_k`` (angle x distance) per subcarrier,
normalizes each, detects angular peaks on the distance-summed profile, picks
the distance of each peak from the coherent subcarrier sum, and maps grid
indices to polar coordinates.

Two fill paths produce the same numbers:

* direct: the O(N * G_a) backprojection sum per column;
* FFT: the column is a correlation on the circle between the element samples
  and the propagation kernel ``exp(-j k sqrt(r^2 + R^2 - 2 R r cos x))``. The
  kernel is 2*pi periodic and band-limited to about ``k R`` harmonics, so its
  Fourier coefficients come from one FFT of ``M`` circle samples. The element
  samples are projected onto the same harmonics and the product is evaluated
  on the angular grid, both with FFT-based chirp-z transforms. Element pitch
  and grid pitch do not have to be commensurate.

Grid indices are 1-based: angle index
``i = 1..G_a`` maps to ``pi/2 - alpha + 2 alpha i / G_a`` and distance index
``j = 1..G_d`` to ``r_min + (r_max - r_min) j / G_d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backprojection import angular_lobe_width
from .channel import ReceivedSignal
from .errors import InsufficientPeaksError, InvalidConfigError
from .fastconv import chirp_z, next_pow2
from .geometry import SPEED_OF_LIGHT, ArrayConfig, PolarCoord, element_distances

HARMONIC_TAIL_TOL = 1e-12  # FFT round-off floor sits near 1e-14
MAX_HARMONICS = 1 << 18


@dataclass(frozen=True)
class GridSpec:
    """Reconstruction grid: ``g_a`` angles over the sector, ``g_d`` distances."""

    g_a: int
    g_d: int
    r_min: float = 2.0
    r_max: float = 21.0

    def __post_init__(self):
        if self.g_a < 1 or self.g_d < 1:
            raise InvalidConfigError("grid counts must be positive")
        if not (0 < self.r_min < self.r_max):
            raise InvalidConfigError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")

    def validate(self, arr: ArrayConfig):
        if self.g_a <= arr.num_elements:
            raise InvalidConfigError(
                f"angular grid count G_a={self.g_a} must exceed element count N={arr.num_elements}"
            )
        if self.r_min <= arr.radius_m:
            raise InvalidConfigError(f"r_min={self.r_min} must exceed the radius {arr.radius_m}")

    def angles(self, arr: ArrayConfig) -> np.ndarray:
        alpha = arr.half_span_rad
        return math.pi / 2 - alpha + 2 * alpha * np.arange(1, self.g_a + 1) / self.g_a

    def distances(self) -> np.ndarray:
        return self.r_min + (self.r_max - self.r_min) * np.arange(1, self.g_d + 1) / self.g_d

    def angle_step(self, arr: ArrayConfig) -> float:
        return 2 * arr.half_span_rad / self.g_a

    def distance_step(self) -> float:
        return (self.r_max - self.r_min) / self.g_d

    def to_dict(self):
        return {"g_a": self.g_a, "g_d": self.g_d, "r_min": self.r_min, "r_max": self.r_max}

    @classmethod
    def from_dict(cls, data):
        return cls(data["g_a"], data["g_d"], data.get("r_min", 2.0), data.get("r_max", 21.0))


@dataclass(frozen=True)
class AmbiguityStack:
    """``theta[k]`` is the complex G_a x G_d grid of subcarrier row k."""

    theta: np.ndarray = field(compare=False)
    grid: GridSpec

    def __post_init__(self):
        if self.theta.ndim != 3 or self.theta.shape[1:] != (self.grid.g_a, self.grid.g_d):
            raise InvalidConfigError(f"stack shape {self.theta.shape} does not match the grid")

    @property
    def num_subcarriers(self) -> int:
        return self.theta.shape[0]

    def magnitude_sum(self) -> np.ndarray:
        """``sum_k |Theta_k|``, the grid rendered in reconstruction heat maps."""
        return np.abs(self.theta).sum(axis=0)


@dataclass(frozen=True)
class LocalizationResult:
    """Estimated coordinates, their 1-based grid indices, and the angular profile."""

    estimates: list[PolarCoord]
    indices: list[tuple[int, int]]
    profile: np.ndarray = field(compare=False, repr=False)
    stack: AmbiguityStack | None = field(default=None, compare=False, repr=False)


def _kappa(freq):
    return 2 * math.pi * freq / SPEED_OF_LIGHT


def build_kernel(r_j: float, freq: float, arr: ArrayConfig, offsets) -> np.ndarray:
    """Unit-modulus propagation phases ``exp(j k sqrt(r^2 + R^2 - 2 R r cos(offset)))``.

    ``offsets`` are angular differences between an element and a look
    direction; ``r_j`` broadcasts against them.
    """
    R = arr.radius_m
    r = np.asarray(r_j, dtype=float)
    d = np.sqrt(np.maximum(r * r + R * R - 2 * R * r * np.cos(offsets), 0.0))
    return np.exp(1j * _kappa(freq) * d)


def harmonic_count(freq: float, arr: ArrayConfig, r_min: float) -> int:
    """FFT length ``M`` that resolves every kernel harmonic above the tail tolerance.

    The kernel bandwidth is ``k R`` harmonics; beyond it coefficients decay
    like ``(R / r)^|m|``. The estimate is confirmed on the slowest-decaying
    kernel (``r = r_min``) and doubled until the outer quarter of the spectrum
    is negligible.
    """
    R = arr.radius_m
    kR = _kappa(freq) * R
    eta = math.log(r_min / R)
    M = next_pow2(int(2 * (kR + 40.0 / eta + 32)))
    while True:
        x = 2 * math.pi * np.arange(M) / M
        c = np.abs(np.fft.fft(build_kernel(r_min, freq, arr, x))) / M
        m = np.abs(np.fft.fftfreq(M, 1.0 / M))
        if c[m >= 3 * M // 8].max() <= HARMONIC_TAIL_TOL * c.max():
            return M
        if M >= MAX_HARMONICS:
            raise InvalidConfigError(
                f"kernel needs more than {MAX_HARMONICS} harmonics; r_min={r_min} is too close to R={R}"
            )
        M *= 2


def _circle_distances(distances, arr: ArrayConfig, M: int) -> np.ndarray:
    """Distances from each grid ring to ``M`` equispaced points of the array circle."""
    R = arr.radius_m
    r = np.asarray(distances, float)[:, None]
    x = 2 * math.pi * np.arange(M) / M
    return np.sqrt(np.maximum(r * r + R * R - 2 * R * r * np.cos(x)[None, :], 0.0))


def _fill_fft(ybar, arr: ArrayConfig, freq, angles, distances, M, g=None):
    """All requested columns for one subcarrier via harmonic expansion; shape (G_a, len(distances)).

    ``g`` optionally supplies the conjugate kernel samples ``exp(-j k d)`` on
    the ``M``-point circle for every ring.
    """
    N = arr.num_elements
    th = arr.angles
    dth = th[1] - th[0]
    dph = angles[1] - angles[0] if len(angles) > 1 else 1.0
    half = M // 2
    m = np.arange(-half, half)
    n = np.arange(N)
    # projection of the element samples on harmonic m: sum_n ybar_n exp(j m th_n)
    Y = chirp_z(ybar * np.exp(-1j * half * n * dth), M, -dth) * np.exp(1j * m * th[0])
    # harmonics of the conjugate kernel exp(-j k d(x)) on the circle
    if g is None:
        g = np.exp(-1j * _kappa(freq) * _circle_distances(distances, arr, M))
    c = np.fft.fftshift(np.fft.fft(g, axis=-1), axes=-1) / M
    a = c * (Y * np.exp(-1j * m * angles[0]))
    i = np.arange(len(angles))
    out = chirp_z(a, len(angles), dph) * np.exp(1j * half * i * dph)
    return out.T


def fill_column_direct(y_k, s_k, arr: ArrayConfig, f_k: float, grid: GridSpec, j: int) -> np.ndarray:
    """Column ``j`` (1-based) of ``Theta_k`` by the direct backprojection sum."""
    if not 1 <= j <= grid.g_d:
        raise IndexError(f"distance index {j} outside 1..{grid.g_d}")
    ybar = np.asarray(y_k, dtype=complex) * np.conj(s_k)
    r = grid.distances()[j - 1]
    d = element_distances(r, grid.angles(arr), arr.radius_m, arr.angles)
    return np.exp(-1j * _kappa(f_k) * d) @ ybar


def fill_column_fft(y_k, s_k, arr: ArrayConfig, f_k: float, grid: GridSpec, j: int, M: int | None = None):
    """Column ``j`` (1-based) of ``Theta_k`` through FFTs; matches the direct fill."""
    grid.validate(arr)
    if not 1 <= j <= grid.g_d:
        raise IndexError(f"distance index {j} outside 1..{grid.g_d}")
    ybar = np.asarray(y_k, dtype=complex) * np.conj(s_k)
    r = grid.distances()[j - 1]
    if M is None:
        M = harmonic_count(f_k, arr, r)
    return _fill_fft(ybar, arr, f_k, grid.angles(arr), [r], M)[:, 0]


def fill_stack(y: ReceivedSignal, grid: GridSpec, use_fft: bool = True) -> AmbiguityStack:
    """Unnormalized ``Theta_k`` for every subcarrier row of ``y``."""
    arr = y.array
    grid.validate(arr)
    freqs = y.frequencies
    ybar = y.samples * np.conj(y.pilot)[:, None]
    angles = grid.angles(arr)
    dist = grid.distances()
    K = len(freqs)
    theta = np.empty((K, grid.g_a, grid.g_d), dtype=complex)
    kap = 2 * math.pi * freqs / SPEED_OF_LIGHT
    dk = np.diff(kap)
    # uniformly spaced rows: advance phase matrices by one multiply per subcarrier
    uniform = K > 1 and np.allclose(dk, dk.mean(), rtol=0, atol=1e-12 * np.abs(kap).max())
    if use_fft:
        M = harmonic_count(float(freqs.max()), arr, float(dist.min()))
        if uniform:
            d = _circle_distances(dist, arr, M)
            g = np.exp(-1j * kap[0] * d)
            step = np.exp(-1j * dk.mean() * d)
        for k in range(K):
            if uniform and k:
                g *= step
            theta[k] = _fill_fft(ybar[k], arr, freqs[k], angles, dist, M, g if uniform else None)
    else:
        cosd = np.cos(arr.angles[None, :] - angles[:, None])
        R = arr.radius_m
        for j, r in enumerate(dist):
            d = np.sqrt(r * r + R * R - 2 * R * r * cosd)
            if uniform:
                E = np.exp(-1j * kap[0] * d)
                step = np.exp(-1j * dk.mean() * d)
                for k in range(K):
                    if k:
                        E *= step
                    theta[k, :, j] = E @ ybar[k]
            else:
                for k in range(K):
                    theta[k, :, j] = np.exp(-1j * kap[k] * d) @ ybar[k]
    return AmbiguityStack(theta, grid)


def normalize(stack: AmbiguityStack) -> AmbiguityStack:
    """Divide each ``Theta_k`` by its own peak magnitude; all-zero grids pass through."""
    peak = np.abs(stack.theta).max(axis=(1, 2))
    scale = np.where(peak > 0, peak, 1.0)
    return AmbiguityStack(stack.theta / scale[:, None, None], stack.grid)


def angular_profile(stack: AmbiguityStack) -> np.ndarray:
    """``sum_k sum_j |Theta_k[i, j]|`` for every angle index."""
    return np.abs(stack.theta).sum(axis=(0, 2))


def find_peaks(profile, count: int, min_separation: int = 1, threshold: float | None = None) -> list[int]:
    """Indices (0-based) of the ``count`` largest local maxima, largest first.

    A local maximum is strictly above both neighbours; a plateau counts once,
    at its lowest index, and the ends of the profile only need to beat their
    single neighbour. Accepted peaks are at least ``min_separation`` cells
    apart. With ``threshold`` set, only peaks of at least
    ``threshold * max(profile)`` qualify.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    p = np.asarray(profile, dtype=float)
    n = len(p)
    cands = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and p[j + 1] == p[i]:
            j += 1
        left_ok = i == 0 or p[i - 1] < p[i]
        right_ok = j == n - 1 or p[j + 1] < p[i]
        if left_ok and right_ok and n > 1:
            cands.append(i)
        i = j + 1
    if threshold is not None and n:
        cands = [c for c in cands if p[c] >= threshold * p.max()]
    cands.sort(key=lambda c: (-p[c], c))
    chosen: list[int] = []
    for c in cands:
        if all(abs(c - q) >= min_separation for q in chosen):
            chosen.append(c)
        if len(chosen) == count:
            return chosen
    raise InsufficientPeaksError(count, len(chosen))


def count_peaks(profile, threshold: float, min_separation: int = 1) -> int:
    """Number of well-separated peaks above ``threshold * max``, for picking ``L``."""
    try:
        return len(find_peaks(profile, len(profile), min_separation, threshold))
    except InsufficientPeaksError as exc:
        return exc.found


def distance_index(stack: AmbiguityStack, i: int) -> int:
    """Distance index (1-based) maximizing ``|sum_k Theta_k[i, j]|`` for angle index ``i`` (1-based)."""
    if not 1 <= i <= stack.grid.g_a:
        raise IndexError(f"angle index {i} outside 1..{stack.grid.g_a}")
    return int(np.argmax(np.abs(stack.theta[:, i - 1, :].sum(axis=0)))) + 1


def index_to_coord(i: int, j: int, grid: GridSpec, arr: ArrayConfig) -> PolarCoord:
    """``phi = pi/2 - alpha + 2 alpha i / G_a``, ``r = r_min + (r_max - r_min) j / G_d``."""
    if not (1 <= i <= grid.g_a and 1 <= j <= grid.g_d):
        raise IndexError(f"grid index ({i}, {j}) outside 1..{grid.g_a} x 1..{grid.g_d}")
    alpha = arr.half_span_rad
    phi = math.pi / 2 - alpha + 2 * alpha * i / grid.g_a
    r = grid.r_min + (grid.r_max - grid.r_min) * j / grid.g_d
    return PolarCoord(r, phi)


def default_min_separation(arr: ArrayConfig, grid: GridSpec, freq: float) -> int:
    """One angular main lobe expressed in grid cells."""
    width = angular_lobe_width(freq, arr.radius_m, arr.half_span_rad)
    return max(1, math.ceil(width / grid.angle_step(arr)))


def localize(
    y: ReceivedSignal,
    grid: GridSpec,
    L: int = 0,
    use_fft: bool = True,
    min_separation: int | None = None,
    threshold: float | None = None,
    keep_stack: bool = False,
) -> LocalizationResult:
    """Estimate the UE and ``L`` scatterer positions from one OFDM symbol."""
    arr = y.array
    stack = normalize(fill_stack(y, grid, use_fft=use_fft))
    profile = angular_profile(stack)
    if min_separation is None:
        min_separation = default_min_separation(arr, grid, y.ofdm.f_c)
    peaks = find_peaks(profile, L + 1, min_separation, threshold)
    indices = []
    estimates = []
    for p in peaks:
        i = p + 1
        j = distance_index(stack, i)
        indices.append((i, j))
        estimates.append(index_to_coord(i, j, grid, arr))
    return LocalizationResult(estimates, indices, profile, stack if keep_stack else None)
