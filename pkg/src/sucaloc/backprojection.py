"""
Backprojection ambiguity function and reconstruction patterns
=============================================================

``ambiguity_direct`` is the reference evaluation: received samples times the
conjugate propagation phase to a candidate point, summed over elements. The
rest of the module covers the per-path term under the binomial distance
approximation, the integral-form angular and distance patterns (evaluated by
adaptive quadrature, never by special functions), the analytic lobe widths,
and helpers that measure lobe widths on sampled patterns.
"""

from __future__ import annotations

import csv
import math
import warnings
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.signal import argrelextrema

from .errors import QuadratureError
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayConfig,
    PolarCoord,
    approx_element_distances,
    element_distances,
    wavelength,
)
from .channel import OfdmConfig, PathSpec

QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200


class PatternSample(NamedTuple):
    abscissa: float
    magnitude: float


def _kappa(freq):
    return 2 * math.pi * freq / SPEED_OF_LIGHT


def ambiguity_direct(y, pilot, arr: ArrayConfig, freq: float, p: PolarCoord) -> complex:
    """Backprojected value at ``p`` for one subcarrier.

    Parameters
    ----------
    y : array_like, shape (N,)
        Received samples of the subcarrier.
    pilot : complex
        Pilot symbol of the subcarrier (unit modulus).
    freq : float
        Subcarrier frequency in Hz.
    """
    return complex(ambiguity_map(y, pilot, arr, freq, p.r, p.phi))


def ambiguity_map(y, pilot, arr: ArrayConfig, freq, r, phi):
    """Vectorized ``ambiguity_direct`` over broadcast arrays ``r`` and ``phi``."""
    ybar = np.asarray(y, dtype=complex) * np.conj(pilot)
    d = element_distances(r, phi, arr.radius_m, arr.angles)
    return np.exp(-1j * _kappa(freq) * d) @ ybar


def path_component(arr: ArrayConfig, freq: float, p: PolarCoord, path: PathSpec) -> complex:
    """Contribution of one path to the ambiguity function under the binomial approximation.

    Besides the angular phase term this keeps the common distance phase
    ``exp(j k (r_l + R^2/2r_l - r - R^2/2r))``; it has unit modulus, so
    magnitudes do not depend on ``p.r``.
    """
    return complex(path_component_map(arr, freq, p.r, p.phi, path.coord))


def path_component_map(arr: ArrayConfig, freq, r, phi, target: PolarCoord):
    R = arr.radius_m
    k = _kappa(freq)
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    rl, pl = target.r, target.phi
    z = 2 * k * R * np.sin((pl - phi) / 2)
    arg = arr.angles - ((pl + phi) / 2)[..., None]
    den = approx_element_distances(rl, pl, R, arr.angles)
    terms = np.exp(1j * z[..., None] * np.sin(arg)) / den
    common = np.exp(1j * k * (rl + R * R / (2 * rl) - r - R * R / (2 * r)))
    return common * terms.sum(axis=-1)


def cauchy_schwarz_bound(arr: ArrayConfig, path: PathSpec) -> float:
    """Upper bound on ``|path_component|^2``; attained at the path's own azimuth."""
    den = approx_element_distances(path.coord.r, path.coord.phi, arr.radius_m, arr.angles)
    s = float(np.sum(1.0 / den))
    return s * s


def _quad(func, a, b, what):
    """Adaptive quadrature of a complex integrand; raises on non-convergence."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(
            func,
            a,
            b,
            complex_func=True,
            epsabs=QUAD_EPSABS,
            epsrel=QUAD_EPSREL,
            limit=QUAD_LIMIT,
            full_output=True,
        )
    # each part is (infodict,) on success and (infodict, message, ...) on a QUADPACK warning
    bad = {part: res[1] for part, res in info.items() if isinstance(res, tuple) and len(res) > 1}
    if bad:
        raise QuadratureError(
            f"quadrature did not converge for {what}: {bad}",
            {"interval": (a, b), "estimate": val, "error_estimate": err, "messages": bad},
        )
    return val


def _angular_value(arr: ArrayConfig, freq, r_l, phi_l, phi):
    R = arr.radius_m
    z = 2 * _kappa(freq) * R * math.sin((phi_l - phi) / 2)
    mid = (phi_l + phi) / 2
    a, b = arr.sector
    val = _quad(lambda t: np.exp(1j * z * math.sin(t - mid)) / r_l, a, b, f"phi={phi}")
    return abs(val)


def angular_pattern(arr: ArrayConfig, freq, r_l, phi_l, phi_grid) -> list[PatternSample]:
    """Integral-form angular pattern ``|int exp(j z sin(t - (phi_l+phi)/2)) / r_l dt|``.

    The integral runs over the sector; ``z = (4 pi f R / c) sin((phi_l - phi)/2)``.
    Magnitudes are raw (not normalized).
    """
    return [PatternSample(float(p), _angular_value(arr, freq, r_l, phi_l, float(p))) for p in phi_grid]


def discrete_angular_pattern(arr: ArrayConfig, freq, r_l, phi_l, phi_grid) -> list[PatternSample]:
    """``|path_component|`` over an azimuth grid at ``r = r_l``."""
    vals = np.abs(path_component_map(arr, freq, r_l, np.asarray(phi_grid, float), PolarCoord(r_l, phi_l)))
    return [PatternSample(float(p), float(v)) for p, v in zip(phi_grid, vals)]


def angular_lobe_width(freq, R, alpha, m: int = 1) -> float:
    """``m * lambda / (2 R sin(alpha))``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return m * wavelength(freq) / (2 * R * math.sin(alpha))


def _distance_integrand_den(arr: ArrayConfig, r_l, phi_l):
    R = arr.radius_m
    A = r_l + R * R / (2 * r_l)
    return lambda t: A - R * math.cos(t - phi_l)


def distance_pattern_single(arr: ArrayConfig, freq, r_l, phi_l, r_grid) -> list[PatternSample]:
    """Single-subcarrier distance pattern at ``phi = phi_l``, one quadrature per grid point."""
    R = arr.radius_m
    k = _kappa(freq)
    den = _distance_integrand_den(arr, r_l, phi_l)
    a, b = arr.sector
    out = []
    for r in r_grid:
        r = float(r)
        ph = k * (r_l + R * R / (2 * r_l) - r - R * R / (2 * r))
        val = _quad(lambda t: np.exp(1j * ph) / den(t), a, b, f"r={r}")
        out.append(PatternSample(r, abs(val)))
    return out


def distance_constant(arr: ArrayConfig, r_l, phi_l) -> float:
    """Closed form of the single-subcarrier distance pattern level.

    ``int dt / (A - R cos(t - phi_l))`` over the sector with
    ``A = r_l + R^2/(2 r_l)``, using the antiderivative
    ``2/sqrt(A^2-R^2) * atan(sqrt((A+R)/(A-R)) tan((t-phi_l)/2))``.
    Valid while ``|t - phi_l| < pi`` on the sector, which holds for targets inside it.
    """
    R = arr.radius_m
    A = r_l + R * R / (2 * r_l)
    s = math.sqrt(A * A - R * R)
    q = math.sqrt((A + R) / (A - R))
    a, b = arr.sector

    def F(t):
        return 2 / s * math.atan(q * math.tan((t - phi_l) / 2))

    return F(b) - F(a)


def distance_pattern_multi(arr: ArrayConfig, cfg: OfdmConfig, r_l, phi_l, r_grid) -> list[PatternSample]:
    """``|sum_k F_k(r)|`` at ``phi = phi_l`` over all K subcarriers.

    The sector integral does not depend on the subcarrier, so it is computed
    once by quadrature and combined with the per-subcarrier distance phases.
    """
    R = arr.radius_m
    den = _distance_integrand_den(arr, r_l, phi_l)
    a, b = arr.sector
    C = _quad(lambda t: 1.0 / den(t), a, b, "distance pattern level").real
    r = np.asarray(r_grid, dtype=float)
    dr = r_l + R * R / (2 * r_l) - r - R * R / (2 * r)
    kap = 2 * math.pi * cfg.frequencies / SPEED_OF_LIGHT
    total = np.abs(C * np.exp(1j * np.outer(dr, kap)).sum(axis=1))
    return [PatternSample(float(x), float(v)) for x, v in zip(r, total)]


def distance_lobe_width(cfg: OfdmConfig) -> float:
    """Null-to-null main-lobe width ``2c / (K f_scs)`` in meters."""
    return 2 * SPEED_OF_LIGHT / (cfg.num_subcarriers * cfg.f_scs)


# ---------------------------------------------------------------------------
# lobe measurement on sampled patterns


def _split(samples):
    x = np.array([s.abscissa for s in samples], dtype=float)
    y = np.array([s.magnitude for s in samples], dtype=float)
    return x, y


def normalized(samples) -> list[PatternSample]:
    """Scale magnitudes to unit peak (all-zero patterns pass through)."""
    x, y = _split(samples)
    peak = y.max() if len(y) else 0.0
    if peak > 0:
        y = y / peak
    return [PatternSample(float(a), float(b)) for a, b in zip(x, y)]


def _refine(x, y, i):
    """Vertex of the parabola through samples i-1, i, i+1."""
    if i <= 0 or i >= len(y) - 1:
        return x[i]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2 * y1 + y2
    if den == 0:
        return x[i]
    return x[i] + 0.5 * (y0 - y2) / den * (x[i + 1] - x[i])


def extrema_offsets(samples, center=None):
    """Local extrema on each side of the main peak, as offsets from it.

    Returns ``(right, left)`` lists of ``(offset, kind)`` sorted outward, with
    ``kind`` "min" or "max"; positions are refined by parabolic interpolation.
    """
    x, y = _split(samples)
    ipk = int(np.argmax(y))
    xc = _refine(x, y, ipk) if center is None else center
    mins = argrelextrema(y, np.less)[0]
    maxs = argrelextrema(y, np.greater)[0]
    ext = sorted([(i, "min") for i in mins] + [(i, "max") for i in maxs if i != ipk])
    right = [(_refine(x, y, i) - xc, kind) for i, kind in ext if i > ipk]
    left = [(xc - _refine(x, y, i), kind) for i, kind in reversed(ext) if i < ipk]
    return right, left


def null_to_null_width(samples) -> float:
    """Distance between the first minima on either side of the global peak."""
    right, left = extrema_offsets(samples)
    r = next(o for o, k in right if k == "min")
    l = next(o for o, k in left if k == "min")
    return r + l


def first_null_offset(samples) -> float:
    """Mean distance from the peak to the first minimum on each side."""
    right, left = extrema_offsets(samples)
    r = next(o for o, k in right if k == "min")
    l = next(o for o, k in left if k == "min")
    return 0.5 * (r + l)


def null_spacing(samples, count: int = 2) -> float:
    """Mean interval between adjacent nulls next to the main lobe.

    Uses the first ``count`` intervals between consecutive minima on each side
    of the peak. This is the interval between zero crossings of the pattern.
    """
    right, left = extrema_offsets(samples)
    gaps = []
    for side in (right, left):
        mins = [o for o, k in side if k == "min"]
        gaps.extend(np.diff(mins[: count + 1]))
    if not gaps:
        raise ValueError("pattern has fewer than two nulls on each side")
    return float(np.mean(gaps))


def write_pattern_csv(path, samples, unit: str, normalize: bool = True, provenance: str | None = None):
    """Two columns: abscissa and (normalized) magnitude; header names the unit."""
    rows = normalized(samples) if normalize else list(samples)
    with open(path, "w", newline="") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        w = csv.writer(fh)
        w.writerow([f"abscissa_{unit}", "magnitude_normalized" if normalize else "magnitude"])
        for s in rows:
            w.writerow([repr(float(s.abscissa)), repr(float(s.magnitude))])
