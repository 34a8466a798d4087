"""FFT linear convolution and the chirp-z transform built on it."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * math.pi


def next_pow2(n: int) -> int:
    """Smallest power of two ``>= n`` (and ``>= 1``)."""
    n = int(n)
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def linear_convolve(x, h, axis=-1):
    """Full linear convolution through FFTs zero padded to a power of two."""
    x = np.asarray(x)
    h = np.asarray(h)
    n = x.shape[axis] + h.shape[axis] - 1
    P = next_pow2(n)
    out = np.fft.ifft(np.fft.fft(x, P, axis=axis) * np.fft.fft(h, P, axis=axis), axis=axis)
    return np.take(out, np.arange(n), axis=axis)


def _chirp(t, step):
    # exp(j*step*t^2/2) with the phase reduced mod 2pi before exponentiation
    t = np.asarray(t, dtype=np.int64)
    return np.exp(1j * np.mod(0.5 * step * (t * t).astype(float), TWO_PI))


@lru_cache(maxsize=64)
def _bluestein_plan(n: int, m: int, step: float):
    P = next_pow2(n + m - 1)
    pre = np.conj(_chirp(np.arange(n), step))
    post = np.conj(_chirp(np.arange(m), step))
    kernel_fft = np.fft.fft(_chirp(np.arange(-(n - 1), m), step), P)
    for a in (pre, post, kernel_fft):
        a.setflags(write=False)
    return P, pre, post, kernel_fft


def chirp_z(x, m: int, step: float):
    """Evaluate ``sum_t x[..., t] * exp(-1j * step * t * i)`` for ``i = 0..m-1``.

    Bluestein's identity ``t*i = (t^2 + i^2 - (i - t)^2) / 2`` turns the sum into
    a linear convolution of the pre-chirped input with a chirp of length
    ``n + m - 1``. Both are zero padded to ``2^ceil(log2(n + m - 1))``,
    multiplied in the frequency domain, and the valid window
    ``[n - 1, n - 1 + m)`` of the result is kept. Operates on the last axis.
    """
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    P, pre, post, kernel_fft = _bluestein_plan(n, int(m), float(step))
    conv = np.fft.ifft(np.fft.fft(x * pre, P, axis=-1) * kernel_fft, axis=-1)
    return conv[..., n - 1 : n - 1 + m] * post
