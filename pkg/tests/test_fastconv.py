import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sucaloc.fastconv import chirp_z, linear_convolve, next_pow2


@pytest.mark.parametrize("n,expect", [(0, 1), (1, 1), (2, 2), (3, 4), (128, 128), (129, 256)])
def test_next_pow2(n, expect):
    assert next_pow2(n) == expect


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 80), st.integers(1, 80), st.integers(0, 2**32 - 1))
def test_linear_convolve_matches_numpy(n, m, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    h = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    ref = np.convolve(x, h)
    assert np.allclose(linear_convolve(x, h), ref, rtol=0, atol=1e-10 * np.abs(ref).max())


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(1, 300), st.floats(1e-4, 3.0), st.integers(0, 2**32 - 1))
def test_chirp_z_matches_direct_sum(n, m, step, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    t = np.arange(n)
    i = np.arange(m)
    ref = np.exp(-1j * step * np.outer(i, t)) @ x
    got = chirp_z(x, m, step)
    assert np.max(np.abs(got - ref)) <= 1e-9 * np.sum(np.abs(x))


def test_chirp_z_full_circle_is_dft():
    x = np.arange(16) + 1j
    assert np.allclose(chirp_z(x, 16, 2 * np.pi / 16), np.fft.fft(x))


def test_chirp_z_batches_over_leading_axes():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 10)) + 0j
    out = chirp_z(x, 7, 0.3)
    for row, r in zip(x, out):
        assert np.allclose(chirp_z(row, 7, 0.3), r)
