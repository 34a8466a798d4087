import math

import numpy as np
import pytest

from sucaloc import (
    ArrayConfig,
    InsufficientPeaksError,
    InvalidConfigError,
    OfdmConfig,
    PathSpec,
    PolarCoord,
    Scene,
    draw_scene,
    synthesize_received,
)
from sucaloc.localizer import (
    AmbiguityStack,
    GridSpec,
    angular_profile,
    build_kernel,
    count_peaks,
    default_min_separation,
    distance_index,
    fill_column_direct,
    fill_column_fft,
    fill_stack,
    find_peaks,
    harmonic_count,
    index_to_coord,
    localize,
    normalize,
)


def test_grid_mapping_is_one_based(small_array, small_grid):
    phis = small_grid.angles(small_array)
    assert phis[0] == pytest.approx(math.pi / 2 - math.pi / 3 + small_grid.angle_step(small_array))
    assert phis[-1] == pytest.approx(math.pi / 2 + math.pi / 3)
    assert small_grid.distances()[-1] == pytest.approx(12.0)
    c = index_to_coord(1, 1, small_grid, small_array)
    assert c.phi == pytest.approx(phis[0])
    assert c.r == pytest.approx(small_grid.distances()[0])
    with pytest.raises(IndexError):
        index_to_coord(0, 1, small_grid, small_array)


def test_grid_validation(small_array):
    with pytest.raises(InvalidConfigError):
        GridSpec(16, 10).validate(small_array)
    with pytest.raises(InvalidConfigError):
        GridSpec(40, 10, 0.5, 5.0).validate(small_array)
    with pytest.raises(InvalidConfigError):
        GridSpec(40, 10, 5.0, 4.0)
    assert GridSpec.from_dict(GridSpec(40, 10, 3.0, 9.0).to_dict()) == GridSpec(40, 10, 3.0, 9.0)


def test_kernel_is_unit_modulus_and_matches_distance(small_array):
    off = np.linspace(-1, 1, 7)
    k = build_kernel(5.0, 3.5e9, small_array, off)
    assert np.allclose(np.abs(k), 1.0)
    d = math.sqrt(25 + 1 - 10 * math.cos(0.5))
    kap = 2 * math.pi * 3.5e9 / 299792458.0
    assert build_kernel(5.0, 3.5e9, small_array, 0.5) == pytest.approx(np.exp(1j * kap * d))


def test_kernel_conjugate_matched_at_target():
    # correlating with the kernel at r_j = r_0 peaks at the target azimuth
    arr = ArrayConfig(1.0, math.pi / 3, 49)
    cfg = OfdmConfig(3.5e9, 1, 480e3)
    target = PolarCoord(8.0, 1.5)
    y = synthesize_received(Scene.los_only(target), arr, cfg, 0).samples[0]
    grid = GridSpec(2000, 1, 7.0, 8.0)
    col = fill_column_direct(y, 1.0, arr, cfg.frequencies[0], grid, 1)
    phis = grid.angles(arr)
    assert abs(phis[np.argmax(np.abs(col))] - target.phi) <= grid.angle_step(arr)


@pytest.mark.parametrize("seed", range(8))
def test_fft_column_matches_direct(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(4, 65))
    g_a = int(rng.integers(N + 1, 257))
    arr = ArrayConfig(float(rng.uniform(0.3, 2.0)), float(rng.uniform(0.2, 1.5)), N)
    grid = GridSpec(g_a, 5, arr.radius_m * 1.5, arr.radius_m * 10)
    y = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    s = np.exp(1j * rng.uniform(0, 2 * math.pi))
    f = float(rng.uniform(1e9, 10e9))
    for j in (1, 3, 5):
        ref = fill_column_direct(y, s, arr, f, grid, j)
        got = fill_column_fft(y, s, arr, f, grid, j)
        assert np.max(np.abs(got - ref)) / np.max(np.abs(ref)) <= 1e-9


def test_fill_stack_paths_agree(small_array, small_ofdm, small_grid):
    scene = draw_scene(1, small_array, 1, (2.0, 12.0))
    y = synthesize_received(scene, small_array, small_ofdm, 1)
    a = fill_stack(y, small_grid, use_fft=True).theta
    b = fill_stack(y, small_grid, use_fft=False).theta
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(b))


def test_harmonic_count_grows_with_frequency(small_array):
    assert harmonic_count(28e9, small_array, 2.0) > harmonic_count(3.5e9, small_array, 2.0)
    assert harmonic_count(3.5e9, small_array, 1.5) >= harmonic_count(3.5e9, small_array, 5.0)


def test_normalize_per_subcarrier(small_grid):
    theta = np.zeros((3, small_grid.g_a, small_grid.g_d), complex)
    theta[0, 0, 0] = 5
    theta[0, 1, 1] = 2j
    theta[1, 2, 2] = -0.5
    st = normalize(AmbiguityStack(theta, small_grid))
    assert np.abs(st.theta[0]).max() == pytest.approx(1.0)
    assert st.theta[0, 1, 1] == pytest.approx(0.4j)
    assert np.abs(st.theta[1]).max() == pytest.approx(1.0)
    assert np.all(st.theta[2] == 0)
    again = normalize(st)
    assert np.allclose(again.theta, st.theta)


def test_angular_profile_zero_and_permutation(small_grid):
    zero = AmbiguityStack(np.zeros((2, small_grid.g_a, small_grid.g_d), complex), small_grid)
    assert not angular_profile(zero).any()
    rng = np.random.default_rng(0)
    theta = rng.standard_normal((4, small_grid.g_a, small_grid.g_d)) + 0j
    p1 = angular_profile(AmbiguityStack(theta, small_grid))
    p2 = angular_profile(AmbiguityStack(theta[::-1].copy(), small_grid))
    assert np.allclose(p1, p2)
    assert p1[3] == pytest.approx(np.abs(theta[:, 3, :]).sum())


def test_find_peaks_examples():
    assert find_peaks([1, 3, 2, 5, 1], 2, 1) == [3, 1]
    assert find_peaks([1, 2, 3, 4, 5], 1) == [4]
    assert find_peaks([5, 4, 3], 1) == [0]
    assert find_peaks([0, 2, 2, 2, 0], 1) == [1]
    assert find_peaks([0, 5, 0, 4, 0, 3, 0], 2, min_separation=3) == [1, 5]


def test_find_peaks_insufficient():
    with pytest.raises(InsufficientPeaksError) as exc:
        find_peaks([0, 1, 0], 2)
    assert exc.value.found == 1
    assert exc.value.requested == 2
    with pytest.raises(ValueError):
        find_peaks([1, 2], 0)


def test_count_peaks_threshold():
    prof = [0, 10, 0, 6, 0, 1, 0]
    assert count_peaks(prof, 0.5) == 2
    assert count_peaks(prof, 0.05) == 3


def test_distance_index_single_subcarrier(small_grid):
    theta = np.zeros((1, small_grid.g_a, small_grid.g_d), complex)
    theta[0, 4, 7] = 3
    theta[0, 4, 2] = -2
    assert distance_index(AmbiguityStack(theta, small_grid), 5) == 8
    with pytest.raises(IndexError):
        distance_index(AmbiguityStack(theta, small_grid), 0)


def test_distance_index_is_coherent(small_grid):
    theta = np.zeros((2, small_grid.g_a, small_grid.g_d), complex)
    theta[:, 0, 1] = [1, -1]
    theta[:, 0, 5] = [0.6, 0.6]
    assert distance_index(AmbiguityStack(theta, small_grid), 1) == 6


def test_localize_on_grid_target_noiseless():
    arr = ArrayConfig(1.0, math.pi / 3, 49)
    cfg = OfdmConfig(3.5e9, 200, 480e3)
    grid = GridSpec(98, 100, 2.0, 21.0)
    target = index_to_coord(49, 50, grid, arr)
    y = synthesize_received(Scene.los_only(target), arr, cfg, 0)
    res = localize(y, grid)
    assert res.indices == [(49, 50)]
    assert res.estimates[0].r == pytest.approx(target.r)
    assert res.stack is None
    assert localize(y, grid, use_fft=False).indices == [(49, 50)]


def test_localize_two_paths():
    arr = ArrayConfig(1.0, math.pi / 3, 49)
    cfg = OfdmConfig(3.5e9, 200, 480e3)
    grid = GridSpec(98, 100, 2.0, 21.0)
    ue = index_to_coord(30, 40, grid, arr)
    sc = index_to_coord(70, 20, grid, arr)
    d = math.dist(
        (ue.r * math.cos(ue.phi), ue.r * math.sin(ue.phi)), (sc.r * math.cos(sc.phi), sc.r * math.sin(sc.phi))
    )
    scene = Scene((PathSpec(ue, is_los=True), PathSpec(sc, gain=d * math.sqrt(49), ue_to_scatterer_m=d)))
    res = localize(synthesize_received(scene, arr, cfg, 0), grid, L=1, keep_stack=True)
    (i0, j0), (i1, j1) = sorted(res.indices)
    assert (i0, j0) == (30, 40)
    assert abs(i1 - 70) <= 1
    # the scatterer echo carries the extra UE-to-scatterer delay
    assert abs(res.estimates[res.indices.index((i1, j1))].r - (sc.r + d)) <= 2 * grid.distance_step()
    assert res.stack.magnitude_sum().shape == (98, 100)


def test_localize_reports_missing_peaks(small_array, small_ofdm, small_grid):
    y = synthesize_received(Scene.los_only(PolarCoord(5.0, 1.5)), small_array, small_ofdm, 0)
    with pytest.raises(InsufficientPeaksError):
        localize(y, small_grid, L=small_grid.g_a)


def test_default_min_separation(small_array, small_grid):
    assert default_min_separation(small_array, small_grid, 3.5e9) >= 1


def test_direct_fill_phase_recurrence_matches_exponentials(small_array, small_grid):
    # natural row order takes the recurrence, a shuffled order evaluates every exponential
    cfg = OfdmConfig(28e9, 64, 480e3)
    y = synthesize_received(draw_scene(2, small_array, 0, (2.0, 12.0)), small_array, cfg, 2)
    order = np.random.default_rng(0).permutation(64)
    a = fill_stack(y, small_grid, use_fft=False).theta[order]
    b = fill_stack(y.permuted(order), small_grid, use_fft=False).theta
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))
