import cmath
import math

import numpy as np
import pytest

from sucaloc import (
    SPEED_OF_LIGHT,
    InvalidConfigError,
    InvalidSceneError,
    OfdmConfig,
    PathSpec,
    PolarCoord,
    ReceivedSignal,
    Scene,
    channel_vector,
    draw_scene,
    effective_attenuation,
    noise_power_for_snr,
    subcarrier_freq,
    synthesize_received,
)
from sucaloc.channel import channel_matrix, los_signal_power, with_noise_power


def _oracle_channel(scene, arr, cfg, k):
    # scalar loop over elements and paths
    f = cfg.f_c + k * cfg.f_scs
    kap = 2 * math.pi * f / SPEED_OF_LIGHT
    L = scene.num_scatterers
    N = arr.num_elements
    out = []
    for th in arr.angles:
        ex, ey = arr.radius_m * math.cos(th), arr.radius_m * math.sin(th)
        acc = 0j
        for p in scene.paths:
            px, py = p.coord.r * math.cos(p.coord.phi), p.coord.r * math.sin(p.coord.phi)
            d = math.hypot(px - ex, py - ey)
            if p.is_los:
                a = 1.0
            else:
                dl = p.ue_to_scatterer_m
                a = p.gain * cmath.exp(1j * kap * dl) / (dl * math.sqrt(N * L))
            acc += a * cmath.exp(1j * kap * d) / d
        out.append(acc)
    return np.array(out)


@pytest.fixture
def two_path_scene():
    return Scene(
        (
            PathSpec(PolarCoord(6.0, 1.4), is_los=True),
            PathSpec(PolarCoord(9.0, 1.9), gain=0.3 - 0.8j, ue_to_scatterer_m=4.2),
        )
    )


def test_channel_matches_scalar_oracle(two_path_scene, small_array, small_ofdm):
    for k in (1, 4, small_ofdm.K):
        h = channel_vector(two_path_scene, small_array, small_ofdm, k)
        assert np.allclose(h, _oracle_channel(two_path_scene, small_array, small_ofdm, k), rtol=1e-12, atol=0)


def test_channel_is_linear_in_paths(small_array, small_ofdm):
    a = Scene.los_only(PolarCoord(5.0, 1.2))
    b = Scene((PathSpec(PolarCoord(5.0, 1.2), is_los=True), PathSpec(PolarCoord(5.0, 1.2), 1.0, 3.0)))
    nlos_alone = channel_matrix(b, small_array, small_ofdm) - channel_matrix(a, small_array, small_ofdm)
    kap = 2 * math.pi * small_ofdm.frequencies / SPEED_OF_LIGHT
    scale = np.exp(1j * kap * 3.0) / (3.0 * math.sqrt(small_array.num_elements))
    assert np.allclose(nlos_alone, channel_matrix(a, small_array, small_ofdm) * scale[:, None], rtol=1e-12)


def test_los_attenuation_is_one(small_ofdm):
    los = PathSpec(PolarCoord(4.0, 1.0), is_los=True)
    for k in (1, small_ofdm.K):
        assert effective_attenuation(los, small_ofdm, k, 2, 16) == 1.0


def test_nlos_attenuation_value(small_ofdm):
    p = PathSpec(PolarCoord(4.0, 1.0), gain=2.0, ue_to_scatterer_m=5.0)
    f = small_ofdm.f_c + 3 * small_ofdm.f_scs
    expect = 2.0 * cmath.exp(2j * math.pi * f * 5.0 / SPEED_OF_LIGHT) / (5.0 * math.sqrt(16 * 2))
    assert effective_attenuation(p, small_ofdm, 3, 2, 16) == pytest.approx(expect, rel=1e-12)


def test_subcarrier_frequency_convention(small_ofdm):
    assert subcarrier_freq(small_ofdm, 1) == small_ofdm.f_c + small_ofdm.f_scs
    assert subcarrier_freq(small_ofdm, small_ofdm.K) == small_ofdm.f_c + small_ofdm.K * small_ofdm.f_scs
    assert np.allclose(small_ofdm.frequencies, [subcarrier_freq(small_ofdm, k) for k in range(1, 9)])
    with pytest.raises(IndexError):
        subcarrier_freq(small_ofdm, 0)


def test_scene_validation():
    with pytest.raises(InvalidSceneError):
        Scene((PathSpec(PolarCoord(3.0, 1.0)),))
    with pytest.raises(InvalidSceneError):
        Scene((PathSpec(PolarCoord(3.0, 1.0), is_los=True), PathSpec(PolarCoord(4.0, 1.0), is_los=True)))


def test_path_inside_array_rejected(small_array, small_ofdm):
    with pytest.raises(InvalidSceneError):
        channel_matrix(Scene.los_only(PolarCoord(0.5, 1.0)), small_array, small_ofdm)


def test_scene_json_round_trip(two_path_scene):
    again = Scene.from_json(two_path_scene.to_json())
    assert again == two_path_scene


def test_ofdm_config_checks_and_round_trip():
    with pytest.raises(InvalidConfigError):
        OfdmConfig(3.5e9, 0, 1e3)
    with pytest.raises(InvalidConfigError):
        OfdmConfig(3.5e9, 2, 1e3, pilot=[1.0, 0.5])
    with pytest.raises(InvalidConfigError):
        OfdmConfig(3.5e9, 2, 1e3, noise_power=-1)
    cfg = OfdmConfig(28e9, 3, 120e3, 0.1, pilot=np.exp(1j * np.array([0.1, 0.2, 0.3])))
    again = OfdmConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert np.allclose(again.pilot, cfg.pilot)
    assert cfg.bandwidth == pytest.approx(360e3)


def test_noiseless_received_is_channel_times_pilot(two_path_scene, small_array):
    pilot = np.exp(1j * np.linspace(0, 3, 8))
    cfg = OfdmConfig(3.5e9, 8, 480e3, pilot=pilot)
    y = synthesize_received(two_path_scene, small_array, cfg, 7)
    assert np.allclose(y.samples, channel_matrix(two_path_scene, small_array, cfg) * pilot[:, None])


def test_noise_power_and_seed_determinism(small_array):
    cfg = OfdmConfig(3.5e9, 400, 480e3, noise_power=0.25)
    scene = Scene.los_only(PolarCoord(5.0, 1.5))
    y1 = synthesize_received(scene, small_array, cfg, 11)
    y2 = synthesize_received(scene, small_array, cfg, 11)
    y3 = synthesize_received(scene, small_array, cfg, 12)
    assert np.array_equal(y1.samples, y2.samples)
    assert not np.array_equal(y1.samples, y3.samples)
    n = y1.samples - channel_matrix(scene, small_array, cfg)
    assert np.mean(np.abs(n) ** 2) == pytest.approx(0.25, rel=0.05)
    assert abs(np.mean(n.real**2) - np.mean(n.imag**2)) < 0.02


def test_noise_power_for_snr(small_array):
    scene = Scene.los_only(PolarCoord(5.0, 1.5))
    p = los_signal_power(scene.paths[0].coord, small_array)
    h = channel_matrix(scene, small_array, OfdmConfig(3.5e9, 4, 1e5))
    assert p == pytest.approx(np.mean(np.abs(h) ** 2), rel=1e-12)
    assert noise_power_for_snr(scene, small_array, 10.0) == pytest.approx(p / 10)
    assert noise_power_for_snr(scene, small_array, 0.0) == pytest.approx(p)


def test_draw_scene_properties(small_array):
    s1 = draw_scene(5, small_array, 3, (2.0, 21.0))
    assert s1 == draw_scene(5, small_array, 3, (2.0, 21.0))
    assert s1.num_scatterers == 3
    lo, hi = small_array.sector
    ue = s1.paths[0].coord
    for p in s1.paths:
        assert 2.0 <= p.coord.r <= 21.0
        assert lo <= p.coord.phi <= hi
    for p in s1.paths[1:]:
        x = p.coord.r * math.cos(p.coord.phi) - ue.r * math.cos(ue.phi)
        y = p.coord.r * math.sin(p.coord.phi) - ue.r * math.sin(ue.phi)
        assert p.ue_to_scatterer_m == pytest.approx(math.hypot(x, y))
    with pytest.raises(InvalidConfigError):
        draw_scene(0, small_array, 0, (0.5, 3.0))
    with pytest.raises(InvalidConfigError):
        draw_scene(0, small_array, -1)


def test_draw_scene_accepts_seed_sequence(small_array):
    ss = np.random.SeedSequence(3)
    assert draw_scene(ss, small_array) == draw_scene(np.random.SeedSequence(3), small_array)


def test_received_signal_permutation(two_path_scene, small_array, small_ofdm):
    y = synthesize_received(two_path_scene, small_array, small_ofdm, 0)
    order = np.array([3, 1, 0, 2, 7, 6, 5, 4])
    yp = y.permuted(order)
    assert np.array_equal(yp.samples, y.samples[order])
    assert np.array_equal(yp.frequencies, small_ofdm.frequencies[order])
    with pytest.raises(InvalidConfigError):
        ReceivedSignal(np.zeros((2, 2)), small_array, small_ofdm)


def test_with_noise_power(small_ofdm):
    assert with_noise_power(small_ofdm, 0.5).noise_power == 0.5
    assert small_ofdm.noise_power == 0.0
