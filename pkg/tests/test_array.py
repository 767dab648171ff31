import numpy as np
import pytest

from beamfusion.array import ArrayGeometry, FrequencyGrid, steering_matrix, steering_vector


GEOM = ArrayGeometry(num_mics=8, spacing=0.01, sound_speed=343.0, sample_rate=16000.0)
GRID = FrequencyGrid(512, 16000.0)


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(num_mics=1)
    with pytest.raises(ValueError):
        ArrayGeometry(spacing=0.0)
    assert GEOM.tau0 == pytest.approx(0.01 / 343.0)


def test_grid_bins():
    assert GRID.num_bins == 257
    assert GRID.bin_freq(0) == 0.0
    assert GRID.bin_freq(256) == 8000.0
    with pytest.raises(ValueError):
        FrequencyGrid(511, 16000.0)


def test_broadside_is_all_ones():
    d = steering_vector(GEOM, 3000.0, np.pi / 2)
    np.testing.assert_allclose(d, np.ones(8), atol=1e-12)


def test_two_mic_quarter_wave():
    # f = c/(4 delta) makes omega*tau0 = pi/2, so entry 1 is exactly -j
    geom = ArrayGeometry(num_mics=2, spacing=0.01, sample_rate=40000.0)
    f = 343.0 / (4 * 0.01)
    d = steering_vector(geom, f, 0.0)
    np.testing.assert_allclose(d, [1.0, -1j], atol=1e-12)


def test_scalar_phase_oracle():
    # independent scalar evaluation of each entry's phase
    f, theta = 1000.0, np.radians(45.0)
    d = steering_vector(GEOM, f, theta)
    for m in range(8):
        phase = -m * 2 * np.pi * f * (0.01 / 343.0) * np.cos(theta)
        assert d[m] == pytest.approx(np.cos(phase) + 1j * np.sin(phase), abs=1e-14)


def test_unit_modulus_and_first_entry():
    rng = np.random.default_rng(1)
    for _ in range(20):
        f = rng.uniform(0, 8000)
        th = rng.uniform(0, np.pi)
        d = steering_vector(GEOM, f, th)
        np.testing.assert_allclose(np.abs(d), 1.0, atol=1e-12)
        assert d[0] == 1.0 + 0.0j


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        steering_vector(GEOM, 9000.0, 0.0)
    with pytest.raises(ValueError):
        steering_vector(GEOM, 1000.0, np.nan)


def test_steering_matrix_rows_match_vectors():
    th = np.radians(30.0)
    mat = steering_matrix(GEOM, GRID, th)
    assert mat.shape == (257, 8)
    for k in (0, 1, 64, 256):
        np.testing.assert_allclose(mat[k], steering_vector(GEOM, GRID.bin_freq(k), th),
                                   atol=1e-13)


def test_dc_row_all_ones():
    for th in (0.0, 0.7, np.pi):
        np.testing.assert_allclose(steering_matrix(GEOM, GRID, th)[0], np.ones(8))


def test_endfire_conjugate_symmetry():
    # cos(pi - theta) = -cos(theta) flips every phase sign
    a = steering_matrix(GEOM, GRID, 0.0)
    b = steering_matrix(GEOM, GRID, np.pi)
    np.testing.assert_allclose(a, np.conj(b), atol=1e-12)
