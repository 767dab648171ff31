import numpy as np
import pytest

from beamfusion.acc import acc_init, acc_run, acc_step
from beamfusion.stft import Spectrogram, StftConfig

CFG = StftConfig()


def test_init_uniform():
    state = acc_init(4, 257)
    assert state.alpha.shape == (257, 4)
    np.testing.assert_array_equal(state.alpha, 0.25)
    state2 = acc_init(2, 257)
    assert state2.alpha.shape == (257, 2)
    np.testing.assert_allclose(state.alpha.sum(axis=1), 1.0, atol=1e-12)


def test_init_validation():
    with pytest.raises(ValueError):
        acc_init(1, 10)
    with pytest.raises(ValueError):
        acc_init(4, 10, step_size=0.0)
    with pytest.raises(ValueError):
        acc_init(4, 10, weight_floor=0.5)


def test_identical_beams_leave_weights_unchanged():
    state = acc_init(4, 16)
    rng = np.random.default_rng(0)
    z = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    frame = np.tile(z[:, None], (1, 4))
    before = state.alpha.copy()
    fused, used = acc_step(state, frame)
    np.testing.assert_array_equal(used, before)
    np.testing.assert_allclose(state.alpha, before, atol=1e-14)
    np.testing.assert_allclose(fused, z, atol=1e-12)


def test_scalar_eg_oracle():
    # independent scalar recursion for P=2, Z0 = 0, Z1 = 1
    mu, floor, steps = 0.1, 1e-4, 1000
    a = np.array([0.5, 0.5])
    oracle = []
    for _ in range(steps):
        fused = a[0] * 0.0 + a[1] * 1.0
        g = 2.0 * np.real(np.conj(fused) * np.array([0.0, 1.0]))
        s = 0.0 ** 2 + 1.0 ** 2 + 1e-12
        a = a * np.exp(-mu * g / s)
        a = np.maximum(a, floor)
        a = a / a.sum()
        oracle.append(a.copy())
    oracle = np.array(oracle)

    state = acc_init(2, 3, mu, floor)
    frame = np.zeros((3, 2), complex)
    frame[:, 1] = 1.0
    traj = []
    for _ in range(steps):
        acc_step(state, frame)
        traj.append(state.alpha[0].copy())
    traj = np.array(traj)
    np.testing.assert_allclose(traj, oracle, atol=1e-10)
    # the silent beam ends up favored and monotonically so
    assert np.all(np.diff(traj[:, 0]) >= -1e-12)
    assert traj[-1, 0] >= 0.99


def test_simplex_every_step():
    rng = np.random.default_rng(5)
    state = acc_init(4, 32)
    for _ in range(50):
        frame = rng.standard_normal((32, 4)) + 1j * rng.standard_normal((32, 4))
        acc_step(state, 5.0 * frame)
        np.testing.assert_allclose(state.alpha.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(state.alpha >= 0)


def test_rejects_bad_frames():
    state = acc_init(4, 8)
    with pytest.raises(ValueError):
        acc_step(state, np.full((8, 4), np.nan, dtype=complex))
    with pytest.raises(ValueError):
        acc_step(state, np.zeros((8, 3), complex))


def test_scale_invariance_of_update():
    rng = np.random.default_rng(9)
    frames = rng.standard_normal((20, 16, 4)) + 1j * rng.standard_normal((20, 16, 4))
    s1 = acc_init(4, 16)
    s2 = acc_init(4, 16)
    for f in frames:
        acc_step(s1, f)
        acc_step(s2, 7.3 * f)
    np.testing.assert_allclose(s1.alpha, s2.alpha, atol=1e-10)


def test_run_single_frame_reduces_to_step():
    rng = np.random.default_rng(2)
    data = rng.standard_normal((1, 257)) + 1j * rng.standard_normal((1, 257))
    beams = [Spectrogram(data * (p + 1), CFG) for p in range(4)]
    fused, traj = acc_run(beams)
    state = acc_init(4, 257)
    frame = np.stack([b.data[0] for b in beams], axis=-1)
    expected, used = acc_step(state, frame)
    np.testing.assert_array_equal(fused.data[0], expected)
    np.testing.assert_array_equal(traj[0], used)


def test_run_output_matches_trajectory():
    rng = np.random.default_rng(3)
    beams = [Spectrogram(rng.standard_normal((30, 257)) + 1j * rng.standard_normal((30, 257)), CFG)
             for _ in range(4)]
    fused, traj = acc_run(beams)
    z = np.stack([b.data for b in beams], axis=-1)
    recomputed = np.sum(traj * z, axis=-1)
    np.testing.assert_array_equal(fused.data, recomputed)


def test_causality_of_weights():
    rng = np.random.default_rng(4)
    base = rng.standard_normal((40, 64, 4)) + 1j * rng.standard_normal((40, 64, 4))
    altered = base.copy()
    altered[25:] += 10.0
    def run(frames):
        beams = [Spectrogram(np.pad(frames[:, :, p], ((0, 0), (0, 257 - 64))), CFG)
                 for p in range(4)]
        return acc_run(beams)[1]
    t1 = run(base)
    t2 = run(altered)
    assert np.array_equal(t1[:26], t2[:26])  # weights at frame l use frames < l
    assert not np.array_equal(t1[26:], t2[26:])
