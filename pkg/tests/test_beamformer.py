import numpy as np
import pytest

from beamfusion.array import ArrayGeometry, FrequencyGrid, steering_matrix, steering_vector
from beamfusion.beamformer import (FilterBank, FixedFilter, apply, apply_bank,
                                   beampattern, design_mwng, design_null_dma,
                                   standard_bank)
from beamfusion.stft import MultichannelSpectrogram, Spectrogram, StftConfig

GEOM = ArrayGeometry()
GRID = FrequencyGrid(512, 16000.0)
CFG = StftConfig()


def nondegenerate(filt):
    return np.setdiff1d(np.arange(filt.num_bins), filt.fallback_bins)


def test_mwng_wng_is_m():
    filt = design_mwng(GEOM, GRID, 0.0)
    d = steering_matrix(GEOM, GRID, 0.0)
    # oracle: evaluate the white-noise-gain formula numerically per bin
    num = np.abs(np.einsum("fm,fm->f", filt.coeffs.conj(), d)) ** 2
    den = np.real(np.einsum("fm,fm->f", filt.coeffs.conj(), filt.coeffs))
    wng_db = 10 * np.log10(num / den)
    np.testing.assert_allclose(wng_db, 10 * np.log10(8), atol=1e-9)


def test_mwng_distortionless_exact():
    filt = design_mwng(GEOM, GRID, 0.0)
    d = steering_matrix(GEOM, GRID, 0.0)
    resid = np.abs(np.einsum("fm,fm->f", filt.coeffs.conj(), d) - 1)
    assert resid.max() <= 1e-12


def test_mwng_beampattern_matches_direct_sum():
    filt = design_mwng(GEOM, GRID, 0.0)
    f = 1000.0
    # oracle: scalar summation of the array response
    tau0 = GEOM.tau0
    acc = 0.0 + 0.0j
    for m in range(8):
        acc += np.exp(1j * m * 2 * np.pi * f * tau0) / 8  # conj(h_m) * d_m at theta=90
    mags, _ = beampattern(filt, GEOM, GRID, f, np.array([np.pi / 2]))
    assert mags[0] == pytest.approx(np.abs(acc), abs=1e-12)


def test_dma_constraints_all_bins():
    for null_deg in (90.0, 120.0, 150.0, 180.0):
        filt = design_null_dma(GEOM, GRID, 0.0, np.radians(null_deg))
        ds = steering_matrix(GEOM, GRID, 0.0)
        dn = steering_matrix(GEOM, GRID, np.radians(null_deg))
        nd = nondegenerate(filt)
        dist = np.abs(np.einsum("fm,fm->f", filt.coeffs.conj(), ds) - 1)
        null = np.abs(np.einsum("fm,fm->f", filt.coeffs.conj(), dn))
        assert dist[nd].max() <= 1e-8
        assert null[nd].max() <= 1e-6


def test_dma_dc_fallback():
    filt = design_null_dma(GEOM, GRID, 0.0, np.radians(120.0))
    assert 0 in filt.fallback_bins
    np.testing.assert_allclose(filt.coeffs[0], np.ones(8) / 8)


def test_dma_rejects_coincident_null():
    with pytest.raises(ValueError):
        design_null_dma(GEOM, GRID, 0.0, 0.0)


def test_two_mic_cardioid_pattern():
    # low-frequency 2-mic DMA with a rear null approximates (1 + cos theta)/2
    geom = ArrayGeometry(num_mics=2)
    filt = design_null_dma(geom, GRID, 0.0, np.pi)
    f = GRID.bin_freq(np.argmin(np.abs(GRID.freqs - 200.0)))
    thetas = np.radians([0.0, 60.0, 90.0, 120.0, 180.0])
    mags, _ = beampattern(filt, geom, GRID, f, thetas)
    mags = mags / mags[0]
    cardioid = (1 + np.cos(thetas)) / 2
    np.testing.assert_allclose(mags, cardioid, atol=0.05)


def test_null_depth():
    for null_deg in (90.0, 120.0, 150.0, 180.0):
        filt = design_null_dma(GEOM, GRID, 0.0, np.radians(null_deg))
        dn = steering_matrix(GEOM, GRID, np.radians(null_deg))
        nd = nondegenerate(filt)
        rel = np.abs(np.einsum("fm,fm->f", filt.coeffs.conj(), dn))
        assert np.all(rel[nd] <= 1e-6)  # <= -120 dB relative to unit gain


def test_minimum_norm_optimality():
    rng = np.random.default_rng(0)
    filt = design_null_dma(GEOM, GRID, 0.0, np.radians(120.0))
    ds = steering_matrix(GEOM, GRID, 0.0)
    dn = steering_matrix(GEOM, GRID, np.radians(120.0))
    for k in (5, 64, 200):
        c = np.stack([ds[k], dn[k]], axis=1)
        h = filt.coeffs[k]
        for _ in range(20):
            z = rng.standard_normal(8) + 1j * rng.standard_normal(8)
            # project onto the constraint null space (C^H z = 0)
            z -= c @ np.linalg.solve(c.conj().T @ c, c.conj().T @ z)
            assert np.linalg.norm(h + z) > np.linalg.norm(h)


def test_beampattern_values_at_constraints():
    filt = design_null_dma(GEOM, GRID, 0.0, np.radians(150.0))
    mags, db = beampattern(filt, GEOM, GRID, 2000.0, np.array([0.0, np.radians(150.0)]))
    assert mags[0] == pytest.approx(1.0, abs=1e-8)
    assert mags[1] <= 1e-6
    with pytest.raises(ValueError):
        beampattern(filt, GEOM, GRID, 1001.3, np.array([0.0]))


def _plane_wave_mc(x_spec, theta):
    d = steering_matrix(GEOM, GRID, theta)
    chans = [Spectrogram(x_spec.data * d[:, m], CFG, num_samples=x_spec.num_samples)
             for m in range(8)]
    return MultichannelSpectrogram(chans)


def test_apply_plane_wave_passthrough():
    rng = np.random.default_rng(4)
    x = Spectrogram(rng.standard_normal((20, 257)) + 1j * rng.standard_normal((20, 257)), CFG)
    mc = _plane_wave_mc(x, 0.0)
    for filt in (design_mwng(GEOM, GRID, 0.0),
                 design_null_dma(GEOM, GRID, 0.0, np.radians(120.0))):
        out = apply(filt, mc)
        nd = nondegenerate(filt)
        np.testing.assert_allclose(out.data[:, nd], x.data[:, nd], atol=1e-8)


def test_apply_zeros_and_linearity():
    filt = design_mwng(GEOM, GRID, 0.0)
    zeros = MultichannelSpectrogram([Spectrogram(np.zeros((5, 257), complex), CFG)
                                     for _ in range(8)])
    assert np.all(apply(filt, zeros).data == 0)
    rng = np.random.default_rng(6)
    a = [Spectrogram(rng.standard_normal((5, 257)) * (1 + 1j), CFG) for _ in range(8)]
    b = [Spectrogram(rng.standard_normal((5, 257)) * (1 - 1j), CFG) for _ in range(8)]
    ya = apply(filt, MultichannelSpectrogram(a))
    yb = apply(filt, MultichannelSpectrogram(b))
    yab = apply(filt, MultichannelSpectrogram(
        [Spectrogram(ai.data + bi.data, CFG) for ai, bi in zip(a, b)]))
    np.testing.assert_allclose(yab.data, ya.data + yb.data, atol=1e-12)


def test_apply_dimension_mismatch():
    filt = design_mwng(GEOM, GRID, 0.0)
    mc = MultichannelSpectrogram([Spectrogram(np.zeros((5, 257), complex), CFG)
                                  for _ in range(4)])
    with pytest.raises(ValueError):
        apply(filt, mc)


def test_apply_bank_matches_individual():
    bank = standard_bank(GEOM, GRID)
    rng = np.random.default_rng(8)
    mc = MultichannelSpectrogram(
        [Spectrogram(rng.standard_normal((6, 257)) + 1j * rng.standard_normal((6, 257)), CFG)
         for _ in range(8)])
    outs = apply_bank(bank, mc)
    assert len(outs) == 4
    for filt, out in zip(bank.filters, outs):
        np.testing.assert_array_equal(out.data, apply(filt, mc).data)


def test_simplex_combination_distortionless():
    bank = standard_bank(GEOM, GRID)
    h = bank.matrix()  # (F, M, P)
    ds = steering_matrix(GEOM, GRID, 0.0)
    rng = np.random.default_rng(10)
    nd = np.arange(1, 257)
    for _ in range(100):
        alpha = rng.dirichlet(np.ones(4))
        combined = h @ alpha
        resid = np.abs(np.einsum("fm,fm->f", combined.conj(), ds) - 1)
        assert resid[nd].max() <= 1e-8


def test_bank_validation():
    f = design_mwng(GEOM, GRID, 0.0)
    with pytest.raises(ValueError):
        FilterBank([f], GEOM, GRID)
    g = design_mwng(GEOM, GRID, np.radians(10.0))
    with pytest.raises(ValueError):
        FilterBank([f, g], GEOM, GRID)
