"""Uniform linear array geometry, frequency grid, and far-field steering vectors."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array of omnidirectional microphones.

    num_mics:    number of elements M
    spacing:     inter-element spacing in meters
    sound_speed: speed of sound in m/s
    sample_rate: sampling rate in Hz
    """

    num_mics: int = 8
    spacing: float = 0.01
    sound_speed: float = 343.0
    sample_rate: float = 16000.0

    def __post_init__(self):
        if self.num_mics < 2:
            raise ValueError("need at least 2 microphones")
        if self.spacing <= 0 or self.sound_speed <= 0 or self.sample_rate <= 0:
            raise ValueError("spacing, sound_speed and sample_rate must be positive")

    @property
    def tau0(self) -> float:
        """Inter-element delay for an endfire arrival, in seconds."""
        return self.spacing / self.sound_speed

    def mic_positions(self, center) -> np.ndarray:
        """Element positions (M, 3) on a line parallel to the x-axis.

        Mic 0 sits at the largest x so that an arrival from azimuth 0
        (the +x endfire direction) reaches it first, matching the sign
        convention of steering_vector.
        """
        center = np.asarray(center, dtype=float)
        m = np.arange(self.num_mics)
        offsets = ((self.num_mics - 1) / 2.0 - m) * self.spacing
        pos = np.tile(center, (self.num_mics, 1))
        pos[:, 0] += offsets
        return pos


@dataclass(frozen=True)
class FrequencyGrid:
    """One-sided DFT bin grid: bin k sits at k * fs / nfft Hz."""

    nfft: int
    fs: float

    def __post_init__(self):
        if self.nfft % 2 != 0 or self.nfft <= 0:
            raise ValueError("nfft must be a positive even number")
        if self.fs <= 0:
            raise ValueError("fs must be positive")

    @property
    def num_bins(self) -> int:
        return self.nfft // 2 + 1

    def bin_freq(self, k) -> np.ndarray:
        return np.asarray(k) * self.fs / self.nfft

    @property
    def freqs(self) -> np.ndarray:
        return np.arange(self.num_bins) * self.fs / self.nfft


def steering_vector(geom: ArrayGeometry, freq: float, theta: float) -> np.ndarray:
    """Far-field phase-delay vector of length M for a plane wave.

    Entry m is exp(-1j * m * 2*pi*freq * tau0 * cos(theta)); theta is the
    azimuth in radians measured from the array axis (endfire).
    """
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    if freq < 0 or freq > geom.sample_rate / 2:
        raise ValueError(f"freq {freq} outside [0, Nyquist]")
    m = np.arange(geom.num_mics)
    phase = -m * 2.0 * np.pi * freq * geom.tau0 * np.cos(theta)
    return np.exp(1j * phase)


def steering_matrix(geom: ArrayGeometry, grid: FrequencyGrid, theta: float) -> np.ndarray:
    """Stack of steering vectors, shape (num_bins, M); row k is bin k."""
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    if grid.bin_freq(grid.num_bins - 1) > geom.sample_rate / 2 + 1e-9:
        raise ValueError("grid Nyquist exceeds geometry sample rate")
    m = np.arange(geom.num_mics)
    omega = 2.0 * np.pi * grid.freqs
    return np.exp(-1j * np.outer(omega, m) * geom.tau0 * np.cos(theta))
