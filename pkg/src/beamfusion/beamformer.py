"""Fixed distortionless beamformers: MWNG and null-constrained first-order DMAs."""

from dataclasses import dataclass, field

import numpy as np

from .array import ArrayGeometry, FrequencyGrid, steering_matrix, steering_vector
from .stft import MultichannelSpectrogram, Spectrogram

# Bins whose two-constraint system is numerically unusable fall back to d/M.
RCOND_FALLBACK = 1e-12


@dataclass
class FixedFilter:
    """Per-bin complex weights h(omega), shape (F, M), with unit gain at theta_s."""

    coeffs: np.ndarray
    label: str
    theta_s: float
    theta_null: float | None = None
    fallback_bins: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 2:
            raise ValueError("coeffs must be (F, M)")

    @property
    def num_bins(self) -> int:
        return self.coeffs.shape[0]

    @property
    def num_mics(self) -> int:
        return self.coeffs.shape[1]


@dataclass
class FilterBank:
    """Ordered fixed beamformers sharing geometry, grid, and steer direction."""

    filters: list  # list[FixedFilter]
    geometry: ArrayGeometry
    grid: FrequencyGrid

    def __post_init__(self):
        if len(self.filters) < 2:
            raise ValueError("a filter bank needs at least 2 filters")
        th = self.filters[0].theta_s
        for f in self.filters:
            if abs(f.theta_s - th) > 1e-12:
                raise ValueError("all bank members must share theta_s")
            if f.coeffs.shape != self.filters[0].coeffs.shape:
                raise ValueError("all bank members must share (F, M)")

    @property
    def num_filters(self) -> int:
        return len(self.filters)

    @property
    def theta_s(self) -> float:
        return self.filters[0].theta_s

    def matrix(self) -> np.ndarray:
        """H(omega) stacked per bin, shape (F, M, P)."""
        return np.stack([f.coeffs for f in self.filters], axis=-1)


def design_mwng(geom: ArrayGeometry, grid: FrequencyGrid, theta_s: float) -> FixedFilter:
    """Distortionless delay-and-sum filter h = d/M, maximizing white-noise gain."""
    d = steering_matrix(geom, grid, theta_s)
    return FixedFilter(d / geom.num_mics, "MWNG", theta_s)


def design_null_dma(geom: ArrayGeometry, grid: FrequencyGrid, theta_s: float,
                    theta_null: float, label: str | None = None) -> FixedFilter:
    """Minimum-norm filter with unit gain at theta_s and a null at theta_null.

    Per bin, h = C (C^H C)^{-1} [1, 0]^T with C = [d_s, d_null]. The DC bin
    (and any bin whose Gram matrix is numerically singular) falls back to the
    unconstrained d_s/M; those bins are recorded in fallback_bins.
    """
    if abs(np.cos(theta_null) - np.cos(theta_s)) < 1e-12:
        raise ValueError("theta_null coincides with theta_s")
    m = geom.num_mics
    ds = steering_matrix(geom, grid, theta_s)
    dn = steering_matrix(geom, grid, theta_null)
    coeffs = np.empty((grid.num_bins, m), dtype=complex)
    fallback = []
    for k in range(grid.num_bins):
        c = np.stack([ds[k], dn[k]], axis=1)  # (M, 2)
        g = c.conj().T @ c
        ev = np.linalg.eigvalsh(g)
        if k == 0 or ev[0] <= RCOND_FALLBACK * ev[-1]:
            coeffs[k] = ds[k] / m
            fallback.append(k)
            continue
        coeffs[k] = c @ np.linalg.solve(g, np.array([1.0, 0.0], dtype=complex))
    if label is None:
        label = f"DMA-null{np.degrees(theta_null):.0f}"
    return FixedFilter(coeffs, label, theta_s, theta_null, tuple(fallback))


def standard_bank(geom: ArrayGeometry, grid: FrequencyGrid, theta_s: float = 0.0,
                  null_degs=(90.0, 120.0, 150.0, 180.0),
                  include_mwng: bool = False) -> FilterBank:
    """DMA-I..IV bank (nulls at 90/120/150/180 degrees by default)."""
    romans = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII"]
    filters = [design_null_dma(geom, grid, theta_s, np.radians(a), f"DMA-{romans[i]}")
               for i, a in enumerate(null_degs)]
    if include_mwng:
        filters.insert(0, design_mwng(geom, grid, theta_s))
    return FilterBank(filters, geom, grid)


def beampattern(filt: FixedFilter, geom: ArrayGeometry, grid: FrequencyGrid,
                freq: float, thetas: np.ndarray):
    """Response magnitude |h^H d_theta| at one on-grid frequency.

    Returns (linear, db) arrays over thetas.
    """
    freqs = grid.freqs
    k = int(np.argmin(np.abs(freqs - freq)))
    if abs(freqs[k] - freq) > 1e-6:
        raise ValueError(f"frequency {freq} Hz is not on the analysis grid")
    h = filt.coeffs[k]
    mags = np.array([np.abs(h.conj() @ steering_vector(geom, freq, th)) for th in np.atleast_1d(thetas)])
    db = 20.0 * np.log10(np.maximum(mags, 1e-12))
    return mags, db


def apply(filt: FixedFilter, mc_spec: MultichannelSpectrogram) -> Spectrogram:
    """Beamform a multichannel spectrogram: Z(w,l) = h(w)^H y(w,l)."""
    y = mc_spec.stack()  # (M, T, F)
    if y.shape[0] != filt.num_mics or y.shape[2] != filt.num_bins:
        raise ValueError("filter does not match spectrogram dimensions")
    out = np.einsum("fm,mtf->tf", filt.coeffs.conj(), y)
    return Spectrogram(out, mc_spec.config, num_samples=mc_spec.channels[0].num_samples)


def apply_bank(bank: FilterBank, mc_spec: MultichannelSpectrogram) -> list:
    """Apply every filter in the bank; returns a list of P spectrograms."""
    return [apply(f, mc_spec) for f in bank.filters]
