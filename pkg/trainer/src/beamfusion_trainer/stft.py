"""Analysis STFT matching the inference engine's framing convention.

Causal framing: the signal is padded with window_len - hop leading zeros,
frame t covers padded samples [t*hop, t*hop + window_len), and the frame
count is ceil(n / hop). Square-root periodic Hann analysis taper.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StftSetup:
    nfft: int = 512
    window_len: int = 512
    hop: int = 128
    window: str = "sqrt_hann"

    def __post_init__(self):
        if self.window_len != self.nfft:
            raise ValueError("window_len must equal nfft")
        if self.hop <= 0 or self.window_len % self.hop != 0:
            raise ValueError("hop must divide window_len")
        if self.window != "sqrt_hann":
            raise ValueError(f"unsupported window {self.window!r}")

    @property
    def num_bins(self) -> int:
        return self.nfft // 2 + 1

    @property
    def pad_front(self) -> int:
        return self.window_len - self.hop

    def taper(self) -> np.ndarray:
        n = self.window_len
        return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n))


def stft(signal: np.ndarray, setup: StftSetup = StftSetup()) -> np.ndarray:
    """Mono signal -> (T, F) complex spectrogram."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1 or signal.size < setup.window_len:
        raise ValueError("signal must be 1-D and at least one window long")
    if not np.all(np.isfinite(signal)):
        raise ValueError("signal contains non-finite samples")
    n = signal.size
    t = int(np.ceil(n / setup.hop))
    padded = np.zeros((t - 1) * setup.hop + setup.window_len)
    padded[setup.pad_front:setup.pad_front + n] = signal
    idx = np.arange(setup.window_len)[None, :] + setup.hop * np.arange(t)[:, None]
    return np.fft.rfft(padded[idx] * setup.taper(), n=setup.nfft, axis=1)
