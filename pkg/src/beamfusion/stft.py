"""Causal analysis/synthesis filterbank (weighted overlap-add, square-root Hann)."""

from dataclasses import dataclass, field

import numpy as np


def _sqrt_hann(n: int) -> np.ndarray:
    # periodic Hann so the squared window is COLA at hop = n/4
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n))


_WINDOWS = {"sqrt_hann": _sqrt_hann}


@dataclass(frozen=True)
class StftConfig:
    nfft: int = 512
    window_len: int = 512
    hop: int = 128
    window: str = "sqrt_hann"

    def __post_init__(self):
        if self.window_len != self.nfft:
            raise ValueError("window_len must equal nfft")
        if self.hop <= 0 or self.window_len % self.hop != 0:
            raise ValueError("hop must divide window_len")
        if self.window not in _WINDOWS:
            raise ValueError(f"unknown window {self.window!r}")

    @property
    def num_bins(self) -> int:
        return self.nfft // 2 + 1

    @property
    def pad_front(self) -> int:
        # leading zeros so frame 0 is causal over its window
        return self.window_len - self.hop

    def taper(self) -> np.ndarray:
        return _WINDOWS[self.window](self.window_len)


@dataclass
class Spectrogram:
    """One-sided complex STFT, data shape (T, F)."""

    data: np.ndarray
    config: StftConfig
    num_samples: int | None = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 2 or self.data.shape[1] != self.config.num_bins:
            raise ValueError("spectrogram must be (T, nfft/2+1)")

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]


@dataclass
class MultichannelSpectrogram:
    """Per-channel spectrograms sharing one config and frame count."""

    channels: list  # list[Spectrogram]

    def __post_init__(self):
        if not self.channels:
            raise ValueError("no channels")
        t0 = self.channels[0].num_frames
        cfg = self.channels[0].config
        for ch in self.channels:
            if ch.num_frames != t0 or ch.config != cfg:
                raise ValueError("channels must share frame count and config")

    @property
    def num_channels(self) -> int:
        return len(self.channels)

    @property
    def config(self) -> StftConfig:
        return self.channels[0].config

    def stack(self) -> np.ndarray:
        """Channel-major array, shape (M, T, F)."""
        return np.stack([ch.data for ch in self.channels])


def num_frames(num_samples: int, cfg: StftConfig) -> int:
    return int(np.ceil(num_samples / cfg.hop))


def analyze(signal: np.ndarray, cfg: StftConfig = StftConfig()) -> Spectrogram:
    """STFT of a mono signal; frame t covers padded samples [t*hop, t*hop+win)."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1 or signal.size == 0:
        raise ValueError("signal must be a non-empty 1-D array")
    if not np.all(np.isfinite(signal)):
        raise ValueError("signal contains non-finite samples")
    if signal.size < cfg.window_len:
        raise ValueError("signal shorter than one analysis window")
    n = signal.size
    t = num_frames(n, cfg)
    total = (t - 1) * cfg.hop + cfg.window_len
    padded = np.zeros(total)
    padded[cfg.pad_front:cfg.pad_front + n] = signal
    idx = np.arange(cfg.window_len)[None, :] + cfg.hop * np.arange(t)[:, None]
    frames = padded[idx] * cfg.taper()
    return Spectrogram(np.fft.rfft(frames, n=cfg.nfft, axis=1), cfg, num_samples=n)


def synthesize(spec: Spectrogram, cfg: StftConfig | None = None) -> np.ndarray:
    """Weighted overlap-add inverse; returns the padded-domain reconstruction
    of length T*hop + window_len - hop (use reconstruct() for input alignment)."""
    cfg = cfg or spec.config
    if spec.data.shape[1] != cfg.num_bins:
        raise ValueError("spectrogram bins do not match config")
    w = cfg.taper()
    t = spec.num_frames
    total = (t - 1) * cfg.hop + cfg.window_len
    frames = np.fft.irfft(spec.data, n=cfg.nfft, axis=1) * w
    out = np.zeros(total)
    norm = np.zeros(total)
    w2 = w * w
    for i in range(t):
        sl = slice(i * cfg.hop, i * cfg.hop + cfg.window_len)
        out[sl] += frames[i]
        norm[sl] += w2
    return out / np.maximum(norm, 1e-8)


def reconstruct(spec: Spectrogram, num_samples: int | None = None) -> np.ndarray:
    """Inverse STFT aligned with the original analyze() input."""
    n = num_samples if num_samples is not None else spec.num_samples
    if n is None:
        raise ValueError("num_samples unknown; pass it explicitly")
    y = synthesize(spec)
    cfg = spec.config
    out = np.zeros(n)
    avail = min(n, y.size - cfg.pad_front)
    out[:avail] = y[cfg.pad_front:cfg.pad_front + avail]
    return out


def analyze_multichannel(signals: np.ndarray, cfg: StftConfig = StftConfig()) -> MultichannelSpectrogram:
    """Channel-wise analyze of an (M, N) signal array."""
    signals = np.asarray(signals, dtype=float)
    if signals.ndim != 2:
        raise ValueError("signals must be (channels, samples)")
    return MultichannelSpectrogram([analyze(ch, cfg) for ch in signals])


class StreamingAnalyzer:
    """Single-stream incremental STFT; feed() returns the frames completed so far.

    Frames are bit-identical to a one-shot analyze() of the concatenated input.
    """

    def __init__(self, cfg: StftConfig = StftConfig()):
        self.cfg = cfg
        self._buf = np.zeros(cfg.pad_front)
        self._emitted = 0

    def feed(self, samples: np.ndarray) -> np.ndarray:
        samples = np.asarray(samples, dtype=float)
        if not np.all(np.isfinite(samples)):
            raise ValueError("non-finite samples")
        self._buf = np.concatenate([self._buf, samples])
        cfg = self.cfg
        frames = []
        while self._buf.size - self._emitted * cfg.hop >= cfg.window_len:
            start = self._emitted * cfg.hop
            frame = self._buf[start:start + cfg.window_len] * cfg.taper()
            frames.append(np.fft.rfft(frame, n=cfg.nfft))
            self._emitted += 1
        if not frames:
            return np.zeros((0, cfg.num_bins), dtype=complex)
        return np.stack(frames)
