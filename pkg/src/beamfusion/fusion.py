"""Frame-online neural fusion of beamformer outputs.

Per frame: the P complex beam outputs are split into real/imag/magnitude
channels, compressed to F' bands by an ERB filter bank, encoded, passed
through a causal dual-path recurrence (a gated sweep over bands within the
frame, then a gated sweep over time per band with persistent state), decoded
to P logits per band, expanded back to bins, and softmaxed into fusion
weights that sum to one per bin.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensorfile
from .stft import Spectrogram, StftConfig, synthesize

TENSOR_SHAPES = {
    "enc/W": ("D", "3P"), "enc/b": ("D",),
    "intra/Wz": ("D", "2D"), "intra/Wr": ("D", "2D"), "intra/Wh": ("D", "2D"),
    "intra/bz": ("D",), "intra/br": ("D",), "intra/bh": ("D",),
    "intra/proj": ("D", "D"),
    "inter/Wz": ("D", "2D"), "inter/Wr": ("D", "2D"), "inter/Wh": ("D", "2D"),
    "inter/bz": ("D",), "inter/br": ("D",), "inter/bh": ("D",),
    "dec/W": ("P", "D"), "dec/b": ("P",),
}


@dataclass
class ErbBank:
    """Band-compression matrix: identity below the knee, triangular ERB above.

    analysis: (F', F) non-negative, rows summing to 1.
    band_of_bin: for each bin, the band whose logits it inherits.
    """

    analysis: np.ndarray
    band_of_bin: np.ndarray

    @property
    def num_bins(self) -> int:
        return self.analysis.shape[1]

    @property
    def num_bands(self) -> int:
        return self.analysis.shape[0]

    def compress(self, x: np.ndarray) -> np.ndarray:
        """Apply the analysis matrix along the last (bin) axis."""
        return x @ self.analysis.T

    def expand(self, bands: np.ndarray) -> np.ndarray:
        """Piecewise-constant expansion from bands back to bins (last axis)."""
        return np.take(bands, self.band_of_bin, axis=-1)


def _hz_to_erb(f):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=float))


def erb_bank(num_bins: int, num_bands: int, fs: float, knee: int = 32) -> ErbBank:
    """Build the compression bank: bins [0, knee) map one-to-one, the rest are
    shared between their two nearest ERB-spaced bands with triangular weights."""
    if num_bands >= num_bins:
        raise ValueError("num_bands must be smaller than num_bins")
    if num_bands <= knee:
        raise ValueError("num_bands must exceed the identity knee")
    f = num_bins
    fp = num_bands
    analysis = np.zeros((fp, f))
    band_of_bin = np.zeros(f, dtype=int)
    analysis[np.arange(knee), np.arange(knee)] = 1.0
    band_of_bin[:knee] = np.arange(knee)
    nfft = 2 * (f - 1)
    freqs = np.arange(knee, f) * fs / nfft
    e = _hz_to_erb(freqs)
    pos = (e - e[0]) / (e[-1] - e[0]) * (fp - knee - 1)
    lo = np.floor(pos).astype(int)
    frac = pos - lo
    for i, k in enumerate(range(knee, f)):
        b0 = knee + lo[i]
        analysis[b0, k] += 1.0 - frac[i]
        if frac[i] > 0 and b0 + 1 < fp:
            analysis[b0 + 1, k] += frac[i]
        band_of_bin[k] = b0 if frac[i] < 0.5 else min(b0 + 1, fp - 1)
    row_sums = analysis.sum(axis=1)
    if np.any(row_sums <= 0):
        raise ValueError("empty ERB band; reduce num_bands or the knee")
    analysis /= row_sums[:, None]
    return ErbBank(analysis, band_of_bin)


@dataclass
class ModelParams:
    """Named float32 tensors plus the architecture header."""

    P: int
    F: int
    Fp: int
    D: int
    K: int
    stft: StftConfig
    tensors: dict

    def __post_init__(self):
        sizes = {"D": self.D, "2D": 2 * self.D, "3P": 3 * self.P, "P": self.P}
        for name, dims in TENSOR_SHAPES.items():
            if name not in self.tensors:
                raise ValueError(f"missing tensor {name!r}")
            want = tuple(sizes[d] for d in dims)
            got = tuple(self.tensors[name].shape)
            if got != want:
                raise ValueError(f"tensor {name!r} has shape {got}, expected {want}")
            arr = np.asarray(self.tensors[name], dtype=np.float32)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor {name!r} has non-finite values")
            self.tensors[name] = arr
        if self.F != self.stft.num_bins:
            raise ValueError("header F inconsistent with STFT config")


@dataclass
class FusionState:
    """Per-stream hidden state of the inter-frame recurrence, shape (F', D)."""

    hidden: np.ndarray
    frame_count: int = 0

    def reset(self):
        self.hidden[:] = 0.0
        self.frame_count = 0


def init_state(params: ModelParams) -> FusionState:
    return FusionState(np.zeros((params.Fp, params.D), dtype=np.float32))


def init_params(P=4, D=32, Fp=64, K=32, stft_cfg: StftConfig | None = None,
                seed: int = 0, zero_decoder: bool = False) -> ModelParams:
    """Random (or zero-decoder) parameters, mostly for tests and smoke runs."""
    cfg = stft_cfg or StftConfig()
    rng = np.random.default_rng(seed)
    sizes = {"D": D, "2D": 2 * D, "3P": 3 * P, "P": P}
    tensors = {}
    for name, dims in TENSOR_SHAPES.items():
        shape = tuple(sizes[d] for d in dims)
        if name.endswith(("/b", "bz", "br", "bh")):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            scale = 1.0 / np.sqrt(shape[-1])
            tensors[name] = rng.uniform(-scale, scale, shape).astype(np.float32)
    if zero_decoder:
        tensors["dec/W"] = np.zeros((P, D), dtype=np.float32)
        tensors["dec/b"] = np.zeros(P, dtype=np.float32)
    return ModelParams(P, cfg.num_bins, Fp, D, K, cfg, tensors)


def extract_features(beam_frame: np.ndarray, bank: ErbBank) -> np.ndarray:
    """(P, F) complex frame -> (3P, F') real features: re, im, magnitude."""
    z = np.asarray(beam_frame)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite beam frame")
    re, im = np.real(z), np.imag(z)
    mag = np.abs(z)
    feats = np.concatenate([re, im, mag], axis=0)
    return bank.compress(feats).astype(np.float32)


def _gru_step(x, h, wz, wr, wh, bz, br, bh):
    """Gated recurrent step; weights act on the concat [h, x]."""
    hx = np.concatenate([h, x], axis=-1)
    z = _sigmoid(hx @ wz.T + bz)
    r = _sigmoid(hx @ wr.T + br)
    rhx = np.concatenate([r * h, x], axis=-1)
    n = np.tanh(rhx @ wh.T + bh)
    return (1.0 - z) * n + z * h


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def infer_frame(params: ModelParams, state: FusionState, feature_frame: np.ndarray) -> np.ndarray:
    """One causal inference step; returns the (P, F) weight mask and mutates state."""
    t = params.tensors
    feats = np.asarray(feature_frame, dtype=np.float32)
    if feats.shape != (3 * params.P, params.Fp):
        raise ValueError("feature frame shape mismatch")
    if state.hidden.shape != (params.Fp, params.D):
        raise ValueError("state does not belong to these params")
    # encoder: per-band affine + tanh
    e = np.tanh(feats.T @ t["enc/W"].T + t["enc/b"])  # (F', D)
    # intra-frame sweep over bands, low to high
    h = np.zeros(params.D, dtype=np.float32)
    intra = np.empty_like(e)
    for b in range(params.Fp):
        h = _gru_step(e[b], h, t["intra/Wz"], t["intra/Wr"], t["intra/Wh"],
                      t["intra/bz"], t["intra/br"], t["intra/bh"])
        intra[b] = h
    u = e + intra @ t["intra/proj"].T
    # inter-frame recurrence per band, state persists across calls
    state.hidden = _gru_step(u, state.hidden, t["inter/Wz"], t["inter/Wr"],
                             t["inter/Wh"], t["inter/bz"], t["inter/br"], t["inter/bh"])
    u = u + state.hidden
    state.frame_count += 1
    logits = u @ t["dec/W"].T + t["dec/b"]  # (F', P)
    return _softmax_mask(logits, params)


def _softmax_mask(band_logits: np.ndarray, params: ModelParams) -> np.ndarray:
    bank = _bank_for(params)
    logits = bank.expand(band_logits.T)  # (P, F)
    logits = logits - np.max(logits, axis=0, keepdims=True)
    w = np.exp(logits)
    return w / np.sum(w, axis=0, keepdims=True)


_BANK_CACHE = {}


def _bank_for(params: ModelParams, fs: float = 16000.0) -> ErbBank:
    key = (params.F, params.Fp, params.K, fs)
    if key not in _BANK_CACHE:
        _BANK_CACHE[key] = erb_bank(params.F, params.Fp, fs, params.K)
    return _BANK_CACHE[key]


def fuse_frame(mask: np.ndarray, beam_frame: np.ndarray) -> np.ndarray:
    """Weighted fusion across beams: S(f) = sum_p W_p(f) Z_p(f)."""
    mask = np.asarray(mask)
    z = np.asarray(beam_frame)
    if mask.shape != z.shape:
        raise ValueError("mask and beam frame shapes differ")
    return np.sum(mask.astype(np.float64) * z, axis=0)


def infer_run(params: ModelParams, beam_stack: np.ndarray, fs: float = 16000.0):
    """Offline loop over frames; beam_stack is (P, T, F) complex.

    Returns (mask trajectory (P, T, F), fused (T, F)). Bit-identical to
    feeding the frames one at a time through a fresh FusionState.
    """
    bank = _bank_for(params, fs)
    p, t, f = beam_stack.shape
    state = init_state(params)
    masks = np.empty((p, t, f), dtype=np.float32)
    fused = np.empty((t, f), dtype=complex)
    for i in range(t):
        frame = beam_stack[:, i, :]
        mask = infer_frame(params, state, extract_features(frame, bank))
        masks[:, i, :] = mask
        fused[i] = fuse_frame(mask, frame)
    return masks, fused


def enhance_stream(params: ModelParams, beam_outputs: list, fs: float = 16000.0):
    """Frame-online enhancement of P beam spectrograms.

    Returns (time signal in the padded synthesis domain trimmed to the source
    length when known, mask trajectory (P, T, F)).
    """
    shapes = {b.data.shape for b in beam_outputs}
    if len(shapes) != 1:
        raise ValueError("beam outputs must share shape")
    stack = np.stack([b.data for b in beam_outputs])
    masks, fused = infer_run(params, stack, fs)
    spec = Spectrogram(fused, beam_outputs[0].config,
                       num_samples=beam_outputs[0].num_samples)
    if spec.num_samples is not None:
        from .stft import reconstruct
        return reconstruct(spec), masks
    return synthesize(spec), masks


def save_model(params: ModelParams, path):
    header = {"P": params.P, "F": params.F, "Fp": params.Fp, "D": params.D,
              "K": params.K, "stft": params.stft}
    tensorfile.write_model_file(path, header, params.tensors)


def load_model(path) -> ModelParams:
    header, tensors = tensorfile.read_model_file(path)
    return ModelParams(header["P"], header["F"], header["Fp"], header["D"],
                       header["K"], header["stft"], tensors)
