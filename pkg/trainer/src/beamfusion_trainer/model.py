"""Differentiable replica of the fusion network.

Architecture (must match the inference engine step for step):
  1. per-frame features: real/imag/magnitude of the P beam outputs,
  2. band compression F -> F' (identity knee + triangular ERB interpolation),
  3. tanh affine encoder 3P -> D per band,
  4. gated sweep over bands within the frame, plus a projected residual,
  5. gated sweep over time per band (the only stateful stage),
  6. linear decoder D -> P logits per band, piecewise-constant expansion back
     to bins, softmax over beams per bin.
"""

import numpy as np
import torch
from torch import nn

TENSOR_SHAPES = {
    "enc/W": ("D", "3P"), "enc/b": ("D",),
    "intra/Wz": ("D", "2D"), "intra/Wr": ("D", "2D"), "intra/Wh": ("D", "2D"),
    "intra/bz": ("D",), "intra/br": ("D",), "intra/bh": ("D",),
    "intra/proj": ("D", "D"),
    "inter/Wz": ("D", "2D"), "inter/Wr": ("D", "2D"), "inter/Wh": ("D", "2D"),
    "inter/bz": ("D",), "inter/br": ("D",), "inter/bh": ("D",),
    "dec/W": ("P", "D"), "dec/b": ("P",),
}


def _hz_to_erb(f):
    return 21.4 * np.log10(1.0 + 0.00437 * np.asarray(f, dtype=float))


def erb_analysis(num_bins: int, num_bands: int, fs: float, knee: int = 32):
    """Band compression matrix (F', F) and per-bin band index (F,)."""
    if num_bands >= num_bins:
        raise ValueError("num_bands must be smaller than num_bins")
    if num_bands <= knee:
        raise ValueError("num_bands must exceed the identity knee")
    f, fp = num_bins, num_bands
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
    analysis /= analysis.sum(axis=1)[:, None]
    return analysis, band_of_bin


def _param_key(name: str) -> str:
    return name.replace("/", "_")


class FusionNet(nn.Module):
    """P-beam fusion mask network; forward is causal over the time axis."""

    def __init__(self, P: int = 4, F: int = 257, Fp: int = 64, D: int = 32,
                 K: int = 32, fs: float = 16000.0, seed: int = 0):
        super().__init__()
        self.P, self.F, self.Fp, self.D, self.K = P, F, Fp, D, K
        analysis, band_of_bin = erb_analysis(F, Fp, fs, K)
        self.register_buffer("analysis",
                             torch.tensor(analysis, dtype=torch.float32))
        self.register_buffer("band_of_bin", torch.tensor(band_of_bin))
        gen = torch.Generator().manual_seed(seed)
        sizes = {"D": D, "2D": 2 * D, "3P": 3 * P, "P": P}
        for name, dims in TENSOR_SHAPES.items():
            shape = tuple(sizes[d] for d in dims)
            if len(shape) == 1:
                data = torch.zeros(shape)
            else:
                scale = 1.0 / np.sqrt(shape[-1])
                data = torch.empty(shape).uniform_(-scale, scale, generator=gen)
            setattr(self, _param_key(name), nn.Parameter(data))

    # -- weight-dict interface shared with the inference engine ------------

    def tensor_dict(self) -> dict:
        return {name: getattr(self, _param_key(name)).detach().numpy().copy()
                for name in TENSOR_SHAPES}

    def load_tensor_dict(self, tensors: dict):
        sizes = {"D": self.D, "2D": 2 * self.D, "3P": 3 * self.P, "P": self.P}
        for name, dims in TENSOR_SHAPES.items():
            if name not in tensors:
                raise ValueError(f"missing tensor {name!r}")
            want = tuple(sizes[d] for d in dims)
            arr = np.asarray(tensors[name], dtype=np.float32)
            if arr.shape != want:
                raise ValueError(f"tensor {name!r} has shape {arr.shape}, "
                                 f"expected {want}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"tensor {name!r} has non-finite values")
            with torch.no_grad():
                getattr(self, _param_key(name)).copy_(torch.from_numpy(arr))

    # -- forward -----------------------------------------------------------

    def _gru(self, prefix: str, x: torch.Tensor, h: torch.Tensor) -> torch.Tensor:
        wz = getattr(self, f"{prefix}_Wz")
        wr = getattr(self, f"{prefix}_Wr")
        wh = getattr(self, f"{prefix}_Wh")
        bz = getattr(self, f"{prefix}_bz")
        br = getattr(self, f"{prefix}_br")
        bh = getattr(self, f"{prefix}_bh")
        hx = torch.cat([h, x], dim=-1)
        z = torch.sigmoid(hx @ wz.T + bz)
        r = torch.sigmoid(hx @ wr.T + br)
        n = torch.tanh(torch.cat([r * h, x], dim=-1) @ wh.T + bh)
        return (1.0 - z) * n + z * h

    def features(self, beams: torch.Tensor) -> torch.Tensor:
        """(..., P, F) complex beams -> (..., F', 3P) compressed features."""
        feats = torch.cat([beams.real, beams.imag, beams.abs()], dim=-2)
        return (feats.float() @ self.analysis.T).transpose(-1, -2)

    def forward(self, beams: torch.Tensor, hidden: torch.Tensor | None = None):
        """beams: (B, T, P, F) complex64. Returns (mask (B, T, P, F), hidden).

        `hidden` is the (B, F', D) state of the temporal recurrence; pass the
        returned value back in to continue a stream.
        """
        if beams.dim() != 4 or beams.shape[2] != self.P or beams.shape[3] != self.F:
            raise ValueError("beams must be (batch, time, P, F)")
        b, t = beams.shape[:2]
        feats = self.features(beams)  # (B, T, F', 3P)
        e = torch.tanh(feats @ self.enc_W.T + self.enc_b)  # (B, T, F', D)

        h = e.new_zeros(b, t, self.D)
        intra = []
        for band in range(self.Fp):
            h = self._gru("intra", e[:, :, band], h)
            intra.append(h)
        u = e + torch.stack(intra, dim=2) @ self.intra_proj.T

        if hidden is None:
            hidden = e.new_zeros(b, self.Fp, self.D)
        outs = []
        for i in range(t):
            hidden = self._gru("inter", u[:, i], hidden)
            outs.append(hidden)
        u = u + torch.stack(outs, dim=1)

        logits = u @ self.dec_W.T + self.dec_b  # (B, T, F', P)
        logits = logits.transpose(-1, -2)  # (B, T, P, F')
        expanded = logits[..., self.band_of_bin]  # (B, T, P, F)
        mask = torch.softmax(expanded, dim=-2)
        return mask, hidden


def fuse(mask: torch.Tensor, beams: torch.Tensor) -> torch.Tensor:
    """Weighted fusion over the beam axis: (B, T, P, F) -> (B, T, F)."""
    return (mask.to(beams.dtype) * beams).sum(dim=-2)
