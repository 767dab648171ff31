"""End-to-end enhancement paths shared by the CLI and the evaluation suite."""

import numpy as np

from . import acc as acc_mod
from . import beamformer as bf
from . import fusion as fu
from .stft import Spectrogram, StftConfig, analyze_multichannel, reconstruct


def beam_spectrograms(mixture: np.ndarray, bank: bf.FilterBank,
                      cfg: StftConfig = StftConfig()) -> list:
    """STFT the multichannel mixture and apply the whole filter bank."""
    mc = analyze_multichannel(mixture, cfg)
    return bf.apply_bank(bank, mc)


def run_fixed(beams: list, index: int):
    """Pass-through of one fixed beam; weight trajectory is one-hot."""
    if not 0 <= index < len(beams):
        raise ValueError(f"fixed beam index {index} out of range")
    spec = beams[index]
    t, f = spec.data.shape
    traj = np.zeros((t, f, len(beams)))
    traj[:, :, index] = 1.0
    return reconstruct(spec), traj


def run_acc(beams: list, step_size: float = 0.1, weight_floor: float = 1e-4):
    fused, traj = acc_mod.acc_run(beams, step_size, weight_floor)
    return reconstruct(fused), traj


def run_neural(beams: list, params: fu.ModelParams, fs: float = 16000.0):
    signal, masks = fu.enhance_stream(params, beams, fs)
    # masks are (P, T, F); report as (T, F, P) like the other modes
    return signal, np.moveaxis(masks, 0, -1).astype(np.float64)


def enhance(mixture: np.ndarray, bank: bf.FilterBank, mode: str,
            params: fu.ModelParams | None = None,
            cfg: StftConfig = StftConfig(), fs: float = 16000.0):
    """Enhance a multichannel mixture; mode is 'fixed:<p>', 'acc', or 'neural'.

    Returns (enhanced mono signal, weight trajectory (T, F, P)).
    """
    beams = beam_spectrograms(mixture, bank, cfg)
    if mode.startswith("fixed:"):
        return run_fixed(beams, int(mode.split(":", 1)[1]))
    if mode == "acc":
        return run_acc(beams)
    if mode == "neural":
        if params is None:
            raise ValueError("neural mode requires model parameters")
        return run_neural(beams, params, fs)
    raise ValueError(f"unknown mode {mode!r}")


def shadow_components(traj: np.ndarray, bank: bf.FilterBank, components: dict,
                      cfg: StftConfig = StftConfig()) -> dict:
    """Apply a mixture-derived weight trajectory to each isolated component.

    components maps name -> multichannel time signal; returns name -> mono
    time-domain shadow output.
    """
    from .metrics import shadow_process

    out = {}
    for name, sig in components.items():
        beams = beam_spectrograms(np.asarray(sig), bank, cfg)
        stack = np.stack([b.data for b in beams])
        fused = shadow_process(traj, stack)
        spec = Spectrogram(fused, cfg, num_samples=beams[0].num_samples)
        out[name] = reconstruct(spec)
    return out


def save_filter_bank(bank: bf.FilterBank, path):
    from . import tensorfile

    header = {"M": bank.geometry.num_mics, "spacing": bank.geometry.spacing,
              "fs": bank.geometry.sample_rate, "nfft": bank.grid.nfft,
              "theta_s": bank.theta_s}
    tensors = {}
    for f in bank.filters:
        tensors[f"filter/{f.label}/coeffs"] = np.stack(
            [np.real(f.coeffs), np.imag(f.coeffs)], axis=-1)
        null = f.theta_null if f.theta_null is not None else np.nan
        tensors[f"filter/{f.label}/theta_null"] = np.array([null])
    tensorfile.write_filterbank_file(path, header, tensors)


def load_filter_bank(path) -> bf.FilterBank:
    from . import tensorfile
    from .array import ArrayGeometry, FrequencyGrid

    header, tensors = tensorfile.read_filterbank_file(path)
    geom = ArrayGeometry(header["M"], header["spacing"], sample_rate=header["fs"])
    grid = FrequencyGrid(header["nfft"], header["fs"])
    labels = []
    for name in tensors:
        if name.endswith("/coeffs"):
            labels.append(name.split("/")[1])
    filters = []
    for label in labels:
        ri = tensors[f"filter/{label}/coeffs"].astype(np.float64)
        coeffs = ri[..., 0] + 1j * ri[..., 1]
        null = float(tensors[f"filter/{label}/theta_null"][0])
        filters.append(bf.FixedFilter(coeffs, label, header["theta_s"],
                                      None if np.isnan(null) else null))
    return bf.FilterBank(filters, geom, grid)
