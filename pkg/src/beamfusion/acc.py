"""Adaptive convex combination of beam outputs via exponentiated-gradient updates.

Per frequency bin, the P beamformer outputs are fused with weights on the
probability simplex; the weights are updated multiplicatively from the
gradient of the fused output power, which keeps them non-negative and (after
renormalization) summing to one, so the fused filter stays distortionless.
"""

from dataclasses import dataclass

import numpy as np

from .stft import Spectrogram

GRAD_EPS = 1e-12


@dataclass
class AccState:
    """Mutable per-stream combination state; alpha has shape (F, P)."""

    alpha: np.ndarray
    step_size: float
    weight_floor: float

    @property
    def num_filters(self) -> int:
        return self.alpha.shape[1]


def acc_init(num_filters: int, num_bins: int, step_size: float = 0.1,
             weight_floor: float = 1e-4) -> AccState:
    """Uniform simplex initialization alpha = 1/P at every bin."""
    if num_filters < 2:
        raise ValueError("need at least 2 filters to combine")
    if step_size <= 0:
        raise ValueError("step_size must be positive")
    if not 0.0 < weight_floor < 1.0 / num_filters:
        raise ValueError("weight_floor must lie in (0, 1/P)")
    alpha = np.full((num_bins, num_filters), 1.0 / num_filters)
    return AccState(alpha, step_size, weight_floor)


def acc_step(state: AccState, beam_frame: np.ndarray):
    """One exponentiated-gradient update from a single frame of beam outputs.

    beam_frame: complex (F, P). The fused output uses the weights from before
    the update (the frame that triggers adaptation is fused causally); returns
    (fused_frame (F,), weights_used (F, P)).
    """
    z = np.asarray(beam_frame)
    if z.shape != state.alpha.shape:
        raise ValueError("beam frame shape does not match state")
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite beam values")
    weights_used = state.alpha.copy()
    fused = np.sum(weights_used * z, axis=1)
    # gradient of |fused|^2 wrt alpha_p, normalized per bin to be scale-free
    grad = 2.0 * np.real(np.conj(fused)[:, None] * z)
    scale = np.sum(np.abs(z) ** 2, axis=1, keepdims=True) + GRAD_EPS
    alpha = state.alpha * np.exp(-state.step_size * grad / scale)
    alpha = np.maximum(alpha, state.weight_floor)
    state.alpha = alpha / np.sum(alpha, axis=1, keepdims=True)
    return fused, weights_used


def acc_run(beam_outputs: list, step_size: float = 0.1, weight_floor: float = 1e-4):
    """Run the ACC over whole spectrograms.

    beam_outputs: list of P Spectrograms with matching shapes. Returns
    (fused Spectrogram, weight trajectory (T, F, P)); the trajectory holds the
    weights actually used at each frame.
    """
    shapes = {b.data.shape for b in beam_outputs}
    if len(shapes) != 1:
        raise ValueError("beam outputs must share shape")
    z = np.stack([b.data for b in beam_outputs], axis=-1)  # (T, F, P)
    t, f, p = z.shape
    state = acc_init(p, f, step_size, weight_floor)
    fused = np.empty((t, f), dtype=complex)
    traj = np.empty((t, f, p))
    for i in range(t):
        fused[i], traj[i] = acc_step(state, z[i])
    cfg = beam_outputs[0].config
    return Spectrogram(fused, cfg, num_samples=beam_outputs[0].num_samples), traj
