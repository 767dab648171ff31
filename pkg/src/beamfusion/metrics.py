"""Evaluation: shadow filtering, delta-SNR, SI-SDR, and BSS-eval SIR."""

import numpy as np
from scipy.linalg import solve, toeplitz
from scipy.signal import fftconvolve

DB_CAP = 60.0
BSS_FILTER_LEN = 512


def _pow_db(num: float, den: float) -> float:
    if den <= 0:
        return DB_CAP if num > 0 else 0.0
    if num <= 0:
        return -DB_CAP
    return float(np.clip(10.0 * np.log10(num / den), -DB_CAP, DB_CAP))


def shadow_process(weights, component_beams: np.ndarray) -> np.ndarray:
    """Re-apply a mixture-derived weight trajectory to an isolated component.

    weights: (T, F, P); component_beams: complex (P, T, F) — the component
    passed through the same fixed filter bank. Returns the fused (T, F)
    spectrogram; by linearity the shadow outputs of the components sum to the
    processed mixture.
    """
    weights = np.asarray(weights, dtype=np.float64)
    z = np.asarray(component_beams)
    if weights.shape != (z.shape[1], z.shape[2], z.shape[0]):
        raise ValueError("weight trajectory does not match component beams")
    return np.einsum("tfp,ptf->tf", weights, z)


def delta_snr(s_in: np.ndarray, v_in: np.ndarray, s_out: np.ndarray,
              v_out: np.ndarray) -> float:
    """Output SNR minus input SNR, energies in dB (input side at mic 1)."""
    snr_in = _pow_db(float(np.sum(np.abs(s_in) ** 2)), float(np.sum(np.abs(v_in) ** 2)))
    snr_out = _pow_db(float(np.sum(np.abs(s_out) ** 2)), float(np.sum(np.abs(v_out) ** 2)))
    return snr_out - snr_in


def si_sdr(est: np.ndarray, ref: np.ndarray) -> float:
    """Scale-invariant SDR in dB, capped at +/-60."""
    est = np.asarray(est, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if est.shape != ref.shape:
        raise ValueError("length mismatch")
    ref_energy = float(np.dot(ref, ref))
    if ref_energy <= 0:
        raise ValueError("silent reference")
    target = (np.dot(est, ref) / ref_energy) * ref
    noise = est - target
    return _pow_db(float(np.dot(target, target)), float(np.dot(noise, noise)))


def _shift_gram(x: np.ndarray, y: np.ndarray, flen: int) -> np.ndarray:
    """Gram block G[i, j] = <shift(x, i), shift(y, j)> via cross-correlation."""
    full = fftconvolve(x, y[::-1])
    lags = np.arange(-(flen - 1), flen)
    corr = full[y.size - 1 + lags]  # corr[k] = sum x[n+k] y[n]
    first_col = corr[flen - 1::-1]   # k = 0, -1, ..., -(flen-1)
    first_row = corr[flen - 1:]      # k = 0, 1, ..., flen-1
    return toeplitz(first_col, first_row)


def _project(est: np.ndarray, refs: list, flen: int):
    """Least-squares projection of est onto the span of shifted references."""
    k = len(refs)
    g = np.empty((k * flen, k * flen))
    b = np.empty(k * flen)
    for i, ri in enumerate(refs):
        for j, rj in enumerate(refs):
            g[i * flen:(i + 1) * flen, j * flen:(j + 1) * flen] = _shift_gram(ri, rj, flen)
        full = fftconvolve(est, ri[::-1])
        b[i * flen:(i + 1) * flen] = full[ri.size - 1:ri.size - 1 + flen]
    g += 1e-8 * np.trace(g) / g.shape[0] * np.eye(g.shape[0])
    coeffs = solve(g, b, assume_a="pos")
    proj = np.zeros(est.size)
    for i, ri in enumerate(refs):
        proj += fftconvolve(ri, coeffs[i * flen:(i + 1) * flen])[:est.size]
    return proj


def bss_sir(est: np.ndarray, ref_target: np.ndarray, ref_interf: np.ndarray,
            filter_len: int = BSS_FILTER_LEN) -> float:
    """Signal-to-interference ratio after BSS-eval-style filter decomposition.

    est is projected onto filter_len-tap shifted copies of the target
    reference (s_target), then onto the joint target+interference span; the
    difference attributes the interference leak. Returns dB, capped.
    """
    est = np.asarray(est, dtype=float)
    ref_target = np.asarray(ref_target, dtype=float)
    ref_interf = np.asarray(ref_interf, dtype=float)
    if not (est.shape == ref_target.shape == ref_interf.shape):
        raise ValueError("length mismatch")
    if np.dot(ref_target, ref_target) <= 0 or np.dot(ref_interf, ref_interf) <= 0:
        raise ValueError("silent reference")
    s_target = _project(est, [ref_target], filter_len)
    joint = _project(est, [ref_target, ref_interf], filter_len)
    e_interf = joint - s_target
    return _pow_db(float(np.dot(s_target, s_target)), float(np.dot(e_interf, e_interf)))


def sir_vs_angle(run_trial, angles_deg=None, trials: int = 1) -> list:
    """Average SIR per interference angle.

    run_trial(angle_deg, trial_index) must return an SIR in dB. Returns a
    list of dicts {angle_deg, sir_db, n_trials}.
    """
    if angles_deg is None:
        angles_deg = np.arange(90.0, 181.0, 10.0)
    curve = []
    for angle in angles_deg:
        vals = [float(run_trial(float(angle), t)) for t in range(trials)]
        curve.append({"angle_deg": float(angle), "sir_db": float(np.mean(vals)),
                      "n_trials": trials})
    return curve
