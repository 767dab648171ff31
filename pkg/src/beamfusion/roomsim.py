"""Image-source room simulation, moving-interferer rendering, and dataset generation."""

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import fftconvolve

from .array import ArrayGeometry

FRAC_TAPS = 8  # windowed-sinc fractional-delay length
RIR_TAIL_PAD = 1024
ISM_DECAY_CALIBRATION = 1.5


def sabine_absorption(dims, t60: float) -> float:
    """Uniform wall absorption from the Sabine formula, clamped to (0, 1]."""
    if t60 <= 0:
        raise ValueError("t60 must be positive")
    dims = np.asarray(dims, dtype=float)
    v = float(np.prod(dims))
    s = 2.0 * float(dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2])
    alpha = 0.161 * v / (s * t60)
    return float(np.clip(alpha, 1e-4, 1.0))


def sabine_t60(dims, alpha: float) -> float:
    """Inverse of sabine_absorption (for unclamped alpha)."""
    dims = np.asarray(dims, dtype=float)
    v = float(np.prod(dims))
    s = 2.0 * float(dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2])
    return 0.161 * v / (s * alpha)


@dataclass(frozen=True)
class RoomConfig:
    dims: tuple = (8.0, 6.0, 3.0)
    t60: float = 0.3
    fs: float = 16000.0
    c: float = 343.0

    def __post_init__(self):
        if any(d <= 0 for d in self.dims):
            raise ValueError("room dimensions must be positive")
        if self.t60 < 0:
            raise ValueError("t60 must be non-negative")
        if self.t60 > 0:
            sabine_absorption(self.dims, self.t60)  # validates alpha range

    @property
    def max_order(self) -> int:
        if self.t60 == 0:
            return 0
        return int(np.ceil(self.c * self.t60 / (2.0 * min(self.dims)))) + 1

    @property
    def rir_length(self) -> int:
        return int(np.ceil(self.t60 * self.fs)) + RIR_TAIL_PAD

    def inside(self, pos, margin: float = 0.0) -> bool:
        pos = np.asarray(pos, dtype=float)
        return bool(np.all(pos > margin) and np.all(pos < np.asarray(self.dims) - margin))


@dataclass
class Rir:
    taps: np.ndarray
    fs: float


def _frac_delay_scatter(out, delays, amps):
    """Accumulate windowed-sinc pulses at fractional sample delays into out.

    The tap offsets t_k = k - K/2 + 1 - frac share a fractional part, so
    sin(pi*t_k) = (-1)^k sin(pi*frac) and the Hann term expands by the angle
    addition formula; this needs three trig evaluations per image instead of
    two per tap per image. Tap-weight arithmetic runs in float32 (the
    fractional part is in [0, 1), exact to ~1e-7 there), accumulation in
    float64.
    """
    n = out.size
    half = FRAC_TAPS // 2
    floor = np.floor(delays)
    base = floor.astype(np.int64) - half + 1 + FRAC_TAPS  # offset into padded buffer
    frac = (delays - floor).astype(np.float32)
    roll = frac >= 1.0  # float64 fraction just below 1 can round up to 1.0
    if roll.any():
        base[roll] += 1
        frac[roll] = 0.0
    amps32 = amps.astype(np.float32)
    pi = np.float32(np.pi)
    # reflection sin(pi f) = sin(pi (1 - f)) avoids cancellation near f = 1
    folded = np.minimum(frac, np.float32(1.0) - frac)
    pre = amps32 * (np.sin(pi * folded) / pi)
    cos_hb = np.cos(pi * frac / FRAC_TAPS * 2)
    sin_hb = np.sin(pi * frac / FRAC_TAPS * 2)
    exact = np.flatnonzero(frac < 1e-12)
    padded = np.zeros(n + 2 * FRAC_TAPS)
    for k in range(FRAC_TAPS):
        off = k - half + 1
        t = np.float32(off) - frac
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (pre if k % 2 == 0 else -pre) / t
        if exact.size:
            w[exact] = amps32[exact] if off == 0 else 0.0
        a = np.pi * off / FRAC_TAPS * 2.0
        w *= np.float32(0.5) + np.float32(0.5 * np.cos(a)) * cos_hb \
            + np.float32(0.5 * np.sin(a)) * sin_hb
        padded += np.bincount(base + k, weights=w, minlength=padded.size)
    out += padded[FRAC_TAPS:FRAC_TAPS + n]


def _image_lattice(room: RoomConfig, src_pos, max_dist: float, max_order: int):
    """Per-axis image coordinates and reflection counts, crossed into 3-D.

    Returns (positions (N, 3), reflection counts (N,)).
    """
    coords, refls = [], []
    for axis in range(3):
        s = src_pos[axis]
        length = room.dims[axis]
        nmax = min(max_order, int(np.ceil(max_dist / (2.0 * length))) + 1)
        n = np.arange(-nmax, nmax + 1)
        vals, counts = [], []
        for q in (0, 1):
            vals.append((1 - 2 * q) * s + 2.0 * n * length)
            counts.append(np.abs(n - q) + np.abs(n))
        coords.append(np.concatenate(vals))
        refls.append(np.concatenate(counts))
    cx, cy, cz = np.meshgrid(coords[0], coords[1], coords[2], indexing="ij")
    rx, ry, rz = np.meshgrid(refls[0], refls[1], refls[2], indexing="ij")
    pos = np.stack([cx.ravel(), cy.ravel(), cz.ravel()], axis=1)
    return pos, (rx + ry + rz).ravel()


def ism_rirs(room: RoomConfig, src_pos, mic_positions, max_order: int | None = None) -> np.ndarray:
    """Image-source RIRs from one source to several mics, shape (M, rir_length).

    Wall reflectivity is derived by Eyring inversion of the requested T60 so
    the simulated decay matches the target; each image contributes a
    spherical-attenuation windowed-sinc pulse at its propagation delay.
    """
    src_pos = np.asarray(src_pos, dtype=float)
    mic_positions = np.atleast_2d(np.asarray(mic_positions, dtype=float))
    if not room.inside(src_pos, margin=1e-6):
        raise ValueError("source must lie strictly inside the room")
    for mp in mic_positions:
        if not room.inside(mp, margin=1e-6):
            raise ValueError("microphone must lie strictly inside the room")
    order = room.max_order if max_order is None else max_order
    n = room.rir_length
    out = np.zeros((mic_positions.shape[0], n))
    if order == 0 or room.t60 == 0:
        imgs = src_pos[None, :]
        amps_base = np.ones(1)
    else:
        dims = np.asarray(room.dims, dtype=float)
        v = float(np.prod(dims))
        s = 2.0 * float(dims[0] * dims[1] + dims[0] * dims[2] + dims[1] * dims[2])
        # energy reflection from Eyring inversion; the extra factor compensates
        # the slower-than-Eyring specular decay of the rectangular lattice
        # (measured Schroeder T60 of the raw inversion runs ~1.5x long)
        beta = float(np.exp(-0.161 * v / (s * room.t60) / 2.0 * ISM_DECAY_CALIBRATION))
        max_dist = (n - FRAC_TAPS) / room.fs * room.c
        center = mic_positions.mean(axis=0)
        imgs, refl = _image_lattice(room, src_pos, max_dist, order)
        d_center = np.linalg.norm(imgs - center, axis=1)
        keep = d_center <= max_dist + 1.0
        imgs, refl = imgs[keep], refl[keep]
        amps_base = beta ** refl
    for mi, mp in enumerate(mic_positions):
        d = np.linalg.norm(imgs - mp, axis=1)
        if np.any(d < 1e-9):
            raise ValueError("source coincides with a microphone")
        delays = d * room.fs / room.c
        amps = amps_base / (4.0 * np.pi * d)
        in_range = delays < n - FRAC_TAPS
        _frac_delay_scatter(out[mi], delays[in_range], amps[in_range])
    return out


def ism_rir(room: RoomConfig, src_pos, mic_pos, max_order: int | None = None) -> Rir:
    """Single source-to-mic room impulse response."""
    return Rir(ism_rirs(room, src_pos, [mic_pos], max_order)[0], room.fs)


def schroeder_t60(rir: np.ndarray, fs: float, fit_db=(-5.0, -35.0)) -> float:
    """Reverberation time from backward-integrated energy, via a line fit
    on the decay curve between fit_db levels, extrapolated to -60 dB."""
    energy = np.cumsum(rir[::-1] ** 2)[::-1]
    energy = energy / energy[0]
    edc = 10.0 * np.log10(np.maximum(energy, 1e-30))
    mask = (edc <= fit_db[0]) & (edc >= fit_db[1])
    if mask.sum() < 10:
        raise ValueError("decay range too short for a T60 fit")
    t = np.arange(rir.size)[mask] / fs
    slope, intercept = np.polyfit(t, edc[mask], 1)
    if slope >= 0:
        raise ValueError("no decay detected")
    return -60.0 / slope


@dataclass(frozen=True)
class Static:
    position: tuple

    def positions(self):
        return [np.asarray(self.position, dtype=float)]

    def to_json(self):
        return {"type": "static", "position": list(self.position)}


@dataclass(frozen=True)
class CircularHop:
    """Piecewise-stationary circular motion: a new azimuth every `interval` seconds."""

    center: tuple
    radius: float
    start_az: float
    stop_az: float
    step: float = 10.0
    interval: float = 1.0

    def __post_init__(self):
        if self.radius <= 0 or self.interval <= 0 or self.step == 0:
            raise ValueError("radius, interval and step must be positive")

    def angles(self):
        n = int(round((self.stop_az - self.start_az) / self.step)) + 1
        return self.start_az + self.step * np.arange(max(n, 1))

    def positions(self):
        c = np.asarray(self.center, dtype=float)
        out = []
        for az in np.radians(self.angles()):
            out.append(c + self.radius * np.array([np.cos(az), np.sin(az), 0.0]))
        return out

    def to_json(self):
        return {"type": "circular_hop", "center": list(self.center),
                "radius": self.radius, "start_az": self.start_az,
                "stop_az": self.stop_az, "step": self.step, "interval": self.interval}


def trajectory_from_json(obj) -> "Static | CircularHop":
    if obj["type"] == "static":
        return Static(tuple(obj["position"]))
    if obj["type"] == "circular_hop":
        return CircularHop(tuple(obj["center"]), obj["radius"], obj["start_az"],
                           obj["stop_az"], obj.get("step", 10.0), obj.get("interval", 1.0))
    raise ValueError(f"unknown trajectory type {obj['type']!r}")


@dataclass
class Scenario:
    room: RoomConfig = field(default_factory=RoomConfig)
    array_center: tuple = (4.0, 2.0, 1.0)
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    target_position: tuple = (6.0, 2.0, 1.0)
    interferers: list = field(default_factory=list)
    snr_db: float | None = 30.0  # None disables the noise term
    seed: int = 0

    def __post_init__(self):
        for p in self.geometry.mic_positions(self.array_center):
            if not self.room.inside(p):
                raise ValueError("array does not fit inside the room")
        if not self.room.inside(self.target_position):
            raise ValueError("target outside the room")

    def to_json(self):
        return {
            "room": {"dims": list(self.room.dims), "t60": self.room.t60,
                     "fs": self.room.fs, "c": self.room.c},
            "array_center": list(self.array_center),
            "geometry": {"num_mics": self.geometry.num_mics,
                         "spacing": self.geometry.spacing,
                         "sound_speed": self.geometry.sound_speed,
                         "sample_rate": self.geometry.sample_rate},
            "target_position": list(self.target_position),
            "interferers": [t.to_json() for t in self.interferers],
            "snr_db": self.snr_db,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj) -> "Scenario":
        room = RoomConfig(tuple(obj["room"]["dims"]), obj["room"]["t60"],
                          obj["room"].get("fs", 16000.0), obj["room"].get("c", 343.0))
        geom = ArrayGeometry(obj["geometry"]["num_mics"], obj["geometry"]["spacing"],
                             obj["geometry"].get("sound_speed", 343.0),
                             obj["geometry"].get("sample_rate", 16000.0))
        return cls(room, tuple(obj["array_center"]), geom, tuple(obj["target_position"]),
                   [trajectory_from_json(t) for t in obj["interferers"]],
                   obj.get("snr_db"), obj.get("seed", 0))


def render_moving(signal: np.ndarray, traj, geometry: ArrayGeometry, room: RoomConfig,
                  array_center, max_order: int | None = None) -> np.ndarray:
    """Render a mono source along its trajectory to all mics, shape (M, N).

    The signal is split into interval-long segments, each convolved with the
    RIRs of its hop position; convolution tails ring into later segments.
    """
    signal = np.asarray(signal, dtype=float)
    positions = traj.positions()
    for p in positions:
        if not room.inside(p):
            raise ValueError("trajectory leaves the room")
    mics = geometry.mic_positions(array_center)
    seg_len = (signal.size if isinstance(traj, Static)
               else int(round(traj.interval * room.fs)))
    if signal.size < seg_len and not isinstance(traj, Static):
        raise ValueError("signal shorter than one trajectory interval")
    out = np.zeros((geometry.num_mics, signal.size))
    for k, start in enumerate(range(0, signal.size, seg_len)):
        pos = positions[min(k, len(positions) - 1)]
        seg = signal[start:start + seg_len]
        rirs = ism_rirs(room, pos, mics, max_order)
        for mi in range(geometry.num_mics):
            conv = fftconvolve(seg, rirs[mi])
            stop = min(start + conv.size, signal.size)
            out[mi, start:stop] += conv[:stop - start]
    return out


def synthesize_scenario(scn: Scenario, target_wav: np.ndarray, interferer_wavs: list,
                        max_order: int | None = None) -> dict:
    """Mix target, moving interferers, and sensor noise at the requested SNR.

    Returns mixture/reference plus the separated components (all at the mics)
    for shadow-filter evaluation; mixture == target + interference + noise
    sample-wise.
    """
    target_wav = np.asarray(target_wav, dtype=float)
    if target_wav.size == 0:
        raise ValueError("empty target")
    if len(interferer_wavs) != len(scn.interferers):
        raise ValueError("one waveform required per interferer")
    target_m = render_moving(target_wav, Static(scn.target_position), scn.geometry,
                             scn.room, scn.array_center, max_order)
    interf_m = np.zeros_like(target_m)
    for traj, wav in zip(scn.interferers, interferer_wavs):
        wav = np.asarray(wav, dtype=float)
        n = min(wav.size, target_wav.size)
        rendered = render_moving(wav[:target_wav.size], traj, scn.geometry,
                                 scn.room, scn.array_center, max_order)
        interf_m[:, :n] += rendered[:, :n]
    rng = np.random.default_rng(np.random.SeedSequence([int(scn.seed) & 0xFFFFFFFF, 0xA0]))
    noise_m = np.zeros_like(target_m)
    if scn.snr_db is not None:
        noise_m = rng.standard_normal(target_m.shape)
        target_energy = float(np.sum(target_m[0] ** 2))
        if target_energy <= 0:
            raise ValueError("silent target; SNR is undefined")
        noise_energy = float(np.sum(noise_m[0] ** 2))
        gain = np.sqrt(target_energy / noise_energy * 10.0 ** (-scn.snr_db / 10.0))
        noise_m *= gain
    mixture = target_m + interf_m + noise_m
    reference = render_moving(target_wav, Static(scn.target_position), scn.geometry,
                              scn.room, scn.array_center, max_order=0)[0]
    return {"mixture": mixture, "reference": reference,
            "target_m": target_m, "interf_m": interf_m, "noise_m": noise_m}


def silence_trim(wav: np.ndarray, fs: float, max_gap: float = 0.1,
                 frame: float = 0.01, threshold_db: float = -40.0) -> np.ndarray:
    """Shorten sub-threshold runs longer than max_gap down to max_gap."""
    wav = np.asarray(wav, dtype=float)
    flen = int(round(frame * fs))
    nframes = wav.size // flen
    if nframes == 0:
        raise ValueError("input shorter than one frame")
    frames = wav[:nframes * flen].reshape(nframes, flen)
    rms = np.sqrt(np.mean(frames ** 2, axis=1))
    peak = rms.max()
    if peak <= 0:
        raise ValueError("all-silent input")
    loud = rms > peak * 10.0 ** (threshold_db / 20.0)
    if not np.any(loud):
        raise ValueError("all-silent input")
    max_frames = max(1, int(round(max_gap / frame)))
    keep = np.ones(nframes, dtype=bool)
    i = 0
    while i < nframes:
        if loud[i]:
            i += 1
            continue
        j = i
        while j < nframes and not loud[j]:
            j += 1
        if j - i > max_frames:
            keep[i + max_frames:j] = False
        i = j
    pieces = [frames[k] for k in range(nframes) if keep[k]]
    tail = wav[nframes * flen:]
    return np.concatenate(pieces + ([tail] if tail.size else []))


def synthetic_speech(duration: float, fs: float, rng: np.random.Generator) -> np.ndarray:
    """Speech-like test signal: pitch-pulsed + noisy excitation through
    slowly wandering resonators, with syllabic amplitude modulation."""
    n = int(round(duration * fs))
    pitch = rng.uniform(90.0, 200.0)
    phase = np.cumsum(np.full(n, pitch / fs) * (1.0 + 0.02 * rng.standard_normal(n)))
    pulses = (np.diff(np.floor(phase), prepend=0.0) > 0).astype(float)
    excitation = pulses + 0.3 * rng.standard_normal(n)
    out = np.zeros(n)
    block = int(0.05 * fs)
    formants = rng.uniform([300.0, 900.0, 2200.0], [800.0, 1800.0, 3200.0])
    state = {}
    from scipy.signal import lfilter
    for start in range(0, n, block):
        seg = excitation[start:start + block]
        y = seg
        formants = np.clip(formants + rng.normal(0.0, 30.0, 3), 250.0, 3800.0)
        for fi, fc in enumerate(formants):
            r = 0.97
            b = [1.0 - r]
            a = [1.0, -2.0 * r * np.cos(2.0 * np.pi * fc / fs), r * r]
            zi = state.get(fi, np.zeros(2))
            y, state[fi] = lfilter(b, a, y, zi=zi)
        out[start:start + block] = y
    # syllabic envelope around 4 Hz, kept strictly above zero so no long gaps
    t = np.arange(n) / fs
    env = 0.55 + 0.45 * np.sin(2.0 * np.pi * rng.uniform(3.0, 5.0) * t
                               + rng.uniform(0.0, 2.0 * np.pi))
    out *= env
    return out / (np.max(np.abs(out)) + 1e-12)


def write_wav(path, data: np.ndarray, fs: float):
    """32-bit float WAV; multichannel data is (channels, samples)."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        data = data.T  # scipy expects (samples, channels)
    wavfile.write(path, int(fs), data)


def read_wav(path):
    """Returns (data, fs); multichannel data comes back as (channels, samples)."""
    fs, data = wavfile.read(path)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        data = data.astype(np.float64)
    if data.ndim == 2:
        data = data.T
    return data, float(fs)


def _sample_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(index)])


@dataclass
class DatasetConfig:
    out_dir: str
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    room_dims: tuple = (8.0, 6.0, 3.0)
    array_center: tuple = (4.0, 2.0, 1.0)
    target_position: tuple = (6.0, 2.0, 1.0)
    duration: float = 10.0
    t60_range: tuple = (0.2, 0.8)
    snr_range: tuple = (20.0, 40.0)
    interferer_radius: float = 2.0
    interferer_start_az: float = 90.0
    interferer_stop_az: float = 180.0
    interferer_step: float = 10.0
    interferer_gain_db: float = 0.0  # level of the interferer clip vs the target clip
    clip_dir: str | None = None  # 16 kHz mono WAVs; None = synthetic speech
    save_components: bool = False


def _source_clip(cfg: DatasetConfig, rng: np.random.Generator, fs: float) -> np.ndarray:
    n = int(round(cfg.duration * fs))
    if cfg.clip_dir is None:
        wav = synthetic_speech(cfg.duration * 1.2, fs, rng)
    else:
        files = sorted(f for f in os.listdir(cfg.clip_dir) if f.lower().endswith(".wav"))
        if not files:
            raise ValueError(f"no WAV files in {cfg.clip_dir}")
        data, wav_fs = read_wav(os.path.join(cfg.clip_dir, files[rng.integers(len(files))]))
        if wav_fs != fs:
            raise ValueError("corpus sample rate mismatch")
        wav = data if data.ndim == 1 else data[0]
    wav = silence_trim(wav, fs)
    if wav.size < n:
        wav = np.tile(wav, int(np.ceil(n / wav.size)))
    start = rng.integers(max(wav.size - n, 0) + 1)
    return wav[start:start + n]


def _generate_sample(cfg: DatasetConfig, index: int, seed: int, bank) -> dict:
    from . import beamformer as bf
    from .stft import StftConfig, analyze_multichannel, reconstruct

    rng = np.random.default_rng(_sample_seed(seed, index))
    fs = cfg.geometry.sample_rate
    t60 = float(rng.uniform(*cfg.t60_range))
    snr = float(rng.uniform(*cfg.snr_range))
    room = RoomConfig(cfg.room_dims, t60, fs)
    traj = CircularHop(cfg.array_center, cfg.interferer_radius,
                       cfg.interferer_start_az, cfg.interferer_stop_az,
                       cfg.interferer_step)
    scn = Scenario(room, cfg.array_center, cfg.geometry, cfg.target_position,
                   [traj], snr, seed=int(rng.integers(2 ** 31)))
    target = _source_clip(cfg, rng, fs)
    interferer = _source_clip(cfg, rng, fs) * 10.0 ** (cfg.interferer_gain_db / 20.0)
    parts = synthesize_scenario(scn, target, [interferer])

    sample_dir = os.path.join(cfg.out_dir, f"sample_{index:05d}")
    os.makedirs(sample_dir, exist_ok=True)
    write_wav(os.path.join(sample_dir, "mix.wav"), parts["mixture"], fs)
    write_wav(os.path.join(sample_dir, "ref.wav"), parts["reference"], fs)
    mc = analyze_multichannel(parts["mixture"], StftConfig())
    beams = bf.apply_bank(bank, mc)
    beam_time = np.stack([reconstruct(b) for b in beams])
    write_wav(os.path.join(sample_dir, "beams.wav"), beam_time, fs)
    if cfg.save_components:
        for key in ("target_m", "interf_m", "noise_m"):
            write_wav(os.path.join(sample_dir, f"{key}.wav"), parts[key], fs)
    return {
        "id": f"sample_{index:05d}",
        "paths": {"mix": f"sample_{index:05d}/mix.wav",
                  "beams": f"sample_{index:05d}/beams.wav",
                  "ref": f"sample_{index:05d}/ref.wav"},
        "t60_s": t60,
        "snr_db": snr,
        "seed": seed,
        "trajectory": traj.to_json(),
    }


def gen_dataset(cfg: DatasetConfig, count: int, seed: int, jobs: int = 1) -> str:
    """Generate `count` scenario samples plus a JSON-lines manifest.

    Deterministic for a fixed seed regardless of `jobs`: every sample derives
    its own RNG stream from (seed, index).
    """
    from .array import FrequencyGrid
    from .beamformer import standard_bank
    from .stft import StftConfig

    os.makedirs(cfg.out_dir, exist_ok=True)
    grid = FrequencyGrid(StftConfig().nfft, cfg.geometry.sample_rate)
    bank = standard_bank(cfg.geometry, grid)
    records = [None] * count
    try:
        if jobs > 1 and count > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(_generate_sample, cfg, i, seed, bank): i
                           for i in range(count)}
                for fut, i in futures.items():
                    records[i] = fut.result()
        else:
            for i in range(count):
                records[i] = _generate_sample(cfg, i, seed, bank)
    except Exception:
        import shutil
        for i in range(count):
            d = os.path.join(cfg.out_dir, f"sample_{i:05d}")
            if os.path.isdir(d):
                shutil.rmtree(d, ignore_errors=True)
        raise
    manifest = os.path.join(cfg.out_dir, "manifest.jsonl")
    with open(manifest, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return manifest
