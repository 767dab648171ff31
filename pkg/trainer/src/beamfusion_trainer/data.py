"""Dataset access: manifest parsing, WAV loading, batching, train/val split."""

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np
import torch
from scipy.io import wavfile

from .stft import StftSetup, stft


@dataclass(frozen=True)
class SampleRecord:
    id: str
    beams_path: str
    ref_path: str
    meta: dict


@dataclass
class DatasetIndex:
    root: str
    records: list

    def __len__(self):
        return len(self.records)


def load_manifest(dataset_dir: str) -> DatasetIndex:
    path = os.path.join(dataset_dir, "manifest.jsonl")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no manifest at {path}")
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            records.append(SampleRecord(
                id=rec["id"],
                beams_path=os.path.join(dataset_dir, rec["paths"]["beams"]),
                ref_path=os.path.join(dataset_dir, rec["paths"]["ref"]),
                meta=rec))
    return DatasetIndex(dataset_dir, records)


def split_train_val(index: DatasetIndex, val_fraction: float = 0.1):
    """Deterministic split by hash of the sample id; returns (train, val) indices."""
    train, val = [], []
    buckets = max(int(round(1.0 / val_fraction)), 1)
    for i, rec in enumerate(index.records):
        digest = hashlib.sha256(rec.id.encode("utf-8")).digest()
        if int.from_bytes(digest[:4], "little") % buckets == 0:
            val.append(i)
        else:
            train.append(i)
    if not val and index.records:
        val.append(train.pop())  # tiny datasets still get a validation sample
    return train, val


def _read_wav(path: str):
    try:
        fs, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise ValueError(f"cannot read WAV {path!r}: {exc}") from exc
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data.T  # (channels, samples)
    return data, float(fs)


def load_batch(index: DatasetIndex, indices, setup: StftSetup = StftSetup(),
               expected_fs: float = 16000.0, crop_frames: int | None = None):
    """Load sample indices into (beams (B, T, P, F) complex64, ref (B, T, F)).

    Samples are cropped (from the front) to a common frame count; pass
    crop_frames to cap it further.
    """
    if len(indices) == 0:
        empty = torch.zeros((0, 0, 0, setup.num_bins), dtype=torch.complex64)
        return empty, torch.zeros((0, 0, setup.num_bins), dtype=torch.complex64)
    beam_specs, ref_specs = [], []
    for i in indices:
        rec = index.records[i]
        beams, fs = _read_wav(rec.beams_path)
        if fs != expected_fs:
            raise ValueError(f"{rec.beams_path!r}: sample rate {fs}, "
                             f"expected {expected_fs}")
        if beams.ndim != 2:
            raise ValueError(f"{rec.beams_path!r}: expected multichannel beams")
        ref, fs = _read_wav(rec.ref_path)
        if fs != expected_fs:
            raise ValueError(f"{rec.ref_path!r}: sample rate {fs}, "
                             f"expected {expected_fs}")
        if ref.ndim != 1:
            raise ValueError(f"{rec.ref_path!r}: expected a mono reference")
        beam_specs.append(np.stack([stft(ch, setup) for ch in beams]))  # (P,T,F)
        ref_specs.append(stft(ref, setup))  # (T, F)
    t = min(min(b.shape[1] for b in beam_specs), min(r.shape[0] for r in ref_specs))
    if crop_frames is not None:
        t = min(t, crop_frames)
    beams_out = torch.tensor(
        np.stack([b[:, :t].transpose(1, 0, 2) for b in beam_specs]),
        dtype=torch.complex64)  # (B, T, P, F)
    ref_out = torch.tensor(np.stack([r[:t] for r in ref_specs]),
                           dtype=torch.complex64)
    return beams_out, ref_out
