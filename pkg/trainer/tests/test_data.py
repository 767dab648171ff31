"""Dataset loading: manifest parsing, batching, WAV validation, splits."""

import json
import os

import numpy as np
import pytest

from beamfusion.roomsim import write_wav
from beamfusion.stft import StftConfig, analyze
from beamfusion_trainer.data import (DatasetIndex, SampleRecord, load_batch,
                                     load_manifest, split_train_val)
from beamfusion_trainer.stft import StftSetup, stft

FS = 16000.0


def _make_dataset(root, count, num_samples=8000, p=4, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(count):
        sid = f"sample_{i:05d}"
        d = os.path.join(root, sid)
        os.makedirs(d)
        beams = 0.1 * rng.standard_normal((p, num_samples))
        ref = 0.1 * rng.standard_normal(num_samples)
        write_wav(os.path.join(d, "beams.wav"), beams, FS)
        write_wav(os.path.join(d, "ref.wav"), ref, FS)
        records.append({"id": sid,
                        "paths": {"mix": f"{sid}/mix.wav",
                                  "beams": f"{sid}/beams.wav",
                                  "ref": f"{sid}/ref.wav"}})
    with open(os.path.join(root, "manifest.jsonl"), "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return root


def test_stft_matches_inference_engine():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(12000)
    ours = stft(x, StftSetup())
    theirs = analyze(x, StftConfig()).data
    assert ours.shape == theirs.shape
    assert np.max(np.abs(ours - theirs)) < 1e-6 * np.max(np.abs(theirs))


def test_load_manifest_and_batch_shapes(tmp_path):
    root = _make_dataset(str(tmp_path), 3)
    index = load_manifest(root)
    assert len(index) == 3
    beams, ref = load_batch(index, [0, 2])
    assert beams.shape[0] == 2 and ref.shape[0] == 2
    assert beams.shape[2] == 4 and beams.shape[3] == 257
    assert beams.shape[1] == ref.shape[1]


def test_load_batch_matches_reference_stft(tmp_path):
    root = _make_dataset(str(tmp_path), 1, seed=5)
    index = load_manifest(root)
    beams, ref = load_batch(index, [0])
    from beamfusion.roomsim import read_wav

    wav, _ = read_wav(os.path.join(root, "sample_00000", "beams.wav"))
    want = analyze(wav[1], StftConfig()).data
    got = beams[0, :, 1, :].numpy()
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want[:got.shape[0]])) < 1e-6 * scale
    refwav, _ = read_wav(os.path.join(root, "sample_00000", "ref.wav"))
    want_ref = analyze(refwav, StftConfig()).data
    assert np.max(np.abs(ref[0].numpy() - want_ref[:ref.shape[1]])) < 1e-6 * scale


def test_load_batch_empty_indices(tmp_path):
    root = _make_dataset(str(tmp_path), 1)
    index = load_manifest(root)
    beams, ref = load_batch(index, [])
    assert beams.shape[0] == 0 and ref.shape[0] == 0


def test_load_batch_crop_frames(tmp_path):
    root = _make_dataset(str(tmp_path), 2)
    index = load_manifest(root)
    beams, ref = load_batch(index, [0, 1], crop_frames=10)
    assert beams.shape[1] == 10 and ref.shape[1] == 10


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_manifest(str(tmp_path))


def test_corrupt_wav_error_names_file(tmp_path):
    root = _make_dataset(str(tmp_path), 1)
    bad = os.path.join(root, "sample_00000", "beams.wav")
    with open(bad, "wb") as fh:
        fh.write(b"not a wav at all")
    index = load_manifest(root)
    with pytest.raises(ValueError, match="beams.wav"):
        load_batch(index, [0])


def test_sample_rate_mismatch(tmp_path):
    root = _make_dataset(str(tmp_path), 1)
    index = load_manifest(root)
    with pytest.raises(ValueError, match="sample rate"):
        load_batch(index, [0], expected_fs=48000.0)


def test_split_deterministic_disjoint_fraction():
    records = [SampleRecord(f"sample_{i:05d}", "", "", {}) for i in range(500)]
    index = DatasetIndex(".", records)
    train, val = split_train_val(index, 0.1)
    train2, val2 = split_train_val(index, 0.1)
    assert train == train2 and val == val2
    assert sorted(train + val) == list(range(500))
    assert 0.05 <= len(val) / 500 <= 0.15


def test_split_tiny_dataset_keeps_validation():
    records = [SampleRecord(f"s{i}", "", "", {}) for i in range(3)]
    train, val = split_train_val(DatasetIndex(".", records), 0.1)
    assert len(val) >= 1 and len(train) >= 1
