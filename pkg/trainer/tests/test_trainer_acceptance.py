"""Trainer acceptance suite: one printed PASS/FAIL line per criterion.

Run with `pytest trainer/tests/test_trainer_acceptance.py -v -s` to see the report
lines. The desk-scale run trains on a generated 200-sample dataset and is
marked slow.
"""

import time

import numpy as np
import pytest
import torch

from beamfusion import fusion as fu
from beamfusion import pipeline
from beamfusion.array import ArrayGeometry, FrequencyGrid
from beamfusion.beamformer import standard_bank
from beamfusion.metrics import delta_snr
from beamfusion.roomsim import DatasetConfig, gen_dataset, read_wav
from beamfusion_trainer.model import FusionNet
from beamfusion_trainer.train import TrainConfig, train, export_weights

FS = 16000.0


def _report(name: str, ok: bool, detail: str = ""):
    tag = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {tag}: {name}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def test_cross_component_mask_parity(tmp_path):
    rng = np.random.default_rng(3)
    net = FusionNet(seed=3)
    path = tmp_path / "w.bfw"
    export_weights(net, path)
    params = fu.load_model(path)

    z = rng.standard_normal((4, 16, 257)) + 1j * rng.standard_normal((4, 16, 257))
    z = z.astype(np.complex64)
    ref_masks, _ = fu.infer_run(params, z)
    with torch.no_grad():
        mask, _ = net(torch.tensor(z.transpose(1, 0, 2)[None]))
    err = float(np.max(np.abs(mask[0].numpy().transpose(1, 0, 2) - ref_masks)))
    _report("cross-component parity: trainer forward vs engine masks <= 1e-5",
            err <= 1e-5, f"max |diff|={err:.2e}")


@pytest.mark.slow
def test_desk_scale_training_and_deployment(tmp_path):
    train_dir = str(tmp_path / "train200")
    eval_dir = str(tmp_path / "eval20")
    desk = dict(duration=4.0, t60_range=(0.2, 0.25), interferer_gain_db=20.0)
    gen_dataset(DatasetConfig(out_dir=train_dir, **desk), 200, seed=11)
    gen_dataset(DatasetConfig(out_dir=eval_dir, save_components=True, **desk),
                20, seed=99)

    weights = str(tmp_path / "desk.bfw")
    cfg = TrainConfig(dataset_dir=train_dir, out_path=weights,
                      log_path=str(tmp_path / "loss.csv"), epochs=5, seed=0)
    t0 = time.perf_counter()
    records, _ = train(cfg)
    elapsed = time.perf_counter() - t0
    _report("desk training: 200 samples, 5 epochs, CPU <= 15 min",
            elapsed <= 900.0, f"{elapsed:.0f} s")
    ratio = records[-1].train_loss / records[0].train_loss
    _report("desk training: final loss <= 0.8x epoch-1 loss",
            ratio <= 0.8,
            f"epoch1={records[0].train_loss:.4f}, "
            f"final={records[-1].train_loss:.4f}, ratio={ratio:.3f}")

    params = fu.load_model(weights)
    bank = standard_bank(ArrayGeometry(), FrequencyGrid(512, FS))
    modes = ["fixed:0", "fixed:1", "fixed:2", "fixed:3", "acc", "neural"]
    gains = {m: [] for m in modes}
    for i in range(20):
        d = f"{eval_dir}/sample_{i:05d}"
        mix, _ = read_wav(f"{d}/mix.wav")
        target, _ = read_wav(f"{d}/target_m.wav")
        interf, _ = read_wav(f"{d}/interf_m.wav")
        sensor, _ = read_wav(f"{d}/noise_m.wav")
        noise = interf + sensor
        for m in modes:
            _, traj = pipeline.enhance(mix, bank, m,
                                       params if m == "neural" else None)
            shadow = pipeline.shadow_components(traj, bank,
                                                {"s": target, "v": noise})
            gains[m].append(delta_snr(target[0], noise[0],
                                      shadow["s"], shadow["v"]))
    mean = {m: float(np.mean(gains[m])) for m in modes}
    best_dma = max(mean[m] for m in modes[:4])
    detail = ", ".join(f"{m}={mean[m]:.2f}" for m in modes)
    _report("held-out dSNR: trained fusion >= every single-beam dSNR",
            mean["neural"] >= best_dma, detail + " dB")
    _report("held-out dSNR: trained fusion >= adaptive combination - 1 dB",
            mean["neural"] >= mean["acc"] - 1.0,
            f"neural={mean['neural']:.2f}, acc={mean['acc']:.2f} dB")
