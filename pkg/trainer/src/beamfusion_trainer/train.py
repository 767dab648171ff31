"""Training loop: Adam on complex-spectrogram MSE with a plateau LR schedule."""

import argparse
import copy
import csv
import sys
from dataclasses import dataclass, field

import numpy as np
import torch

from .bfw import write_weight_file
from .data import DatasetIndex, load_batch, load_manifest, split_train_val
from .model import FusionNet, fuse
from .stft import StftSetup


@dataclass
class TrainConfig:
    dataset_dir: str
    out_path: str
    log_path: str | None = None
    epochs: int = 50
    batch: int = 30
    lr0: float = 1e-3
    lr_min: float = 1e-4
    patience: int = 5
    halving: float = 0.5
    seed: int = 0
    crop_frames: int | None = 250
    bptt_chunk: int = 100
    val_fraction: float = 0.1
    D: int = 32
    Fp: int = 64
    K: int = 32

    def __post_init__(self):
        if self.lr_min > self.lr0:
            raise ValueError("lr_min must not exceed lr0")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch must be positive")


@dataclass
class LossRecord:
    epoch: int
    train_loss: float
    val_loss: float
    lr: float


class PlateauSchedule:
    """Halve the rate after `patience` consecutive non-improving epochs."""

    def __init__(self, lr0: float, factor: float = 0.5, patience: int = 5,
                 lr_min: float = 1e-4):
        self.lr = lr0
        self.factor = factor
        self.patience = patience
        self.lr_min = lr_min
        self.best = np.inf
        self.bad_epochs = 0

    def update(self, val_loss: float) -> float:
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr = max(self.lr * self.factor, self.lr_min)
                self.bad_epochs = 0
        return self.lr


def complex_mse(fused: torch.Tensor, reference: torch.Tensor) -> torch.Tensor:
    """Mean over all (batch, time, bin) entries of |fused - reference|^2."""
    if fused.shape != reference.shape:
        raise ValueError("fused and reference shapes differ")
    diff = fused - reference
    return (diff.real ** 2 + diff.imag ** 2).mean()


def _batch_loss(model: FusionNet, beams: torch.Tensor, ref: torch.Tensor,
                chunk: int, optimizer=None) -> float:
    """Chunked pass over the time axis; one optimizer step per chunk.

    Gradients are truncated at chunk boundaries (the temporal hidden state is
    detached), which bounds activation memory; the returned loss value is the
    full-sequence complex MSE under the weights each chunk was computed with.
    """
    t = beams.shape[1]
    total = 0.0
    denom = float(beams.shape[0] * t * beams.shape[3])
    hidden = None
    for start in range(0, t, chunk):
        sl = slice(start, min(start + chunk, t))
        b = beams[:, sl]
        mask, hidden = model(b, hidden)
        hidden = hidden.detach()
        diff = fuse(mask, b) - ref[:, sl]
        sq = (diff.real ** 2 + diff.imag ** 2).sum() / denom
        if optimizer is not None:
            optimizer.zero_grad()
            sq.backward()
            optimizer.step()
        total += float(sq.detach())
    return total


def _epoch_pass(model, index, indices, cfg, setup, optimizer=None, lr=None):
    """One pass over `indices`; optimizes when an optimizer is given."""
    losses, sizes = [], []
    for start in range(0, len(indices), cfg.batch):
        batch_idx = indices[start:start + cfg.batch]
        beams, ref = load_batch(index, batch_idx, setup,
                                crop_frames=cfg.crop_frames)
        if optimizer is not None:
            for group in optimizer.param_groups:
                group["lr"] = lr
            loss = _batch_loss(model, beams, ref, cfg.bptt_chunk, optimizer)
        else:
            with torch.no_grad():
                loss = _batch_loss(model, beams, ref, cfg.bptt_chunk)
        if not np.isfinite(loss):
            raise RuntimeError(
                f"training diverged: non-finite loss {loss} on batch "
                f"starting at sample index {batch_idx[0]}")
        losses.append(loss)
        sizes.append(len(batch_idx))
    return float(np.average(losses, weights=sizes))


def train(cfg: TrainConfig):
    """Returns (loss records, path of the exported best-validation weights)."""
    torch.manual_seed(cfg.seed)
    setup = StftSetup()
    index = load_manifest(cfg.dataset_dir)
    if len(index) < 2:
        raise ValueError("dataset must contain at least 2 samples")
    train_idx, val_idx = split_train_val(index, cfg.val_fraction)

    probe_beams, _ = load_batch(index, [0], setup, crop_frames=1)
    p = probe_beams.shape[2]
    model = FusionNet(P=p, F=setup.num_bins, Fp=cfg.Fp, D=cfg.D, K=cfg.K,
                      seed=cfg.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr0)
    schedule = PlateauSchedule(cfg.lr0, cfg.halving, cfg.patience, cfg.lr_min)

    rng = np.random.default_rng(cfg.seed)
    records = []
    best_val = np.inf
    best_state = copy.deepcopy(model.state_dict())
    lr = cfg.lr0
    for epoch in range(1, cfg.epochs + 1):
        order = [train_idx[i] for i in rng.permutation(len(train_idx))]
        train_loss = _epoch_pass(model, index, order, cfg, setup,
                                 optimizer=optimizer, lr=lr)
        val_loss = _epoch_pass(model, index, val_idx, cfg, setup)
        if val_loss < best_val:
            best_val = val_loss
            best_state = copy.deepcopy(model.state_dict())
        lr_used = lr
        lr = schedule.update(val_loss)
        records.append(LossRecord(epoch, train_loss, val_loss, lr_used))

    model.load_state_dict(best_state)
    export_weights(model, cfg.out_path, setup)
    if cfg.log_path:
        with open(cfg.log_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss", "lr"])
            for r in records:
                writer.writerow([r.epoch, f"{r.train_loss:.8f}",
                                 f"{r.val_loss:.8f}", f"{r.lr:.6g}"])
    return records, cfg.out_path


def export_weights(model: FusionNet, path, setup: StftSetup = StftSetup()):
    header = {"P": model.P, "F": model.F, "Fp": model.Fp, "D": model.D,
              "K": model.K, "stft": setup}
    write_weight_file(path, header, model.tensor_dict())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="beamfusion-train")
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--log", default=None)
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--batch", type=int, default=30)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--lr-min", dest="lr_min", type=float, default=1e-4)
    parser.add_argument("--patience", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--crop-frames", dest="crop_frames", type=int, default=250)
    args = parser.parse_args(argv)
    try:
        cfg = TrainConfig(dataset_dir=args.dataset, out_path=args.out,
                          log_path=args.log, epochs=args.epochs,
                          batch=args.batch, lr0=args.lr, lr_min=args.lr_min,
                          patience=args.patience, seed=args.seed,
                          crop_frames=args.crop_frames)
        records, path = train(cfg)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"trained {len(records)} epochs; best weights at {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
