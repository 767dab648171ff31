"""Training side of the beam-fusion workbench.

Consumes datasets produced by the `beamfusion` CLI (manifest + WAV layout),
optimizes the fusion network, and exports weight files the inference engine
loads directly.
"""

from .bfw import FormatError, read_weight_file, write_weight_file
from .data import DatasetIndex, load_batch, load_manifest, split_train_val
from .model import FusionNet, erb_analysis
from .stft import StftSetup, stft
from .train import TrainConfig, complex_mse, train

__all__ = [
    "DatasetIndex",
    "FormatError",
    "FusionNet",
    "StftSetup",
    "TrainConfig",
    "complex_mse",
    "erb_analysis",
    "load_batch",
    "load_manifest",
    "read_weight_file",
    "split_train_val",
    "stft",
    "train",
    "write_weight_file",
]
