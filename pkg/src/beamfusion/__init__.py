"""Microphone-array speech enhancement: distortionless differential beamformers,
adaptive convex combination, and frame-online neural beam fusion."""

from .array import ArrayGeometry, FrequencyGrid, steering_matrix, steering_vector
from .stft import (MultichannelSpectrogram, Spectrogram, StftConfig, analyze,
                   analyze_multichannel, reconstruct, synthesize)
from .beamformer import (FilterBank, FixedFilter, apply, apply_bank, beampattern,
                         design_mwng, design_null_dma, standard_bank)
from .acc import AccState, acc_init, acc_run, acc_step
from .fusion import (ErbBank, FusionState, ModelParams, enhance_stream, erb_bank,
                     extract_features, fuse_frame, infer_frame, init_params,
                     init_state, load_model, save_model)
from .roomsim import (CircularHop, DatasetConfig, RoomConfig, Scenario, Static,
                      gen_dataset, ism_rir, ism_rirs, render_moving,
                      sabine_absorption, silence_trim, synthesize_scenario)
from .metrics import bss_sir, delta_snr, shadow_process, si_sdr, sir_vs_angle

__version__ = "0.1.0"
