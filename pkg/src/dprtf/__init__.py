"""Direct-path relative transfer function (DP-RTF) estimation and
regression-based sound source localization."""

from .baselines import CoherenceConfig, SteeringGrid, coherence_test, rtf_ct, rtf_mtf, srp_phat
from .ctf import CtfFilter, ctf_convolve, ctf_from_rir, direct_path_atf, ground_truth_dprtf
from .estimator import (DpRtfFeature, EstimatorConfig, assemble_feature, build_system,
                        estimate_feature, estimate_pair, normalize, solve_ls)
from .psd import NoiseProfile, noise_profile, psd_statistics, select_frames, spectral_subtract
from .regression import MappingModel, Prediction, TrainingSet, predict, predict_nn, train
from .sim import NoiseSpec, RoomScene, build_training_set, render_recording, simulate_rir
from .stft import Spectrogram, StftConfig, default_config, istft, stft

__version__ = "0.1.0"

__all__ = [
    "CoherenceConfig", "SteeringGrid", "coherence_test", "rtf_ct", "rtf_mtf", "srp_phat",
    "CtfFilter", "ctf_convolve", "ctf_from_rir", "direct_path_atf", "ground_truth_dprtf",
    "DpRtfFeature", "EstimatorConfig", "assemble_feature", "build_system", "estimate_feature",
    "estimate_pair", "normalize", "solve_ls",
    "NoiseProfile", "noise_profile", "psd_statistics", "select_frames", "spectral_subtract",
    "MappingModel", "Prediction", "TrainingSet", "predict", "predict_nn", "train",
    "NoiseSpec", "RoomScene", "build_training_set", "render_recording", "simulate_rir",
    "Spectrogram", "StftConfig", "default_config", "istft", "stft",
]
