"""Shared plumbing: spectrograms of multichannel signals, per-pair noise
profiles and method dispatch for feature extraction."""

from __future__ import annotations

import numpy as np

from .baselines import CoherenceConfig, rtf_ct, rtf_mtf
from .estimator import DpRtfFeature, EstimatorConfig, assemble_feature, estimate_pair
from .psd import NoiseProfile, noise_profile
from .stft import StftConfig, stft

__all__ = [
    "FEATURE_METHODS",
    "METHODS",
    "spectrograms",
    "pair_noise_profiles",
    "pair_estimate",
    "extract_feature",
]

FEATURE_METHODS = ("proposed", "rtf-mtf", "rtf-ct")
METHODS = FEATURE_METHODS + ("srp-phat",)


def spectrograms(signals, cfg: StftConfig) -> list:
    return [stft(s, cfg, channel_id=i) for i, s in enumerate(np.atleast_2d(signals))]


def pair_noise_profiles(noise_signals, cfg: StftConfig, pairs, q: int,
                        min_seconds: float = 1.0) -> dict:
    specs = spectrograms(noise_signals, cfg)
    return {pair: noise_profile(specs[pair[0]], specs[pair[1]], q, min_seconds=min_seconds)
            for pair in pairs}


def pair_estimate(method: str, spec_x, spec_y, noise: NoiseProfile | None = None,
                  est_cfg: EstimatorConfig | None = None,
                  coh_cfg: CoherenceConfig | None = None):
    """Per-bin estimate of one pair with the named method."""
    est_cfg = est_cfg or EstimatorConfig()
    if method == "proposed":
        return estimate_pair(spec_x, spec_y, noise, est_cfg)
    if method == "rtf-mtf":
        return rtf_mtf(spec_x, spec_y, noise, est_cfg)
    if method == "rtf-ct":
        return rtf_ct(spec_x, spec_y, noise, coh_cfg, est_cfg.bins)
    raise ValueError(f"unknown feature method {method!r}; expected one of {FEATURE_METHODS}")


def extract_feature(method: str, specs, pairs, noise: dict | None = None,
                    est_cfg: EstimatorConfig | None = None,
                    coh_cfg: CoherenceConfig | None = None) -> DpRtfFeature:
    """Normalised, masked global feature over ``pairs`` for the named method."""
    est_cfg = est_cfg or EstimatorConfig()
    entries = {}
    for pair in pairs:
        a, b = pair
        est = pair_estimate(method, specs[a], specs[b],
                            None if noise is None else noise[pair], est_cfg, coh_cfg)
        for k, g, st in zip(est.bins, est.g0, est.status):
            entries[(tuple(pair), int(k))] = g if st.usable else None
    return assemble_feature(entries, [tuple(p) for p in pairs], est_cfg.bins, method=method)
