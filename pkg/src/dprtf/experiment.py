"""Localization trials: scene sampling, rendering, per-method feature
extraction and direction prediction, and error summaries."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import CoherenceConfig, SteeringGrid, srp_phat
from .estimator import EstimatorConfig, normalize
from .pipeline import FEATURE_METHODS, extract_feature, pair_noise_profiles, spectrograms
from .regression import predict
from .sim import DEFAULT_PAIRS, NoiseSpec, RoomScene, render_recording, speech_like
from .stft import StftConfig, default_config

__all__ = [
    "Condition",
    "TrialSetup",
    "MethodResult",
    "Localizer",
    "sample_scene",
    "render_trial",
    "active_frames",
    "evaluate_trial",
    "feature_errors",
    "azimuth_error",
    "summarize",
]

OUTLIER_DEG = 15.0


@dataclass(frozen=True)
class Condition:
    name: str
    t60: float
    snr_db: float
    distance: float


@dataclass(frozen=True)
class TrialSetup:
    """Room and sampling ranges shared by every trial of a run."""

    room_dims: tuple = (8.0, 7.0, 3.0)
    center_jitter: float = 0.3
    center_height: tuple = (1.2, 1.4)
    azimuth: tuple = (-120.0, 120.0)
    elevation: tuple = (-15.0, 25.0)
    utterance_seconds: float = 3.0
    noise_seconds: float = 2.0
    noise: NoiseSpec = NoiseSpec()


def sample_scene(setup: TrialSetup, cond: Condition, rng: np.random.Generator,
                 jitter_seed: int = 0) -> RoomScene:
    dims = np.asarray(setup.room_dims, float)
    j = setup.center_jitter
    center = (dims[0] / 2 + rng.uniform(-j, j), dims[1] / 2 + rng.uniform(-j, j),
              rng.uniform(*setup.center_height))
    az = rng.uniform(*setup.azimuth)
    el = rng.uniform(*setup.elevation)
    return RoomScene.with_head(tuple(dims), center, az, el, cond.distance, t60=cond.t60,
                               jitter_seed=jitter_seed)


def render_trial(setup: TrialSetup, cond: Condition, seed: int, cfg: StftConfig | None = None,
                 scene: RoomScene | None = None, source=None):
    """Seeded scene and speech render for one trial; returns the recording."""
    rng = np.random.default_rng(seed)
    if scene is None:
        scene = sample_scene(setup, cond, rng, jitter_seed=seed)
    if source is None:
        source = speech_like(int(round(setup.utterance_seconds * scene.fs)), scene.fs, rng)
    noise = NoiseSpec(setup.noise.kind, cond.snr_db, setup.noise.spatial,
                      setup.noise.correlation)
    return render_recording(scene, source, noise, seed=seed,
                            noise_seconds=setup.noise_seconds, cfg=cfg)


def active_frames(spec_ref, noise_power=None, gamma: float = 1.8, bins=None) -> np.ndarray:
    """Frames whose in-band reference power exceeds ``gamma`` times the noise power."""
    bins = list(range(spec_ref.config.n_bins)) if bins is None else list(bins)
    power = np.sum(np.abs(spec_ref.data[:, bins]) ** 2, axis=1)
    if noise_power is None:
        return power > 0
    return power > gamma * float(np.sum(np.asarray(noise_power)[bins]))


@dataclass
class MethodResult:
    method: str
    direction: np.ndarray | None
    feature_error: float = math.nan
    feature_errors: np.ndarray | None = None
    n_observed: int = 0
    n_dims: int = 0
    seconds: float = 0.0


@dataclass
class Localizer:
    """Trained state for every method: mapping models and the SRP steering grid."""

    models: dict = field(default_factory=dict)
    steering: SteeringGrid | None = None
    est_cfg: EstimatorConfig = EstimatorConfig()
    coh_cfg: CoherenceConfig = CoherenceConfig()
    pairs: tuple = DEFAULT_PAIRS


def feature_errors(feat, rec, pairs, bins) -> np.ndarray:
    """``|c - c_true|`` of the observed feature entries."""
    gt = np.array([[normalize(rec.ground_truth[p].dp_rtf[k]) for p in pairs]
                   for k in bins]).ravel()
    ok = feat.mask & np.isfinite(gt)
    return np.abs(feat.values[ok] - gt[ok])


def evaluate_trial(rec, methods, loc: Localizer, cfg: StftConfig | None = None,
                   t60: float | None = None) -> list[MethodResult]:
    """Run each method on a rendered recording.

    ``t60`` sets the CTF length of the proposed method (falling back to the
    estimator's default). Feature methods report the median complex
    distance of their observed entries to the ground-truth DP-RTF.
    """
    cfg = cfg or default_config(rec.scene.fs)
    est_cfg = loc.est_cfg
    if t60 is not None and est_cfg.q is None:
        est_cfg = replace(est_cfg, t60=t60)
    specs = spectrograms(rec.signals, cfg)
    q = est_cfg.resolve_q(cfg)
    noise = None
    if rec.noise_only is not None:
        noise = pair_noise_profiles(rec.noise_only, cfg, loc.pairs, q)
    out = []
    for method in methods:
        t0 = time.perf_counter()
        if method in FEATURE_METHODS:
            feat = extract_feature(method, specs, loc.pairs, noise, est_cfg, loc.coh_cfg)
            model = loc.models.get(method)
            direction = None
            if model is not None:
                pred = predict(model, feat)
                direction = pred.direction
            errs = feature_errors(feat, rec, loc.pairs, est_cfg.bins)
            res = MethodResult(method, direction,
                               float(np.median(errs)) if errs.size else math.nan,
                               errs, feat.n_observed, len(feat))
        elif method == "srp-phat":
            if loc.steering is None:
                raise ValueError("srp-phat needs a steering grid")
            ref_noise = None if noise is None else noise[loc.pairs[0]].phi_uu
            frames = active_frames(specs[loc.pairs[0][0]], ref_noise, est_cfg.gamma,
                                   est_cfg.bins)
            srp = srp_phat(specs, loc.steering, frames if frames.any() else None)
            res = MethodResult(method, srp.direction)
        else:
            raise ValueError(f"unknown method {method!r}")
        res.seconds = time.perf_counter() - t0
        out.append(res)
    return out


def azimuth_error(pred, truth) -> float:
    """Absolute azimuth difference in degrees, wrapped to ``[0, 180]``."""
    d = (float(pred) - float(truth) + 180.0) % 360.0 - 180.0
    return abs(d)


def summarize(az_err, el_err, feat_err=None) -> dict:
    az = np.asarray(az_err, float)
    el = np.asarray(el_err, float)
    out = {
        "n": int(az.size),
        "azimuth_median": float(np.median(az)) if az.size else math.nan,
        "azimuth_mean": float(np.mean(az)) if az.size else math.nan,
        "elevation_median": float(np.median(el)) if el.size else math.nan,
        "elevation_mean": float(np.mean(el)) if el.size else math.nan,
        "outlier_rate": float(np.mean(az > OUTLIER_DEG)) if az.size else math.nan,
    }
    if feat_err is not None:
        fe = np.asarray(feat_err, float)
        fe = fe[np.isfinite(fe)]
        out["feature_error_median"] = float(np.median(fe)) if fe.size else math.nan
    return out
