"""Declarative pipeline configuration: JSON with ``include`` support,
unknown-key rejection and fully resolved defaults."""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import numpy as np

from .baselines import CoherenceConfig
from .estimator import EstimatorConfig
from .experiment import Condition, TrialSetup
from .sim import NoiseSpec, RoomScene, direction_grid
from .stft import StftConfig, default_config

__all__ = ["ConfigError", "DEFAULTS", "GRID_PRESETS", "load_config", "resolve_config",
           "stft_config", "estimator_config", "coherence_config", "grid_directions",
           "training_scene", "trial_setup", "conditions", "config_diff"]


class ConfigError(ValueError):
    pass


# Camera field of view 60.97 x 47.64 degrees for the audio-visual layout.
GRID_PRESETS = {
    "audio-only": {"n_azimuth": 167, "n_elevation": 6,
                   "azimuth": [-120.0, 120.0], "elevation": [-15.0, 25.0]},
    "audio-visual": {"n_azimuth": 21, "n_elevation": 18,
                     "azimuth": [-30.485, 30.485], "elevation": [-23.82, 23.82]},
}

_CONDITION_KEYS = {"name": str, "t60": float, "snr_db": float, "distance": float}

DEFAULTS = {
    "stft": {"sample_rate": 16000, "frame_len": 256, "hop": 128, "window": "hamming"},
    "estimator": {"bins": [5, 63], "d": 25, "gamma": 1.8, "q": None,
                  "q_t60_fraction": 0.25, "default_t60": 0.5, "ridge": 0.0},
    "coherence": {"block_frames": 15, "threshold_factor": 0.9},
    "regression": {"n_components": 25, "ridge_scale": 1e-3},
    "training": {
        "room_dims": [8.0, 7.0, 3.0],
        "center": [4.0, 3.5, 1.3],
        "distance": 2.0,
        "t60": 0.5,
        "probe_seconds": 1.0,
        "grid": {"preset": "audio-only", "n_azimuth": None, "n_elevation": None,
                 "azimuth": None, "elevation": None},
    },
    "test": {
        "room_dims": [8.0, 7.0, 3.0],
        "trials": 10,
        "utterance_seconds": 3.0,
        "noise_seconds": 2.0,
        "noise": {"kind": "fan", "spatial": "correlated", "correlation": 0.5},
        "conditions": [
            {"name": "T60=0.5s SNR=11dB", "t60": 0.5, "snr_db": 11.0, "distance": 2.5},
        ],
    },
    "methods": ["proposed", "rtf-mtf", "rtf-ct", "srp-phat"],
    "seed": 0,
    "output_dir": "run",
}

_METHODS = ("proposed", "rtf-mtf", "rtf-ct", "srp-phat")


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _read_with_includes(path: Path, seen=()) -> dict:
    path = path.resolve()
    if path in seen:
        raise ConfigError(f"include cycle through {path}")
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    includes = doc.pop("include", [])
    if isinstance(includes, str):
        includes = [includes]
    merged = {}
    for inc in includes:
        merged = _merge(merged, _read_with_includes(path.parent / inc, seen + (path,)))
    return _merge(merged, doc)


def _check_keys(doc, schema, where="config"):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be an object")
    for key, val in doc.items():
        if key not in schema:
            raise ConfigError(f"unknown key {where}.{key}")
        if isinstance(schema[key], dict) and schema[key] and key != "grid":
            _check_keys(val, schema[key], f"{where}.{key}")
        elif key == "grid":
            _check_keys(val, schema[key], f"{where}.{key}")


def _number(val, where, positive=False, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where} must be a number")
    if positive and not val > 0:
        raise ConfigError(f"{where} must be positive")
    return val


def resolve_config(doc: dict) -> dict:
    """Merge ``doc`` over the defaults and validate every field."""
    _check_keys(doc, DEFAULTS)
    cfg = _merge(DEFAULTS, doc)
    if "conditions" in doc.get("test", {}):
        cfg["test"]["conditions"] = doc["test"]["conditions"]
    try:
        stft_config(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"stft: {exc}") from None
    est = cfg["estimator"]
    if (not isinstance(est["bins"], list) or len(est["bins"]) != 2
            or not 0 <= est["bins"][0] <= est["bins"][1] <= cfg["stft"]["frame_len"] // 2):
        raise ConfigError("estimator.bins must be [first, last] within the one-sided spectrum")
    _number(est["d"], "estimator.d", positive=True)
    _number(est["gamma"], "estimator.gamma")
    if est["gamma"] <= 1:
        raise ConfigError("estimator.gamma must exceed 1")
    _number(est["q"], "estimator.q", positive=True, allow_none=True)
    _number(est["ridge"], "estimator.ridge")
    try:
        CoherenceConfig(**cfg["coherence"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"coherence: {exc}") from None
    _number(cfg["regression"]["n_components"], "regression.n_components", positive=True)
    grid = cfg["training"]["grid"]
    if grid.get("preset") is not None and grid["preset"] not in GRID_PRESETS:
        raise ConfigError(f"unknown grid preset {grid['preset']!r}")
    if grid.get("preset") is None and any(grid.get(k) is None for k in
                                          ("n_azimuth", "n_elevation", "azimuth", "elevation")):
        raise ConfigError("training.grid needs a preset or all of n_azimuth, n_elevation, "
                          "azimuth, elevation")
    for key in ("distance", "probe_seconds", "t60"):
        _number(cfg["training"][key], f"training.{key}", positive=True)
    test = cfg["test"]
    _number(test["trials"], "test.trials", positive=True)
    try:
        NoiseSpec(**test["noise"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"test.noise: {exc}") from None
    if not isinstance(test["conditions"], list) or not test["conditions"]:
        raise ConfigError("test.conditions must be a non-empty list")
    names = set()
    for i, cond in enumerate(test["conditions"]):
        where = f"test.conditions[{i}]"
        _check_keys(cond, _CONDITION_KEYS, where)
        missing = set(_CONDITION_KEYS) - set(cond)
        if missing:
            raise ConfigError(f"{where} is missing {sorted(missing)}")
        for key in ("t60", "distance"):
            _number(cond[key], f"{where}.{key}", positive=True)
        _number(cond["snr_db"], f"{where}.snr_db")
        if cond["name"] in names:
            raise ConfigError(f"duplicate condition name {cond['name']!r}")
        names.add(cond["name"])
    methods = cfg["methods"]
    if not isinstance(methods, list) or not methods or any(m not in _METHODS for m in methods):
        raise ConfigError(f"methods must be a non-empty subset of {list(_METHODS)}")
    if isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> dict:
    doc = {} if path is None else _read_with_includes(Path(path))
    if overrides:
        doc = _merge(doc, overrides)
    return resolve_config(doc)


def stft_config(cfg: dict) -> StftConfig:
    s = cfg["stft"]
    return default_config(s["sample_rate"], s["frame_len"], s["hop"], s["window"])


def estimator_config(cfg: dict) -> EstimatorConfig:
    e = cfg["estimator"]
    return EstimatorConfig(bins=tuple(range(e["bins"][0], e["bins"][1] + 1)), d=e["d"],
                           gamma=e["gamma"], q=e["q"], default_t60=e["default_t60"],
                           q_t60_fraction=e["q_t60_fraction"], ridge=e["ridge"])


def coherence_config(cfg: dict) -> CoherenceConfig:
    return CoherenceConfig(**cfg["coherence"])


def grid_directions(cfg: dict) -> np.ndarray:
    g = dict(cfg["training"]["grid"])
    if g.get("preset") is not None:
        g = {**GRID_PRESETS[g["preset"]],
             **{k: v for k, v in g.items() if v is not None and k != "preset"}}
    return direction_grid(g["n_azimuth"], g["n_elevation"], tuple(g["azimuth"]),
                          tuple(g["elevation"]))


def training_scene(cfg: dict) -> RoomScene:
    t = cfg["training"]
    return RoomScene.with_head(tuple(t["room_dims"]), tuple(t["center"]), 0.0, 0.0,
                               t["distance"], t60=t["t60"], fs=cfg["stft"]["sample_rate"])


def trial_setup(cfg: dict) -> TrialSetup:
    t = cfg["test"]
    grid = grid_directions(cfg)
    # test directions span the training grid
    return TrialSetup(room_dims=tuple(t["room_dims"]), utterance_seconds=t["utterance_seconds"],
                      noise_seconds=t["noise_seconds"], noise=NoiseSpec(**t["noise"]),
                      azimuth=(float(grid[:, 0].min()), float(grid[:, 0].max())),
                      elevation=(float(grid[:, 1].min()), float(grid[:, 1].max())))


def conditions(cfg: dict) -> list[Condition]:
    return [Condition(c["name"], float(c["t60"]), float(c["snr_db"]), float(c["distance"]))
            for c in cfg["test"]["conditions"]]


def config_diff(a: dict, b: dict, prefix="") -> list[str]:
    """Human-readable differences between two resolved configs."""
    out = []
    for key in sorted(set(a) | set(b)):
        where = f"{prefix}{key}"
        va, vb = a.get(key, "<missing>"), b.get(key, "<missing>")
        if isinstance(va, dict) and isinstance(vb, dict):
            out += config_diff(va, vb, where + ".")
        elif va != vb and not (isinstance(va, float) and isinstance(vb, float)
                               and math.isnan(va) and math.isnan(vb)):
            out.append(f"{where}: {json.dumps(va)} != {json.dumps(vb)}")
    return out
