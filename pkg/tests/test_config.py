import json

import pytest

from dprtf.config import (DEFAULTS, ConfigError, coherence_config, conditions, config_diff,
                          estimator_config, grid_directions, load_config, resolve_config,
                          stft_config, training_scene, trial_setup)


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_defaults_resolve():
    cfg = load_config()
    assert cfg == resolve_config({})
    s = stft_config(cfg)
    assert (s.sample_rate, s.frame_len, s.hop) == (16000, 256, 128)
    est = estimator_config(cfg)
    assert est.bins[0] == 5 and est.bins[-1] == 63 and est.d == 25 and est.gamma == 1.8
    coh = coherence_config(cfg)
    assert coh.block_frames == 15
    assert len(conditions(cfg)) == 1


def test_defaults_not_mutated():
    cfg = load_config(None, {"estimator": {"d": 7}})
    assert cfg["estimator"]["d"] == 7
    assert DEFAULTS["estimator"]["d"] == 25


def test_grid_presets():
    assert len(grid_directions(load_config())) == 1002
    cfg = load_config(None, {"training": {"grid": {"preset": "audio-visual"}}})
    assert len(grid_directions(cfg)) == 378
    custom = load_config(None, {"training": {"grid": {
        "preset": None, "n_azimuth": 5, "n_elevation": 2,
        "azimuth": [-10, 10], "elevation": [0, 5]}}})
    assert grid_directions(custom).shape == (10, 2)


def test_preset_override_count():
    cfg = load_config(None, {"training": {"grid": {"n_azimuth": 3}}})
    assert len(grid_directions(cfg)) == 3 * 6


def test_include_merges(tmp_path):
    _write(tmp_path / "base.json", {"estimator": {"d": 10}, "seed": 3})
    path = _write(tmp_path / "run.json", {"include": "base.json", "seed": 4})
    cfg = load_config(path)
    assert cfg["estimator"]["d"] == 10 and cfg["seed"] == 4


def test_include_cycle(tmp_path):
    _write(tmp_path / "a.json", {"include": "b.json"})
    _write(tmp_path / "b.json", {"include": ["a.json"]})
    with pytest.raises(ConfigError, match="cycle"):
        load_config(tmp_path / "a.json")


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(tmp_path / "bad.json")
    _write(tmp_path / "list.json", [1])
    with pytest.raises(ConfigError, match="object"):
        load_config(tmp_path / "list.json")


@pytest.mark.parametrize("doc, match", [
    ({"bogus": 1}, "unknown key config.bogus"),
    ({"estimator": {"bogus": 1}}, "unknown key config.estimator.bogus"),
    ({"training": {"grid": {"size": 3}}}, "grid.size"),
    ({"stft": {"hop": 0}}, "stft"),
    ({"estimator": {"gamma": 1.0}}, "gamma"),
    ({"estimator": {"bins": [5, 500]}}, "bins"),
    ({"estimator": {"d": "x"}}, "estimator.d"),
    ({"estimator": {"q": -1}}, "estimator.q"),
    ({"coherence": {"block_frames": 0}}, "coherence"),
    ({"training": {"grid": {"preset": "huge"}}}, "preset"),
    ({"training": {"grid": {"preset": None}}}, "needs a preset"),
    ({"training": {"distance": 0}}, "training.distance"),
    ({"test": {"noise": {"kind": "rain"}}}, "test.noise"),
    ({"test": {"conditions": []}}, "non-empty"),
    ({"test": {"conditions": [{"name": "a", "t60": 0.5}]}}, "missing"),
    ({"test": {"conditions": [{"name": "a", "t60": 0.5, "snr_db": 1, "distance": 1,
                               "x": 1}]}}, "unknown key"),
    ({"test": {"conditions": [{"name": "a", "t60": 0.5, "snr_db": 1, "distance": 1}] * 2}},
     "duplicate"),
    ({"methods": ["music"]}, "methods"),
    ({"seed": -1}, "seed"),
    ({"seed": True}, "seed"),
])
def test_validation_errors(doc, match):
    with pytest.raises(ConfigError, match=match):
        resolve_config(doc)


def test_conditions_replace_defaults():
    conds = [{"name": "x", "t60": 1.0, "snr_db": 2, "distance": 1.5},
             {"name": "y", "t60": 0.25, "snr_db": 14, "distance": 1.1}]
    cfg = load_config(None, {"test": {"conditions": conds}})
    assert [c.name for c in conditions(cfg)] == ["x", "y"]
    assert conditions(cfg)[0].t60 == 1.0


def test_scene_and_trial_setup():
    cfg = load_config()
    scene = training_scene(cfg)
    assert scene.room_dims == (8.0, 7.0, 3.0) and scene.t60 == 0.5
    setup = trial_setup(cfg)
    assert setup.azimuth == (-120.0, 120.0)
    assert setup.elevation == (-15.0, 25.0)


def test_config_diff():
    a = load_config()
    b = load_config(None, {"estimator": {"d": 9}, "seed": 2})
    diff = config_diff(a, b)
    assert diff == ["estimator.d: 25 != 9", "seed: 0 != 2"]
    assert config_diff(a, a) == []
    assert config_diff({"x": float("nan")}, {"x": float("nan")}) == []
    assert config_diff({"x": 1}, {}) == ['x: 1 != "<missing>"']
