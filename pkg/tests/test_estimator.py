import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dprtf.estimator import (DpRtfFeature, EstimatorConfig, LinearSystem, SolveStatus,
                             assemble_feature, build_system, ctf_length, estimate_feature,
                             estimate_pair, normalize, solve_ls)
from dprtf.psd import NoiseProfile, psd_statistics
from dprtf.stft import Spectrogram, stft

from helpers import ctf_world, true_g

PAIRS = ((0, 2), (1, 3))


def test_ctf_length_rule(cfg):
    # ceil(0.25 * T60 * fs / L)
    assert ctf_length(0.5, cfg) == 16
    assert ctf_length(0.25, cfg) == 8
    assert ctf_length(1.0, cfg) == 32
    assert ctf_length(0.0, cfg) == 1
    assert EstimatorConfig().resolve_q(cfg) == 16
    assert EstimatorConfig(t60=1.0).resolve_q(cfg) == 32
    assert EstimatorConfig(q=3, t60=1.0).resolve_q(cfg) == 3


def test_defaults():
    e = EstimatorConfig()
    assert e.bins == tuple(range(5, 64)) and len(e.bins) == 59
    assert (e.d, e.gamma, e.ridge) == (25, 1.8, 0.0)


def test_build_system_layout(cfg):
    x, y, _, _ = ctf_world(2, 60)
    stats = psd_statistics(x, y, 2, 5, [9])
    blocks = [stats.block(i, 0) for i in (7, 3, 12)]
    sys_ = build_system(blocks)
    np.testing.assert_array_equal(sys_.frames, sorted(b.frame for b in blocks))
    assert sys_.n_rows == 3 and sys_.n_unknowns == 3 and sys_.k == 9
    np.testing.assert_array_equal(sys_.psi[0], stats.phi_zy[3, 0])
    assert sys_.phi[2] == stats.phi_yy[12, 0]


def test_build_system_q1_single_column(cfg):
    x, y, _, _ = ctf_world(1, 60)
    stats = psd_statistics(x, y, 1, 5, [9])
    sys_ = build_system([stats.block(i, 0) for i in range(len(stats.frames))])
    assert sys_.psi.shape == (len(stats.frames), 1)
    np.testing.assert_allclose(sys_.psi[:, 0], stats.phi_zy[:, 0, 0])


def test_build_system_empty_and_mixed():
    empty = build_system([], q=3)
    assert empty.psi.shape == (0, 5)
    assert solve_ls(empty).status is SolveStatus.UNDERDETERMINED
    with pytest.raises(ValueError):
        build_system([])
    from dprtf.psd import PsdBlock
    with pytest.raises(ValueError):
        build_system([PsdBlock(1, np.ones(3), 5, 0, 5), PsdBlock(1, np.ones(3), 5, 1, 6)])


def test_square_system_exact(rng):
    psi = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    phi = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    sol = solve_ls(LinearSystem(phi, psi))
    assert sol.status is SolveStatus.OK and sol.rank == 5
    np.testing.assert_allclose(sol.g, np.linalg.solve(psi, phi), rtol=1e-10)


def test_overdetermined_matches_pseudo_inverse(rng):
    psi = rng.standard_normal((50, 9)) + 1j * rng.standard_normal((50, 9))
    g = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    phi = psi @ g + 0.1 * (rng.standard_normal(50) + 1j * rng.standard_normal(50))
    sol = solve_ls(LinearSystem(phi, psi))
    oracle = np.linalg.pinv(psi) @ phi
    np.testing.assert_allclose(sol.g, oracle, rtol=1e-8, atol=1e-12)
    assert sol.condition == pytest.approx(np.linalg.cond(psi), rel=1e-8)


def test_solver_status_paths(rng):
    psi = rng.standard_normal((3, 5)) + 0j
    assert solve_ls(LinearSystem(np.ones(3), psi)).status is SolveStatus.UNDERDETERMINED
    col = rng.standard_normal((10, 1))
    deficient = np.hstack([col, 2 * col]) + 0j
    sol = solve_ls(LinearSystem(np.ones(10), deficient))
    assert sol.status is SolveStatus.RANK_DEFICIENT and sol.g is None
    assert not sol.status.usable
    zero = solve_ls(LinearSystem(np.ones(10), np.zeros((10, 2), complex)))
    assert zero.status is SolveStatus.RANK_DEFICIENT
    bad = rng.standard_normal((10, 2)) + 0j
    bad[4, 1] = np.nan
    assert solve_ls(LinearSystem(np.ones(10), bad)).status is SolveStatus.NON_FINITE


def test_ridge_matches_regularised_normal_equations(rng):
    psi = rng.standard_normal((30, 4)) + 1j * rng.standard_normal((30, 4))
    phi = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    eps = 0.01
    lam = eps * np.trace(psi.conj().T @ psi).real / 4
    ref = np.linalg.solve(psi.conj().T @ psi + lam * np.eye(4), psi.conj().T @ phi)
    np.testing.assert_allclose(solve_ls(LinearSystem(phi, psi), ridge=eps).g, ref, rtol=1e-9)


@pytest.mark.parametrize("q", [1, 2, 4])
def test_exact_world_recovers_ctf_ratio(q):
    x, y, a, b = ctf_world(q, 600, seed=q)
    est = estimate_pair(x, y, None, EstimatorConfig(q=q), keep_g=True)
    rel = [np.linalg.norm(g - true_g(a, b, k)) / np.linalg.norm(true_g(a, b, k))
           for g, k in zip(est.g, est.bins)]
    assert np.max(rel) < 1e-6
    np.testing.assert_allclose(est.g0, b[0, est.bins] / a[0, est.bins], rtol=1e-6)


def test_exact_world_system_is_consistent():
    q = 3
    x, y, a, b = ctf_world(q, 400, seed=11)
    k = 20
    stats = psd_statistics(x, y, q, 25, [k])
    sys_ = build_system([stats.block(i, 0) for i in range(len(stats.frames))])
    g = true_g(a, b, k)
    assert np.linalg.norm(sys_.psi @ g - sys_.phi) < 1e-3 * np.linalg.norm(sys_.phi)


@given(st.integers(0, 2 ** 16), st.floats(0.1, 10), st.floats(-math.pi, math.pi))
def test_scale_invariance(seed, mag, ang):
    x, y, _, _ = ctf_world(2, 120, seed=seed)
    alpha = mag * np.exp(1j * ang)
    cfg = EstimatorConfig(q=2, bins=(5, 30, 63))
    base = estimate_pair(x, y, None, cfg).g0
    scaled = estimate_pair(Spectrogram(alpha * x.data, x.config),
                           Spectrogram(alpha * y.data, y.config), None, cfg).g0
    np.testing.assert_allclose(scaled, base, rtol=1e-8)


def test_normalize_values():
    assert normalize(0) == 0
    assert normalize(1) == pytest.approx(1 / math.sqrt(2))
    c = normalize(1e3 * np.exp(0.3j))
    assert abs(c) == pytest.approx(0.9999995, abs=1e-12)
    assert np.angle(c) == pytest.approx(0.3, abs=1e-15)
    assert np.isnan(normalize(np.inf))
    np.testing.assert_allclose(normalize(np.array([0, 1j])), [0, 1j / math.sqrt(2)])


@given(st.complex_numbers(max_magnitude=1e12, allow_nan=False, allow_infinity=False))
def test_normalize_properties(g):
    c = normalize(g)
    # below 1 in exact arithmetic; rounds to 1.0 once |g| exceeds about 1e8
    assert abs(c) <= 1 + 4 * np.finfo(float).eps
    if abs(g) < 1e7:
        assert abs(c) < 1
    assert abs(c) == pytest.approx(abs(g) / math.sqrt(abs(g) ** 2 + 1), rel=1e-12)
    if g != 0:
        # same phase up to the rounding of dividing re and im by a real scalar
        assert abs(np.angle(c) - np.angle(g)) <= 1e-15


def test_assemble_full_feature_length():
    bins = range(5, 64)
    entries = {(p, k): 1.0 + 0.5j for p in PAIRS for k in bins}
    feat = assemble_feature(entries, PAIRS, bins)
    assert len(feat) == 118 and feat.mask.all()
    assert np.all(np.abs(feat.values) < 1)


def test_assemble_layout_and_masking():
    bins = (5, 6, 7)
    entries = {(p, k): complex(10 * k + i) for i, p in enumerate(PAIRS) for k in bins}
    entries[(PAIRS[1], 6)] = None
    entries[(PAIRS[0], 7)] = np.nan
    del entries[(PAIRS[1], 7)]
    feat = assemble_feature(entries, PAIRS, bins, normalized=True)
    np.testing.assert_array_equal(feat.mask, [1, 1, 1, 0, 0, 0])
    np.testing.assert_allclose(feat.values[:3], [50, 51, 60])
    assert feat.n_observed == 3
    np.testing.assert_allclose(feat.as_matrix()[0], [50, 51])
    assert np.isnan(feat.as_matrix()[1, 1])


def test_realified_interleaves():
    feat = DpRtfFeature([0.1 + 0.2j, 0.3 - 0.4j], [True, False], 2, (5,))
    x, m = feat.realified()
    np.testing.assert_allclose(x, [0.1, 0.2, 0.0, 0.0])
    np.testing.assert_array_equal(m, [1, 1, 0, 0])
    with pytest.raises(ValueError):
        DpRtfFeature([0.1], [True, False], 1, (5, 6))
    with pytest.raises(ValueError):
        DpRtfFeature([0.1, 0.2, 0.3], [1, 1, 1], 2, (5,))


def test_feature_json_round_trip():
    r = np.random.default_rng(0)
    vals = normalize(r.standard_normal(118) + 1j * r.standard_normal(118))
    mask = r.random(118) > 0.2
    feat = DpRtfFeature(vals, mask, 2, tuple(range(5, 64)), "proposed", PAIRS)
    back = DpRtfFeature.from_json(feat.to_json())
    np.testing.assert_array_equal(back.mask, mask)
    np.testing.assert_array_equal(back.values[mask], vals[mask])
    assert back.pairs == PAIRS and back.bins == feat.bins and back.method == "proposed"
    rec = feat.to_records()[3]
    assert rec["pair"] == [1, 3] and rec["bin"] == 6


def test_underdetermined_bin_masks_its_pairs(cfg):
    # too few frames for 2Q-1 unknowns in every bin: whole feature masked
    x, y, _, _ = ctf_world(4, 30)
    est = estimate_pair(x, y, None, EstimatorConfig(q=4, d=25))
    assert not est.valid.any()
    assert all(s is SolveStatus.UNDERDETERMINED for s in est.status)
    specs = {0: x, 1: x, 2: y, 3: y}
    feat = estimate_feature(specs, PAIRS, None, EstimatorConfig(q=4, d=25))
    assert feat.n_observed == 0


def test_per_pair_independent_masking(cfg):
    x, y, _, _ = ctf_world(1, 100)
    zero = Spectrogram(np.zeros_like(y.data), cfg)
    specs = {0: x, 2: y, 1: x, 3: zero}
    feat = estimate_feature(specs, PAIRS, None, EstimatorConfig(q=1, bins=(5, 6)))
    np.testing.assert_array_equal(feat.mask, [1, 0, 1, 0])


def test_silence_gives_empty_mask(cfg):
    silent = stft(np.zeros(16000), cfg)
    specs = {i: silent for i in range(4)}
    feat = estimate_feature(specs, PAIRS)
    assert len(feat) == 118 and feat.n_observed == 0
    noise = {p: NoiseProfile.zeros(cfg.n_bins, 16) for p in PAIRS}
    assert estimate_feature(specs, PAIRS, noise).n_observed == 0


def test_noise_selection_masks_quiet_bins(cfg):
    x, y, _, _ = ctf_world(1, 200)
    prof = NoiseProfile(np.full(cfg.n_bins, 1e9), np.zeros((cfg.n_bins, 1), complex),
                        np.full(cfg.n_bins, 1e9))
    est = estimate_pair(x, y, prof, EstimatorConfig(q=1))
    assert not est.valid.any() and not est.n_frames.any()
