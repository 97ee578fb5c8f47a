"""Comparison methods: RTF-MTF, RTF-CT (coherence test) and SRP-PHAT.

RTF-MTF is the PSD least-squares estimator with a single-tap channel, so it
shares framing, frame selection and noise subtraction with the proposed
method and differs only in the channel model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .ctf import direct_path_atf
from .estimator import EstimatorConfig, PairEstimate, SolveStatus, estimate_pair
from .psd import NoiseProfile
from .stft import Spectrogram, StftConfig

__all__ = [
    "CoherenceConfig",
    "SteeringGrid",
    "SrpResult",
    "rtf_mtf",
    "block_covariance",
    "coherence_test",
    "rtf_ct",
    "srp_phat",
]


@dataclass(frozen=True)
class CoherenceConfig:
    """120 ms blocks (15 frames at 8 ms hop); per-bin threshold 0.9 x max coherence."""

    block_frames: int = 15
    threshold_factor: float = 0.9

    def __post_init__(self):
        if self.block_frames < 2:
            raise ValueError("block_frames must be at least 2")
        if not 0 < self.threshold_factor <= 1:
            raise ValueError("threshold_factor must be in (0, 1]")


def rtf_mtf(spec_x: Spectrogram, spec_y: Spectrogram, noise: NoiseProfile | None = None,
            cfg: EstimatorConfig | None = None) -> PairEstimate:
    """Single-tap (MTF) RTF of ``y`` relative to ``x``."""
    cfg = replace(cfg or EstimatorConfig(), q=1)
    return estimate_pair(spec_x, spec_y, noise, cfg)


def block_covariance(spec_x: Spectrogram, spec_y: Spectrogram, block_frames: int,
                     bins=None):
    """Trailing-block averages ``(Rxx, Ryy, Ryx)``, each ``(F, B)``, for frames
    ``block_frames-1 ..`` (returned as the fourth element)."""
    bins = np.arange(spec_x.config.n_bins) if bins is None else np.asarray(bins)
    x, y = spec_x.data[:, bins], spec_y.data[:, bins]
    inst = np.stack([np.abs(x) ** 2, np.abs(y) ** 2, y * np.conj(x)])
    c = np.cumsum(inst, axis=1)
    avg = c[:, block_frames - 1:].copy()
    avg[:, 1:] -= c[:, :-block_frames]
    avg /= block_frames
    frames = np.arange(block_frames - 1, x.shape[0])
    return avg[0].real, avg[1].real, avg[2], frames


def _coherence(rxx, ryy, ryx):
    """``(l1 - l2)/(l1 + l2)`` of the Hermitian 2x2 block covariance."""
    tr = rxx + ryy
    gap = np.sqrt((rxx - ryy) ** 2 + 4 * np.abs(ryx) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        coh = np.where(tr > 0, gap / tr, 0.0)
    return np.clip(coh, 0.0, 1.0)


def coherence_test(spec_x: Spectrogram, spec_y: Spectrogram,
                   cfg: CoherenceConfig | None = None, bins=None):
    """Per-(frame, bin) coherence and the frames passing the per-bin threshold.

    Returns ``(coherence, selected, frames)`` where ``coherence`` and
    ``selected`` have shape ``(F, B)`` over the frame indices ``frames``.
    """
    cfg = cfg or CoherenceConfig()
    rxx, ryy, ryx, frames = block_covariance(spec_x, spec_y, cfg.block_frames, bins)
    coh = _coherence(rxx, ryy, ryx)
    thresh = cfg.threshold_factor * coh.max(axis=0)
    selected = (coh >= thresh[None, :]) & (thresh[None, :] > 0)
    return coh, selected, frames


def rtf_ct(spec_x: Spectrogram, spec_y: Spectrogram, noise: NoiseProfile | None = None,
           cfg: CoherenceConfig | None = None, bins=tuple(range(5, 64))) -> PairEstimate:
    """RTF from noise-subtracted block PSDs averaged over coherence-passing frames."""
    cfg = cfg or CoherenceConfig()
    bins = np.asarray(bins)
    rxx, _, ryx, _ = block_covariance(spec_x, spec_y, cfg.block_frames, bins)
    _, selected, _ = coherence_test(spec_x, spec_y, cfg, bins)
    if noise is not None:
        rxx = rxx - noise.phi_uu[bins]
        ryx = ryx - np.conj(noise.phi_uv[bins])
    n_sel = selected.sum(axis=0)
    num = np.where(selected, ryx, 0).sum(axis=0)
    den = np.where(selected, rxx, 0).sum(axis=0)
    g0 = np.full(len(bins), np.nan + 0j)
    status = []
    for j in range(len(bins)):
        if n_sel[j] == 0:
            status.append(SolveStatus.UNDERDETERMINED)
        elif den[j] == 0 or not np.isfinite(num[j] / den[j]):
            status.append(SolveStatus.NON_FINITE)
        else:
            g0[j] = num[j] / den[j]
            status.append(SolveStatus.OK)
    return PairEstimate(bins, g0, status, n_sel, 1)


@dataclass
class SteeringGrid:
    """Candidate directions with per-microphone direct-path responses.

    ``responses`` has shape ``(n_directions, n_mics, n_bins)`` over ``bins``.
    """

    directions: np.ndarray
    responses: np.ndarray
    bins: tuple

    @classmethod
    def from_rirs(cls, directions, rirs, cfg: StftConfig, bins=tuple(range(5, 64))):
        """``rirs``: ``(n_directions, n_mics, length)`` anechoic responses."""
        bins = tuple(int(b) for b in bins)
        resp = np.array([[direct_path_atf(h, cfg)[list(bins)] for h in per_dir]
                         for per_dir in rirs])
        return cls(np.asarray(directions, float), resp, bins)

    def __len__(self):
        return len(self.directions)


@dataclass
class SrpResult:
    direction: np.ndarray
    index: int
    power: np.ndarray
    directions: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("azimuth,elevation,power\n")
            for (az, el), p in zip(self.directions, self.power):
                fh.write(f"{az:.6g},{el:.6g},{p:.10g}\n")


def srp_phat(specs, grid: SteeringGrid, active_frames=None, pairs=None) -> SrpResult:
    """Steered response power with phase-transform weighting over ``grid``.

    ``specs`` is a sequence of per-microphone spectrograms in the same order
    as the grid responses; by default every microphone pair is used.
    """
    if len(specs) < 2:
        raise ValueError("SRP-PHAT needs at least two channels")
    if len(grid) == 0:
        raise ValueError("empty steering grid")
    bins = list(grid.bins)
    pairs = list(combinations(range(len(specs)), 2)) if pairs is None else list(pairs)
    power = np.zeros(len(grid))
    for i, j in pairs:
        xi, xj = specs[i].data[:, bins], specs[j].data[:, bins]
        if active_frames is not None:
            xi, xj = xi[active_frames], xj[active_frames]
        cross = xi * np.conj(xj)
        mag = np.abs(cross)
        phat = np.divide(cross, mag, out=np.zeros_like(cross), where=mag > 0).sum(axis=0)
        steer = grid.responses[:, i] * np.conj(grid.responses[:, j])
        smag = np.abs(steer)
        steer = np.divide(steer, smag, out=np.zeros_like(steer), where=smag > 0)
        power += np.real(np.conj(steer) @ phat)
    idx = int(np.argmax(power))
    return SrpResult(grid.directions[idx], idx, power, grid.directions)
