"""Frame-averaged auto/cross PSD statistics, stationary noise profiles,
spectral subtraction and speech-frame selection.

For a reference channel ``x`` and second channel ``y`` the regressor of bin
``k`` at frame ``p`` is::

    z[p] = [x[p], x[p-1], ..., x[p-Q+1], y[p-1], ..., y[p-Q+1]]

and the statistics are ``phi_yy(p) = <y[p] y*[p]>`` and
``phi_zy(p) = <z[p] y*[p]>``, where ``<.>`` averages the instantaneous
products over frames ``p-D+1 .. p``. A frame is usable once ``p >= D-1+Q-1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .stft import Spectrogram

__all__ = [
    "PsdBlock",
    "PsdStats",
    "NoiseProfile",
    "InsufficientHistoryError",
    "first_valid_frame",
    "estimate_psd_block",
    "psd_statistics",
    "noise_profile",
    "spectral_subtract",
    "select_frames",
]


class InsufficientHistoryError(ValueError):
    """Frame lacks the lag/averaging history needed for its statistics."""


def first_valid_frame(q: int, d: int) -> int:
    return d - 1 + q - 1


def _lag_products(x: np.ndarray, y: np.ndarray, q: int) -> np.ndarray:
    """Instantaneous ``z[p] y*[p]`` products, shape ``(P, ..., 2Q-1)``.

    Entries whose lag reaches before frame 0 are left at zero; callers only
    read frames with full history.
    """
    n_frames = x.shape[0]
    yc = np.conj(y)
    out = np.zeros(x.shape + (2 * q - 1,), complex)
    for lag in range(q):
        out[lag:, ..., lag] = x[:n_frames - lag] * yc[lag:]
    for lag in range(1, q):
        out[lag:, ..., q - 1 + lag] = y[:n_frames - lag] * yc[lag:]
    return out


def _moving_mean(a: np.ndarray, d: int) -> np.ndarray:
    """Mean over the trailing ``d`` entries along axis 0; row ``p`` valid for ``p >= d-1``."""
    c = np.cumsum(a, axis=0)
    out = c.copy()
    out[d:] = c[d:] - c[:-d]
    return out / d


@dataclass(frozen=True)
class PsdBlock:
    """Statistics of one (frame, bin) cell; ``phi_zy`` has length ``2Q-1``."""

    phi_yy: complex
    phi_zy: np.ndarray
    d: int
    frame: int | None = None
    bin: int | None = None

    @property
    def q(self) -> int:
        return (len(self.phi_zy) + 1) // 2


@dataclass(frozen=True)
class PsdStats:
    """Vectorised statistics over all usable frames of a set of bins.

    ``phi_yy`` has shape ``(F, B)`` and ``phi_zy`` ``(F, B, 2Q-1)`` for ``F``
    usable frames (indices in ``frames``) and ``B`` bins (indices in ``bins``).
    """

    phi_yy: np.ndarray
    phi_zy: np.ndarray
    frames: np.ndarray
    bins: np.ndarray
    q: int
    d: int

    def block(self, i: int, j: int) -> PsdBlock:
        return PsdBlock(self.phi_yy[i, j], self.phi_zy[i, j], self.d,
                        int(self.frames[i]), int(self.bins[j]))


@dataclass(frozen=True)
class NoiseProfile:
    """Stationary noise statistics per bin.

    ``phi_vv`` is the auto-PSD of the second channel's noise, shape ``(K,)``;
    ``phi_wv`` the lagged noise statistics in the ``phi_zy`` layout, shape
    ``(K, 2Q-1)``. ``phi_uu`` (reference-channel auto-PSD) and the zero-lag
    cross term are kept for the MTF-type baselines.
    """

    phi_vv: np.ndarray
    phi_wv: np.ndarray
    phi_uu: np.ndarray
    n_frames: int = 0

    @property
    def q(self) -> int:
        return (self.phi_wv.shape[-1] + 1) // 2

    @property
    def phi_uv(self) -> np.ndarray:
        """Zero-lag ``E{u v*}``."""
        return self.phi_wv[..., 0]

    @classmethod
    def zeros(cls, n_bins: int, q: int) -> NoiseProfile:
        return cls(np.zeros(n_bins), np.zeros((n_bins, 2 * q - 1), complex),
                   np.zeros(n_bins))

    def truncated(self, q: int) -> NoiseProfile:
        """Profile restricted to a shorter CTF length."""
        if q > self.q:
            raise ValueError(f"profile has Q={self.q}, cannot provide Q={q}")
        cols = np.r_[0:q, self.q:self.q + q - 1]
        return NoiseProfile(self.phi_vv, self.phi_wv[:, cols], self.phi_uu, self.n_frames)

    def save(self, path) -> None:
        """JSON header plus ``.npz`` sidecar holding the arrays."""
        path = Path(path)
        sidecar = path.with_suffix(".npz")
        np.savez(sidecar, phi_vv=self.phi_vv, phi_wv=self.phi_wv, phi_uu=self.phi_uu)
        path.write_text(json.dumps({
            "format": "dprtf-noise-profile", "version": 1, "q": self.q,
            "n_bins": int(self.phi_vv.shape[0]), "n_frames": self.n_frames,
            "arrays": sidecar.name}, indent=2))

    @classmethod
    def load(cls, path) -> NoiseProfile:
        path = Path(path)
        meta = json.loads(path.read_text())
        if meta.get("format") != "dprtf-noise-profile":
            raise ValueError(f"{path} is not a noise profile")
        arr = np.load(path.parent / meta["arrays"])
        return cls(arr["phi_vv"], arr["phi_wv"], arr["phi_uu"], meta["n_frames"])


def estimate_psd_block(spec_x: Spectrogram, spec_y: Spectrogram, p: int, k: int,
                       q: int, d: int) -> PsdBlock:
    """Statistics of a single (frame, bin) cell, computed term by term."""
    if p < first_valid_frame(q, d) or p >= spec_y.n_frames:
        raise InsufficientHistoryError(
            f"frame {p} needs at least {first_valid_frame(q, d)} frames of history")
    x = spec_x.data[:, k]
    y = spec_y.data[:, k]
    phi_yy = 0j
    phi_zy = np.zeros(2 * q - 1, complex)
    for dd in range(d):
        t = p - dd
        yc = np.conj(y[t])
        phi_yy += y[t] * yc
        phi_zy[:q] += x[t - np.arange(q)] * yc
        phi_zy[q:] += y[t - np.arange(1, q)] * yc
    return PsdBlock(phi_yy / d, phi_zy / d, d, p, k)


def psd_statistics(spec_x: Spectrogram, spec_y: Spectrogram, q: int, d: int,
                   bins=None) -> PsdStats:
    if spec_x.config != spec_y.config:
        raise ValueError("spectrograms use different STFT configurations")
    if spec_x.n_frames != spec_y.n_frames:
        raise ValueError("spectrograms have different frame counts")
    if q < 1 or d < 1:
        raise ValueError("Q and D must be positive")
    bins = np.arange(spec_x.config.n_bins) if bins is None else np.asarray(bins)
    x = spec_x.data[:, bins]
    y = spec_y.data[:, bins]
    p0 = first_valid_frame(q, d)
    frames = np.arange(p0, x.shape[0])
    inst_yy = (y * np.conj(y))
    phi_yy = _moving_mean(inst_yy, d)[p0:]
    phi_zy = _moving_mean(_lag_products(x, y, q), d)[p0:]
    return PsdStats(phi_yy, phi_zy, frames, bins, q, d)


def noise_profile(noise_spec_x: Spectrogram, noise_spec_y: Spectrogram, q: int,
                  d: int = 1, min_seconds: float = 1.0) -> NoiseProfile:
    """Time-averaged statistics of a noise-only recording over all usable frames."""
    cfg = noise_spec_x.config
    min_samples = int(round(min_seconds * cfg.sample_rate))
    min_frames = 1 + (min_samples - cfg.frame_len) // cfg.hop
    if noise_spec_x.n_frames < min_frames:
        raise ValueError(
            f"noise recording too short: {noise_spec_x.n_frames} frames, "
            f"need at least {min_frames} ({min_seconds:g} s)")
    stats = psd_statistics(noise_spec_x, noise_spec_y, q, 1)
    p_start = first_valid_frame(q, d) - first_valid_frame(q, 1)
    phi_vv = stats.phi_yy[p_start:].real.mean(axis=0)
    phi_wv = stats.phi_zy[p_start:].mean(axis=0)
    xs = noise_spec_x.data[stats.frames[p_start:]]
    phi_uu = (np.abs(xs) ** 2).mean(axis=0)
    return NoiseProfile(phi_vv, phi_wv, phi_uu, len(stats.frames) - p_start)


def spectral_subtract(block, noise: NoiseProfile):
    """Remove stationary noise statistics; negative results are kept as-is.

    Accepts a single :class:`PsdBlock` or a vectorised :class:`PsdStats`.
    """
    if not isinstance(block, (PsdBlock, PsdStats)):
        raise TypeError(f"cannot subtract noise from {type(block).__name__}")
    if noise.q != block.q:
        noise = noise.truncated(block.q)
    if isinstance(block, PsdBlock):
        k = block.bin
        return PsdBlock(block.phi_yy - noise.phi_vv[k], block.phi_zy - noise.phi_wv[k],
                        block.d, block.frame, block.bin)
    return PsdStats(block.phi_yy - noise.phi_vv[block.bins],
                    block.phi_zy - noise.phi_wv[block.bins],
                    block.frames, block.bins, block.q, block.d)


def select_frames(phi_tilde_yy, noise_vv, gamma: float):
    """Frames whose observed auto-PSD exceeds ``gamma`` times the noise PSD.

    ``phi_tilde_yy`` is the noisy (not yet subtracted) auto-PSD, shape
    ``(F,)`` for one bin or ``(F, B)``; ``noise_vv`` broadcasts against it
    (a scalar, a per-bin vector, or a :class:`NoiseProfile` for all bins).
    Returns a boolean selection mask and the per-bin counts ``P_k``.
    """
    if gamma <= 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    if isinstance(noise_vv, NoiseProfile):
        noise_vv = noise_vv.phi_vv
    selected = np.real(phi_tilde_yy) > gamma * np.asarray(noise_vv)
    return selected, selected.sum(axis=0)
