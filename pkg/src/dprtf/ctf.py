"""Convolutive transfer function (band-to-band) model of an impulse response.

A time-domain impulse response ``a(n)`` is represented per frequency bin by a
short filter across frames, ``a[p', k] = (a * zeta_k)(p' L)``. Row 0 is the
direct-path ATF: the ``nu``-weighted DFT of the first ``N`` samples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .stft import Spectrogram, StftConfig, nu_window

__all__ = [
    "CtfFilter",
    "DirectPathGroundTruth",
    "RATIO_EPS",
    "lossless_length",
    "ctf_from_rir",
    "direct_path_atf",
    "ctf_convolve",
    "ground_truth_dprtf",
    "save_rir",
    "load_rir",
]

RATIO_EPS = 1e-12


@dataclass(frozen=True)
class CtfFilter:
    """CTF coefficients, shape ``(Q, N//2 + 1)``; row 0 is the direct-path ATF."""

    coeffs: np.ndarray
    config: StftConfig
    truncated: bool = False

    def __post_init__(self):
        coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if coeffs.shape[0] < 1 or coeffs.shape[1] != self.config.n_bins:
            raise ValueError(f"bad CTF coefficient shape {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def length(self) -> int:
        return self.coeffs.shape[0]

    def __add__(self, other: CtfFilter) -> CtfFilter:
        if other.config != self.config:
            raise ValueError("CTF filters have different STFT configurations")
        q = max(self.length, other.length)
        a = np.zeros((q, self.config.n_bins), complex)
        a[:self.length] += self.coeffs
        a[:other.length] += other.coeffs
        return CtfFilter(a, self.config, self.truncated or other.truncated)

    def __mul__(self, scale) -> CtfFilter:
        return CtfFilter(self.coeffs * scale, self.config, self.truncated)

    __rmul__ = __mul__


@dataclass(frozen=True)
class DirectPathGroundTruth:
    dp_atf_a: np.ndarray
    dp_atf_b: np.ndarray
    dp_rtf: np.ndarray
    valid: np.ndarray


def lossless_length(rir_len: int, cfg: StftConfig) -> int:
    """Smallest ``Q`` whose frames cover the full support of ``rir * zeta``."""
    return math.ceil((rir_len + cfg.frame_len - 1) / cfg.hop)


def ctf_from_rir(rir, cfg: StftConfig, q: int) -> CtfFilter:
    """Sample ``rir * zeta_k`` at ``n = p' L`` for ``p' = 0..q-1``.

    A ``q`` below :func:`lossless_length` is allowed and marks the filter as
    truncated.
    """
    if q <= 0:
        raise ValueError(f"CTF length must be positive, got {q}")
    a = np.asarray(rir, dtype=float)
    if a.size == 0:
        raise ValueError("empty impulse response")
    n_len, hop = cfg.frame_len, cfg.hop
    kbins = np.arange(cfg.n_bins)
    # (a * zeta_k)(n) = sum_t a(t) r(n - t) exp(2j pi k (n - t)/N),
    # so a[p', k] = sum_{u=1-N}^{N-1} a(p'L - u) r(u) exp(2j pi k u / N).
    u = np.arange(1 - n_len, n_len)
    r = np.correlate(cfg.synthesis_window, cfg.analysis_window, mode="full")
    kernel = r[None, :] * np.exp(2j * np.pi * np.outer(kbins, u) / n_len)  # (K, 2N-1)
    coeffs = np.zeros((q, cfg.n_bins), complex)
    padded = np.concatenate([np.zeros(n_len), a, np.zeros(q * hop + n_len)])
    for p in range(q):
        t = p * hop - u + n_len  # index into padded
        coeffs[p] = kernel @ padded[t]
    return CtfFilter(coeffs, cfg, truncated=q < lossless_length(a.size, cfg))


def direct_path_atf(rir, cfg: StftConfig) -> np.ndarray:
    """``sum_{t<N} rir(t) nu(t) exp(-2j pi k t / N)`` for the one-sided bins."""
    a = np.asarray(rir, dtype=float)[:cfg.frame_len]
    seg = np.zeros(cfg.frame_len)
    seg[:a.size] = a
    return np.fft.rfft(seg * nu_window(cfg))


def ctf_convolve(source_spec: Spectrogram, filt: CtfFilter) -> Spectrogram:
    """Per-bin convolution across frames, zero history before frame 0."""
    if source_spec.config != filt.config:
        raise ValueError("spectrogram and CTF filter use different STFT configurations")
    s = source_spec.data
    out = np.zeros_like(s)
    for p in range(min(filt.length, s.shape[0])):
        out[p:] += s[:s.shape[0] - p] * filt.coeffs[p]
    return Spectrogram(out, source_spec.config, source_spec.channel_id)


def ground_truth_dprtf(rir_a, rir_b, cfg: StftConfig) -> DirectPathGroundTruth:
    a0 = direct_path_atf(rir_a, cfg)
    b0 = direct_path_atf(rir_b, cfg)
    valid = np.abs(a0) > RATIO_EPS
    rtf = np.full(a0.shape, np.nan + 0j)
    rtf[valid] = b0[valid] / a0[valid]
    return DirectPathGroundTruth(a0, b0, rtf, valid)


def save_rir(path, rir, sample_rate: float) -> None:
    """Write a one-line JSON header followed by little-endian float64 samples."""
    rir = np.asarray(rir, dtype="<f8")
    header = json.dumps({"sample_rate": sample_rate, "length": int(rir.size)})
    with open(path, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(rir.tobytes())


def load_rir(path) -> tuple[np.ndarray, float]:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        from .audio import read_wav
        data, fs = read_wav(path)
        return data if data.ndim == 1 else data[:, 0], fs
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != header["length"]:
        raise ValueError(f"{path}: expected {header['length']} samples, found {data.size}")
    return data.copy(), float(header["sample_rate"])
