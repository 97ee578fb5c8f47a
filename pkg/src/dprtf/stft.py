"""Short-time Fourier analysis/synthesis and the CTF auxiliary windows.

Conventions
-----------
Frame ``p`` covers samples ``[p*L, p*L + N)`` of the input, there is no head
padding, and only full frames are produced. Bin ``k`` of frame ``p`` is::

    X[p, k] = sum_n x(p*L + n) * wa(n) * exp(-2j*pi*k*n/N)

Synthesis is the plain weighted overlap-add without a ``1/N`` in the inverse
DFT::

    x(n) = sum_p ws(n - p*L) * sum_k X[p, k] * exp(2j*pi*k*(n - p*L)/N) / (N*C)

where ``C`` is the overlap-add constant of ``wa * ws``. The default synthesis
window is the minimal-norm dual of the analysis window scaled so that
``C = 1/N``; with that scaling the band-to-band CTF coefficients produced by
:func:`zeta_window` are in the same units as the spectrogram itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

__all__ = [
    "StftConfig",
    "Spectrogram",
    "EmptyInputError",
    "default_config",
    "dual_window",
    "overlap_add_sum",
    "stft",
    "istft",
    "zeta_window",
    "nu_window",
    "n_frames",
]

COLA_RTOL = 1e-6


class EmptyInputError(ValueError):
    """Signal shorter than one analysis frame."""


def overlap_add_sum(window: np.ndarray, hop: int) -> np.ndarray:
    """Return ``sum_p window(n - p*hop)`` over one hop period, ``n = 0..hop-1``."""
    window = np.asarray(window, dtype=float)
    n = len(window)
    acc = np.zeros(hop)
    for start in range(0, n, hop):
        seg = window[start:start + hop]
        acc[:len(seg)] += seg
    return acc


def dual_window(analysis: np.ndarray, hop: int) -> np.ndarray:
    """Minimal-norm dual of ``analysis`` at ``hop``, scaled to overlap-add to ``1/N``."""
    analysis = np.asarray(analysis, dtype=float)
    n = len(analysis)
    denom = overlap_add_sum(analysis ** 2, hop)
    if np.any(denom <= np.finfo(float).eps * denom.max()):
        raise ValueError("analysis window is not invertible at this hop")
    periodic = np.tile(denom, -(-n // hop))[:n]
    return analysis / periodic / n


@dataclass(frozen=True, eq=False)
class StftConfig:
    """Framing parameters and the analysis/synthesis window pair.

    Use :func:`default_config` for the Hamming / minimal-norm-dual pair.
    """

    sample_rate: float
    frame_len: int
    hop: int
    analysis_window: np.ndarray = field(repr=False)
    synthesis_window: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.frame_len <= 0:
            raise ValueError(f"frame_len must be positive, got {self.frame_len}")
        if not 0 < self.hop <= self.frame_len:
            raise ValueError(f"hop must be in (0, frame_len], got {self.hop}")
        wa = np.array(self.analysis_window, dtype=float)
        ws = np.array(self.synthesis_window, dtype=float)
        if wa.shape != (self.frame_len,) or ws.shape != (self.frame_len,):
            raise ValueError("windows must have length frame_len")
        wa.setflags(write=False)
        ws.setflags(write=False)
        object.__setattr__(self, "analysis_window", wa)
        object.__setattr__(self, "synthesis_window", ws)
        ola = overlap_add_sum(wa * ws, self.hop)
        c = ola.mean()
        if c == 0 or np.max(np.abs(ola - c)) > COLA_RTOL * abs(c):
            raise ValueError("window pair does not satisfy constant overlap-add")
        object.__setattr__(self, "cola_constant", float(c))

    @property
    def n_bins(self) -> int:
        return self.frame_len // 2 + 1

    def __eq__(self, other):
        if not isinstance(other, StftConfig):
            return NotImplemented
        return (self.sample_rate == other.sample_rate
                and self.frame_len == other.frame_len
                and self.hop == other.hop
                and np.array_equal(self.analysis_window, other.analysis_window)
                and np.array_equal(self.synthesis_window, other.synthesis_window))

    def __hash__(self):
        return hash((self.sample_rate, self.frame_len, self.hop,
                     self.analysis_window.tobytes(), self.synthesis_window.tobytes()))


def default_config(sample_rate: float = 16000, frame_len: int = 256, hop: int = 128,
                   window: str = "hamming") -> StftConfig:
    wa = get_window(window, frame_len, fftbins=True)
    return StftConfig(sample_rate, frame_len, hop, wa, dual_window(wa, hop))


@dataclass(frozen=True)
class Spectrogram:
    """One-sided STFT of a single channel, shape ``(frames, N//2 + 1)``."""

    data: np.ndarray
    config: StftConfig
    channel_id: str | int | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[1] != self.config.n_bins:
            raise ValueError(f"expected (frames, {self.config.n_bins}) data, got {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    def full_spectrum(self) -> np.ndarray:
        """Two-sided spectrum rebuilt by conjugate symmetry, shape ``(frames, N)``."""
        n = self.config.frame_len
        tail = np.conj(self.data[:, 1:(n + 1) // 2][:, ::-1])
        return np.concatenate([self.data, tail], axis=1)


def n_frames(n_samples: int, cfg: StftConfig) -> int:
    if n_samples < cfg.frame_len:
        return 0
    return 1 + (n_samples - cfg.frame_len) // cfg.hop


def stft(signal, cfg: StftConfig, channel_id=None) -> Spectrogram:
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1:
        raise ValueError("stft expects a 1-D signal")
    p = n_frames(len(x), cfg)
    if p == 0:
        raise EmptyInputError(
            f"signal has {len(x)} samples, need at least {cfg.frame_len}")
    frames = np.lib.stride_tricks.sliding_window_view(x, cfg.frame_len)[::cfg.hop][:p]
    data = np.fft.rfft(frames * cfg.analysis_window, axis=1)
    return Spectrogram(data, cfg, channel_id)


def istft(spec: Spectrogram, length: int | None = None) -> np.ndarray:
    """Weighted overlap-add synthesis.

    Only samples ``[N - L, P*L)`` are covered by a complete set of frames; the
    edges are returned but are not exact reconstructions.
    """
    cfg = spec.config
    n, hop = cfg.frame_len, cfg.hop
    frames = np.fft.irfft(spec.data, n=n, axis=1) * n
    frames *= cfg.synthesis_window / (n * cfg.cola_constant)
    out_len = (spec.n_frames - 1) * hop + n
    out = np.zeros(out_len)
    for p, frame in enumerate(frames):
        out[p * hop:p * hop + n] += frame
    if length is not None:
        out = np.pad(out, (0, max(0, length - out_len)))[:length]
    return out


def _window_xcorr(cfg: StftConfig) -> np.ndarray:
    """``r(n) = sum_m wa(m) ws(n + m)`` for ``n = 1-N .. N-1``."""
    return np.correlate(cfg.synthesis_window, cfg.analysis_window, mode="full")


def zeta_window(cfg: StftConfig, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Band-to-band CTF kernel ``zeta_k(n) = exp(2j*pi*k*n/N) * sum_m wa(m) ws(n+m)``.

    Returns ``(n, zeta)`` with ``n = 1-N .. N-1``; the kernel is zero outside.
    """
    n_len = cfg.frame_len
    if not 0 <= k < n_len:
        raise IndexError(f"bin {k} outside [0, {n_len})")
    n = np.arange(1 - n_len, n_len)
    return n, np.exp(2j * np.pi * k * n / n_len) * _window_xcorr(cfg)


def nu_window(cfg: StftConfig) -> np.ndarray:
    """``nu(t) = sum_m wa(m) ws(m - t)`` for ``t = 0..N-1``."""
    r = _window_xcorr(cfg)
    # nu(t) = r(-t); r is indexed from n = 1-N
    return r[cfg.frame_len - 1::-1].copy()
