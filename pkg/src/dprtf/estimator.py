"""Direct-path RTF estimation by least squares on PSD statistics.

Per bin ``k`` the noise-subtracted statistics of the selected frames are
stacked into ``Phi = Psi g``; the first entry of the LS solution ``g`` is the
direct-path RTF ``b0/a0``. Estimates of several microphone pairs are
normalised, concatenated bin by bin, and paired with a missing-data mask.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .psd import NoiseProfile, psd_statistics, select_frames, spectral_subtract
from .stft import Spectrogram, StftConfig

__all__ = [
    "EstimatorConfig",
    "LinearSystem",
    "SolveStatus",
    "Solution",
    "DpRtfFeature",
    "ctf_length",
    "build_system",
    "solve_ls",
    "normalize",
    "assemble_feature",
    "estimate_pair",
    "estimate_feature",
    "PairEstimate",
]


@dataclass(frozen=True)
class EstimatorConfig:
    """Defaults: bins 5..63 (300 Hz to 4 kHz at 16 kHz/256), D=25, gamma=1.8,
    Q from 0.25*T60 with T60 falling back to 0.5 s."""

    bins: tuple = tuple(range(5, 64))
    d: int = 25
    gamma: float = 1.8
    q: int | None = None
    t60: float | None = None
    default_t60: float = 0.5
    q_t60_fraction: float = 0.25
    ridge: float = 0.0
    rcond: float = 1e-10

    def resolve_q(self, cfg: StftConfig) -> int:
        if self.q is not None:
            return self.q
        t60 = self.default_t60 if self.t60 is None else self.t60
        return ctf_length(t60, cfg, self.q_t60_fraction)


def ctf_length(t60: float, cfg: StftConfig, fraction: float = 0.25) -> int:
    """CTF length in frames for a ``fraction * T60`` time span, at least 1."""
    return max(1, math.ceil(fraction * t60 * cfg.sample_rate / cfg.hop - 1e-9))


@dataclass(frozen=True)
class LinearSystem:
    phi: np.ndarray
    psi: np.ndarray
    k: int | None = None
    frames: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.psi.shape[0]

    @property
    def n_unknowns(self) -> int:
        return self.psi.shape[1]


class SolveStatus(enum.Enum):
    OK = "ok"
    UNDERDETERMINED = "underdetermined"
    RANK_DEFICIENT = "rank_deficient"
    NON_FINITE = "non_finite"

    @property
    def usable(self) -> bool:
        return self is SolveStatus.OK


@dataclass(frozen=True)
class Solution:
    g: np.ndarray | None
    status: SolveStatus
    condition: float = math.inf
    rank: int = 0


def build_system(blocks, q: int | None = None) -> LinearSystem:
    """Stack per-frame statistics of one bin, frames in ascending order."""
    blocks = sorted(blocks, key=lambda b: -1 if b.frame is None else b.frame)
    if not blocks:
        if q is None:
            raise ValueError("Q is required to shape an empty system")
        return LinearSystem(np.zeros(0, complex), np.zeros((0, 2 * q - 1), complex))
    ks = {b.bin for b in blocks}
    qs = {b.q for b in blocks}
    if len(ks) > 1 or len(qs) > 1:
        raise ValueError("blocks must share bin and CTF length")
    phi = np.array([b.phi_yy for b in blocks], complex)
    psi = np.array([b.phi_zy for b in blocks], complex)
    frames = np.array([-1 if b.frame is None else b.frame for b in blocks])
    return LinearSystem(phi, psi, blocks[0].bin, frames)


def solve_ls(system: LinearSystem, ridge: float = 0.0, rcond: float = 1e-10) -> Solution:
    """Least-squares solution via SVD, with an optional trace-scaled ridge."""
    psi, phi = system.psi, system.phi
    n = system.n_unknowns
    if system.n_rows < n:
        return Solution(None, SolveStatus.UNDERDETERMINED)
    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(phi))):
        return Solution(None, SolveStatus.NON_FINITE)
    if ridge > 0:
        lam = ridge * np.real(np.vdot(psi, psi)) / n
        psi = np.vstack([psi, math.sqrt(lam) * np.eye(n)])
        phi = np.concatenate([phi, np.zeros(n)])
    u, s, vh = np.linalg.svd(psi, full_matrices=False)
    if s[0] == 0:
        return Solution(None, SolveStatus.RANK_DEFICIENT, math.inf, 0)
    rank = int(np.sum(s > rcond * s[0]))
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    if rank < n:
        return Solution(None, SolveStatus.RANK_DEFICIENT, cond, rank)
    g = vh.conj().T @ ((u.conj().T @ phi) / s)
    if not np.all(np.isfinite(g)):
        return Solution(None, SolveStatus.NON_FINITE, cond, rank)
    return Solution(g, SolveStatus.OK, cond, rank)


def normalize(g0):
    """Map ``g`` to ``g / sqrt(|g|^2 + 1)``: same phase, modulus in ``[0, 1)``.

    Non-finite input yields NaN, which feature assembly masks.
    """
    g0 = np.asarray(g0, dtype=complex)
    with np.errstate(invalid="ignore"):
        out = g0 / np.sqrt(np.abs(g0) ** 2 + 1)
    return out if out.ndim else complex(out)


@dataclass
class DpRtfFeature:
    """Global feature ``c`` (bins ascending, pairs within a bin) and mask ``h``."""

    values: np.ndarray
    mask: np.ndarray
    n_pairs: int
    bins: tuple
    method: str = "dp-rtf"
    pairs: tuple = field(default=())

    def __post_init__(self):
        self.values = np.asarray(self.values, complex)
        self.mask = np.asarray(self.mask, bool)
        if self.values.shape != self.mask.shape:
            raise ValueError("feature and mask lengths differ")
        if self.values.size != self.n_pairs * len(self.bins):
            raise ValueError("feature length must be n_pairs * n_bins")

    def __len__(self):
        return self.values.size

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def as_matrix(self) -> np.ndarray:
        """Values reshaped to ``(n_bins, n_pairs)``; masked entries become NaN."""
        v = np.where(self.mask, self.values, np.nan + 0j)
        return v.reshape(len(self.bins), self.n_pairs)

    def realified(self) -> tuple[np.ndarray, np.ndarray]:
        """Interleaved ``(re, im)`` vector and the duplicated mask."""
        re = np.column_stack([self.values.real, self.values.imag]).ravel()
        mask = np.repeat(self.mask, 2)
        return np.where(mask, re, 0.0), mask

    def to_records(self) -> list[dict]:
        recs = []
        for i, (v, m) in enumerate(zip(self.values, self.mask)):
            pair = self.pairs[i % self.n_pairs] if self.pairs else i % self.n_pairs
            recs.append({"pair": list(pair) if isinstance(pair, tuple) else pair,
                         "bin": int(self.bins[i // self.n_pairs]),
                         "re": float(v.real) if m else 0.0,
                         "im": float(v.imag) if m else 0.0,
                         "mask": int(m)})
        return recs

    def to_json(self) -> str:
        return json.dumps({"method": self.method, "n_pairs": self.n_pairs,
                           "bins": list(map(int, self.bins)),
                           "records": self.to_records()})

    @classmethod
    def from_json(cls, text: str) -> DpRtfFeature:
        doc = json.loads(text)
        recs = doc["records"]
        values = np.array([r["re"] + 1j * r["im"] for r in recs])
        mask = np.array([bool(r["mask"]) for r in recs])
        pairs = tuple(tuple(r["pair"]) if isinstance(r["pair"], list) else r["pair"]
                      for r in recs[:doc["n_pairs"]])
        return cls(values, mask, doc["n_pairs"], tuple(doc["bins"]), doc["method"], pairs)


def assemble_feature(per_pair_per_bin: dict, pairs, bins, method: str = "dp-rtf",
                     normalized: bool = False) -> DpRtfFeature:
    """Build the global feature from ``{(pair, k): g0 or None}``.

    Missing keys, ``None`` and non-finite values are masked. Raw ``g0``
    values are normalised unless ``normalized`` is set.
    """
    pairs = tuple(pairs)
    bins = tuple(int(b) for b in bins)
    values = np.zeros(len(pairs) * len(bins), complex)
    mask = np.zeros(values.size, bool)
    for bi, k in enumerate(bins):
        for pi, pair in enumerate(pairs):
            g = per_pair_per_bin.get((pair, k))
            if g is None or not np.isfinite(g):
                continue
            c = g if normalized else normalize(g)
            if not np.isfinite(c):
                continue
            values[bi * len(pairs) + pi] = c
            mask[bi * len(pairs) + pi] = True
    return DpRtfFeature(values, mask, len(pairs), bins, method, pairs)


@dataclass
class PairEstimate:
    """Per-bin outcome for one microphone pair."""

    bins: np.ndarray
    g0: np.ndarray
    status: list
    n_frames: np.ndarray
    q: int
    g: list = field(default_factory=list)

    @property
    def valid(self) -> np.ndarray:
        return np.array([s.usable for s in self.status])


def estimate_pair(spec_x: Spectrogram, spec_y: Spectrogram,
                  noise: NoiseProfile | None = None,
                  cfg: EstimatorConfig | None = None, keep_g: bool = False) -> PairEstimate:
    """DP-RTF ``b0/a0`` of channel ``y`` relative to reference ``x`` on the configured bins.

    Without a noise profile the statistics are used as-is and every frame
    with full history and non-zero power is selected.
    """
    cfg = cfg or EstimatorConfig()
    q = cfg.resolve_q(spec_x.config)
    bins = np.asarray(cfg.bins)
    stats = psd_statistics(spec_x, spec_y, q, cfg.d, bins)
    if noise is not None:
        selected, _ = select_frames(stats.phi_yy, noise.phi_vv[bins], cfg.gamma)
        stats = spectral_subtract(stats, noise)
    else:
        selected = np.real(stats.phi_yy) > 0
    g0 = np.full(len(bins), np.nan + 0j)
    status, counts, gs = [], np.zeros(len(bins), int), []
    for j, k in enumerate(bins):
        rows = np.flatnonzero(selected[:, j])
        counts[j] = rows.size
        system = LinearSystem(stats.phi_yy[rows, j], stats.phi_zy[rows, j], int(k),
                              stats.frames[rows])
        sol = solve_ls(system, cfg.ridge, cfg.rcond)
        status.append(sol.status)
        gs.append(sol.g if keep_g else None)
        if sol.status.usable:
            g0[j] = sol.g[0]
    return PairEstimate(bins, g0, status, counts, q, gs if keep_g else [])


def estimate_feature(specs, pairs, noise: dict | None = None,
                     cfg: EstimatorConfig | None = None) -> DpRtfFeature:
    """Feature over several pairs; ``specs`` maps channel index to spectrogram and
    ``noise`` maps each pair to its profile."""
    cfg = cfg or EstimatorConfig()
    entries = {}
    for pair in pairs:
        a, b = pair
        est = estimate_pair(specs[a], specs[b], None if noise is None else noise[pair], cfg)
        for k, g, st in zip(est.bins, est.g0, est.status):
            entries[(pair, int(k))] = g if st.usable else None
    return assemble_feature(entries, pairs, cfg.bins)
