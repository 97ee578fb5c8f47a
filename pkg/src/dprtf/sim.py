"""Shoebox image-source room simulation and recording rendering.

Early images (arriving within ``frac_window`` seconds of the direct path) are
placed with a Hann-windowed sinc fractional delay; later images are rounded
to the nearest sample after a uniform +-0.5 sample jitter, which breaks up the
periodic arrival structure of a regular image lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from scipy.signal import butter, fftconvolve, lfilter

from .ctf import ground_truth_dprtf, lossless_length
from .estimator import EstimatorConfig
from .stft import StftConfig, default_config

__all__ = [
    "RoomScene",
    "NoiseSpec",
    "RirInfo",
    "Recording",
    "InfeasibleT60Error",
    "head_array",
    "DEFAULT_PAIRS",
    "direction_to_position",
    "position_to_direction",
    "eyring_reflection",
    "feasible_t60_range",
    "simulate_rir",
    "simulate_rirs",
    "truncate_anechoic",
    "schroeder_t60",
    "speech_like",
    "make_noise",
    "render_recording",
    "direction_grid",
    "scene_with_direction",
    "anechoic_rirs",
    "build_training_set",
]

SPEED_OF_SOUND = 343.0
SINC_HALF = 16
MIN_ABSORPTION = 0.01

# cross pairs A-C and B-D of the default 4-mic head array
DEFAULT_PAIRS = ((0, 2), (1, 3))


class InfeasibleT60Error(ValueError):
    pass


def head_array(diameter: float = 0.10, tilt_deg: float = 5.0) -> np.ndarray:
    """Four microphones on a circle, plane tilted about the y axis.

    Microphones sit at azimuths 45, 135, 225 and 315 degrees so that the
    cross pairs (0, 2) and (1, 3) span both horizontal diagonals. Positions
    are relative to the array centre, shape ``(4, 3)``.
    """
    r = diameter / 2
    az = np.deg2rad([45.0, 135.0, 225.0, 315.0])
    pts = np.column_stack([r * np.cos(az), r * np.sin(az), np.zeros(4)])
    t = np.deg2rad(tilt_deg)
    rot = np.array([[np.cos(t), 0, -np.sin(t)], [0, 1, 0], [np.sin(t), 0, np.cos(t)]])
    return pts @ rot.T


def direction_to_position(center, azimuth_deg, elevation_deg, distance) -> np.ndarray:
    az, el = np.deg2rad(azimuth_deg), np.deg2rad(elevation_deg)
    unit = np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])
    return np.asarray(center, float) + distance * unit


def position_to_direction(center, position) -> tuple[float, float, float]:
    v = np.asarray(position, float) - np.asarray(center, float)
    dist = float(np.linalg.norm(v))
    az = math.degrees(math.atan2(v[1], v[0]))
    el = math.degrees(math.asin(v[2] / dist))
    return az, el, dist


def _surface_volume(dims):
    lx, ly, lz = dims
    return 2 * (lx * ly + lx * lz + ly * lz), lx * ly * lz


def eyring_reflection(dims, t60: float, c: float = SPEED_OF_SOUND) -> float:
    """Uniform wall reflection coefficient giving ``t60`` by Eyring's formula."""
    s, v = _surface_volume(dims)
    alpha = 1 - math.exp(-24 * math.log(10) * v / (c * s * t60))
    return math.sqrt(1 - alpha)


@lru_cache(maxsize=256)
def calibrated_reflection(dims: tuple, t60: float, fs: float = 16000,
                          c: float = SPEED_OF_SOUND, iterations: int = 4) -> float:
    """Reflection coefficient whose simulated Schroeder T60 matches ``t60``.

    Starts from Eyring and rescales ``log(beta)`` by the measured/target
    ratio, using a reference source/microphone placement inside the room.
    Shoebox image-source decays are slower than Eyring predicts because
    grazing image paths meet fewer walls.
    """
    dims = tuple(float(d) for d in dims)
    log_beta = math.log(eyring_reflection(dims, t60, c))
    d = np.asarray(dims)
    src, mic = tuple(0.37 * d), tuple(0.61 * d)
    for _ in range(iterations):
        scene = RoomScene(dims, src, (mic,), t60=None, absorption=1 - math.exp(2 * log_beta),
                          fs=fs, speed_of_sound=c, rir_seconds=1.2 * t60)
        measured = schroeder_t60(simulate_rir(scene, 0, return_info=False), fs)
        log_beta *= measured / t60
        if abs(measured / t60 - 1) < 0.005:
            break
    return math.exp(log_beta)


def feasible_t60_range(dims, c: float = SPEED_OF_SOUND) -> tuple[float, float]:
    s, v = _surface_volume(dims)
    t_max = 24 * math.log(10) * v / (c * s * -math.log(1 - MIN_ABSORPTION))
    return 0.0, t_max


@dataclass(frozen=True)
class RoomScene:
    """Shoebox room with an omnidirectional source and microphone array.

    Give either ``t60`` (seconds) or ``absorption`` (energy absorption
    coefficient of every wall, ``1`` for anechoic). ``mic_positions`` are
    absolute coordinates.
    """

    room_dims: tuple
    source_position: tuple
    mic_positions: tuple
    t60: float | None = 0.5
    absorption: float | None = None
    fs: float = 16000
    speed_of_sound: float = SPEED_OF_SOUND
    rir_seconds: float | None = None
    jitter_seed: int = 0

    def __post_init__(self):
        dims = np.asarray(self.room_dims, float)
        pts = [np.asarray(self.source_position, float)] + [
            np.asarray(m, float) for m in self.mic_positions]
        for pt in pts:
            if pt.shape != (3,) or np.any(pt <= 0) or np.any(pt >= dims):
                raise ValueError(f"point {pt.tolist()} is not strictly inside the room")
        mics = np.asarray(self.mic_positions, float)
        for i in range(len(mics)):
            for j in range(i + 1, len(mics)):
                if np.linalg.norm(mics[i] - mics[j]) <= 0:
                    raise ValueError("microphone positions must be distinct")
        if (self.t60 is None) == (self.absorption is None):
            raise ValueError("give exactly one of t60 or absorption")
        if self.absorption is not None and not 0 < self.absorption <= 1:
            raise ValueError("absorption must be in (0, 1]")
        if self.t60 is not None:
            lo, hi = feasible_t60_range(dims, self.speed_of_sound)
            if not lo <= self.t60 <= hi:
                raise InfeasibleT60Error(
                    f"T60={self.t60} s unreachable for room {tuple(dims)}; "
                    f"feasible range is [{lo:g}, {hi:.3g}] s")

    @classmethod
    def with_head(cls, room_dims, center, azimuth_deg, elevation_deg, distance,
                  t60=0.5, array=None, **kw) -> RoomScene:
        array = head_array() if array is None else np.asarray(array, float)
        mics = tuple(map(tuple, np.asarray(center, float) + array))
        src = tuple(direction_to_position(center, azimuth_deg, elevation_deg, distance))
        return cls(tuple(room_dims), src, mics, t60=t60, **kw)

    @property
    def reflection(self) -> float:
        if self.absorption is not None:
            return math.sqrt(1 - self.absorption)
        if self.t60 == 0:
            return 0.0
        return calibrated_reflection(tuple(self.room_dims), float(self.t60), float(self.fs),
                                     float(self.speed_of_sound))

    @property
    def array_center(self) -> np.ndarray:
        return np.mean(np.asarray(self.mic_positions, float), axis=0)

    @property
    def direction(self) -> tuple[float, float, float]:
        return position_to_direction(self.array_center, self.source_position)

    def rir_length(self) -> int:
        if self.rir_seconds is not None:
            return max(1, int(round(self.rir_seconds * self.fs)))
        dist = max(np.linalg.norm(np.subtract(self.source_position, m))
                   for m in self.mic_positions)
        direct = dist / self.speed_of_sound
        beta = self.reflection
        if beta == 0:
            tail = 0.0
        else:
            tail = self.t60 if self.t60 is not None else _t60_from_beta(self)
        return int(math.ceil((direct + tail) * self.fs)) + 2 * SINC_HALF + 1

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> RoomScene:
        d = json.loads(text)
        d["room_dims"] = tuple(d["room_dims"])
        d["source_position"] = tuple(d["source_position"])
        d["mic_positions"] = tuple(tuple(m) for m in d["mic_positions"])
        return cls(**d)


def _t60_from_beta(scene: RoomScene) -> float:
    s, v = _surface_volume(scene.room_dims)
    alpha = 1 - scene.reflection ** 2
    return 24 * math.log(10) * v / (scene.speed_of_sound * s * -math.log(1 - alpha))


@dataclass(frozen=True)
class RirInfo:
    """Metadata derived from one simulated RIR (delays in samples)."""

    direct_delay: float
    first_reflection: float
    itdg: float
    drr_db: float
    truncation_sample: int


def _frac_kernel(frac_delays: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hann-windowed sinc taps for delays ``frac_delays``; returns start index and taps."""
    base = np.floor(frac_delays).astype(int)
    offs = np.arange(-SINC_HALF, SINC_HALF + 1)
    t = base[:, None] + offs[None, :] - frac_delays[:, None]
    taps = np.sinc(t) * 0.5 * (1 + np.cos(np.pi * t / (SINC_HALF + 1)))
    return base - SINC_HALF, taps


def _image_sources(scene: RoomScene, mic: np.ndarray, max_dist: float):
    dims = np.asarray(scene.room_dims, float)
    src = np.asarray(scene.source_position, float)
    n_max = np.ceil(max_dist / (2 * dims)).astype(int) + 1
    ranges = [np.arange(-n, n + 1) for n in n_max]
    axis_pos, axis_refl = [], []
    for d in range(3):
        n = ranges[d]
        # p = 0: x = s + 2 n L, reflections |n| + |n|; p = 1: x = -s + 2 n L, |n - 1| + |n|
        pos = np.concatenate([src[d] + 2 * n * dims[d], -src[d] + 2 * n * dims[d]])
        refl = np.concatenate([2 * np.abs(n), np.abs(n - 1) + np.abs(n)])
        axis_pos.append(pos - mic[d])
        axis_refl.append(refl)
    dx2 = axis_pos[0] ** 2
    dy2 = axis_pos[1] ** 2
    dz2 = axis_pos[2] ** 2
    # prune on the xy plane first to keep the candidate set small
    dxy = dx2[:, None] + dy2[None, :]
    ix, iy = np.nonzero(dxy <= max_dist ** 2)
    d2 = dxy[ix, iy][:, None] + dz2[None, :]
    sel, iz = np.nonzero(d2 <= max_dist ** 2)
    dist = np.sqrt(d2[sel, iz])
    order = axis_refl[0][ix[sel]] + axis_refl[1][iy[sel]] + axis_refl[2][iz]
    return dist, order


def simulate_rir(scene: RoomScene, mic: int, frac_window: float = 0.05,
                 return_info: bool = True):
    """Image-source RIR of microphone ``mic``.

    Returns ``(rir, info)`` where ``info`` is an :class:`RirInfo`.
    """
    fs, c = scene.fs, scene.speed_of_sound
    mic_pos = np.asarray(scene.mic_positions[mic], float)
    length = scene.rir_length()
    beta = scene.reflection
    max_dist = (length - SINC_HALF - 1) / fs * c
    if beta == 0:
        dist = np.array([np.linalg.norm(np.subtract(scene.source_position, mic_pos))])
        order = np.array([0])
    else:
        dist, order = _image_sources(scene, mic_pos, max_dist)
    delays = dist / c * fs
    amps = beta ** order / (4 * np.pi * dist)
    direct_idx = int(np.argmin(np.where(order == 0, delays, np.inf)))
    direct = delays[direct_idx]

    rng = np.random.default_rng([scene.jitter_seed, mic])
    late = delays > direct + frac_window * fs
    jitter = rng.uniform(-0.5, 0.5, size=delays.shape)
    late_delay = np.rint(delays[late] + jitter[late]).astype(int)
    buf = np.zeros(length + 2 * SINC_HALF + 2)
    keep = late_delay < length
    np.add.at(buf, late_delay[keep] + SINC_HALF, amps[late][keep])

    early = ~late
    start, taps = _frac_kernel(delays[early])
    idx = start[:, None] + np.arange(2 * SINC_HALF + 1)[None, :] + SINC_HALF
    ok = (idx >= 0) & (idx < buf.size)
    np.add.at(buf, idx[ok], (taps * amps[early][:, None])[ok])
    rir = buf[SINC_HALF:SINC_HALF + length]

    if not return_info:
        return rir
    reflections = delays[order > 0]
    first = float(reflections.min()) if reflections.size else math.inf
    trunc = _truncation_point(direct, first, length)
    lo = max(0, int(math.floor(direct)) - SINC_HALF)
    hi = min(length, int(math.floor(direct)) + SINC_HALF + 1)
    e_direct = np.sum(rir[lo:hi] ** 2)
    e_rest = np.sum(rir ** 2) - e_direct
    drr = 10 * np.log10(e_direct / e_rest) if e_rest > 0 else math.inf
    return rir, RirInfo(float(direct), first, first - direct, float(drr), trunc)


def _truncation_point(direct: float, first: float, length: int) -> int:
    if not math.isfinite(first):
        return length
    # stop before the first reflection's kernel starts, but keep the direct pulse's body
    point = int(math.floor(first)) - SINC_HALF
    return int(min(length, max(point, math.floor(direct) + 2)))


def simulate_rirs(scene: RoomScene, **kw):
    """RIRs of all microphones, shape ``(n_mics, length)``, and their metadata."""
    out = [simulate_rir(scene, m, **kw) for m in range(len(scene.mic_positions))]
    return np.array([r for r, _ in out]), [i for _, i in out]


def truncate_anechoic(rir, info: RirInfo | None) -> np.ndarray:
    """Zero every sample from the first reflection on."""
    if info is None or info.truncation_sample is None:
        raise ValueError("first reflection not identified; RIR metadata required")
    out = np.array(rir, dtype=float, copy=True)
    out[info.truncation_sample:] = 0.0
    return out


def schroeder_t60(rir, fs: float, fit_db=(-5.0, -35.0)) -> float:
    """Reverberation time from a line fit to the backward-integrated energy decay."""
    e = np.asarray(rir, float) ** 2
    edc = np.cumsum(e[::-1])[::-1]
    edc_db = 10 * np.log10(edc / edc[0] + 1e-300)
    hi, lo = fit_db
    i0 = int(np.argmax(edc_db <= hi))
    i1 = int(np.argmax(edc_db <= lo))
    if i1 <= i0:
        raise ValueError("decay range not reached by the impulse response")
    t = np.arange(i0, i1) / fs
    slope, _ = np.polyfit(t, edc_db[i0:i1], 1)
    return -60.0 / slope


def speech_like(n_samples: int, fs: float, rng: np.random.Generator,
                syllable_rate: float = 4.0, pause_fraction: float = 0.25,
                voiced: bool = False) -> np.ndarray:
    """Speech-shaped modulated noise with syllabic bursts and pauses.

    Each syllable is a noise carrier (or, with ``voiced``, a pitch-jittered
    pulse train plus aspiration noise) with a -6 dB/octave tilt, coloured by
    three random formant-like resonators and a raised-sine envelope. The
    result is band-limited to 100 Hz - 5 kHz and peak-normalised.
    """
    out = np.zeros(n_samples)
    tilt = math.exp(-2 * math.pi * 400 / fs)
    t = 0
    while t < n_samples:
        dur = int(fs * rng.uniform(0.6, 1.6) / syllable_rate)
        if rng.random() < pause_fraction:
            t += dur
            continue
        seg = min(dur, n_samples - t)
        if voiced:
            f0 = rng.uniform(90, 220) * (1 + 0.08 * np.sin(
                2 * np.pi * rng.uniform(2, 5) * np.arange(seg) / fs))
            pulses = np.diff(np.floor(np.cumsum(f0 / fs)), prepend=0.0)
            src = (lfilter([1.0], [1.0, -0.9], pulses) * rng.uniform(0.3, 1.0)
                   + 0.03 * rng.standard_normal(seg))
        else:
            src = lfilter([1 - tilt], [1.0, -tilt], rng.standard_normal(seg)) * 4
        for _ in range(3):
            fc = rng.uniform(300, 3500)
            bw = rng.uniform(80, 300)
            r = math.exp(-math.pi * bw / fs)
            a = [1.0, -2 * r * math.cos(2 * math.pi * fc / fs), r * r]
            src = src + 0.5 * lfilter([1 - r], a, src)
        env = np.sin(np.pi * np.arange(seg) / seg) ** 2 * rng.uniform(0.3, 1.0)
        out[t:t + seg] += src * env
        t += dur
    # remove the pulse train's DC and keep the bulk of the energy below ~5 kHz
    b, a = butter(2, [100 / (fs / 2), min(5000.0, 0.45 * fs) / (fs / 2)], btype="band")
    out = lfilter(b, a, out)
    peak = np.max(np.abs(out))
    return out / peak if peak > 0 else out


@dataclass(frozen=True)
class NoiseSpec:
    """Additive sensor noise.

    ``kind`` is ``"white"`` or ``"fan"`` (lowpass emphasis below 4 kHz);
    ``spatial`` is ``"independent"`` or ``"correlated"``, the latter mixing a
    common component into every channel with weight ``correlation``.
    """

    kind: str = "fan"
    snr_db: float = math.inf
    spatial: str = "correlated"
    correlation: float = 0.5

    def __post_init__(self):
        if self.kind not in ("white", "fan"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.spatial not in ("independent", "correlated"):
            raise ValueError(f"unknown noise spatial model {self.spatial!r}")


def make_noise(spec: NoiseSpec, n_channels: int, n_samples: int, fs: float,
               rng: np.random.Generator) -> np.ndarray:
    """Unit-power (per channel, on average) stationary noise, shape ``(C, n)``."""
    w = rng.standard_normal((n_channels, n_samples))
    if spec.spatial == "correlated":
        common = rng.standard_normal(n_samples)
        rho = spec.correlation
        w = math.sqrt(1 - rho) * w + math.sqrt(rho) * common[None, :]
    if spec.kind == "fan":
        # low-frequency emphasis, energy concentrated below 4 kHz, weak white floor
        r = math.exp(-2 * math.pi * 600 / fs)
        b, a = butter(4, min(4000.0, 0.45 * fs) / (fs / 2))
        w = lfilter(b, a, lfilter([1 - r], [1, -r], w, axis=1), axis=1) + 0.01 * w
    return w / np.sqrt(np.mean(w ** 2))


@dataclass
class Recording:
    signals: np.ndarray
    noise: np.ndarray | None
    clean: np.ndarray
    rirs: np.ndarray
    infos: list
    scene: RoomScene
    noise_spec: NoiseSpec
    seed: int
    noise_only: np.ndarray | None = None
    ground_truth: dict = field(default_factory=dict)

    @property
    def direction(self):
        return self.scene.direction

    def measured_snr_db(self, ref: int = 0) -> float:
        if self.noise is None:
            return math.inf
        return 10 * np.log10(np.mean(self.clean[ref] ** 2) / np.mean(self.noise[ref] ** 2))


def render_recording(scene: RoomScene, source_signal, noise: NoiseSpec | None = None,
                     seed: int = 0, noise_seconds: float = 2.0, rirs=None,
                     pairs=DEFAULT_PAIRS, cfg: StftConfig | None = None,
                     ref_mic: int = 0) -> Recording:
    """Convolve the source with every microphone RIR and add noise at the requested SNR.

    SNR is measured against the reverberant speech image at ``ref_mic``. A
    separate noise-only segment of ``noise_seconds`` from the same noise
    process is returned for noise-profile estimation.
    """
    s = np.asarray(source_signal, float)
    if s.size == 0:
        raise ValueError("empty source signal")
    noise = noise or NoiseSpec(snr_db=math.inf)
    cfg = cfg or default_config(scene.fs)
    if rirs is None:
        rirs, infos = simulate_rirs(scene)
    else:
        rirs, infos = rirs
    clean = np.array([fftconvolve(s, h)[:s.size] for h in rirs])
    rng = np.random.default_rng(seed)
    n_noise = int(round(noise_seconds * scene.fs))
    noise_sig = noise_only = None
    signals = clean.copy()
    if math.isfinite(noise.snr_db):
        both = make_noise(noise, len(rirs), s.size + n_noise, scene.fs, rng)
        p_speech = np.mean(clean[ref_mic] ** 2)
        p_noise = np.mean(both[ref_mic, :s.size] ** 2)
        gain = math.sqrt(p_speech / p_noise / 10 ** (noise.snr_db / 10))
        both *= gain
        noise_sig, noise_only = both[:, :s.size], both[:, s.size:]
        signals = clean + noise_sig
    gt = {}
    for a, b in pairs:
        gt[(a, b)] = ground_truth_dprtf(rirs[a], rirs[b], cfg)
    return Recording(signals, noise_sig, clean, rirs, infos, scene, noise, seed,
                     noise_only, gt)


def direction_grid(n_azimuth: int, n_elevation: int, azimuth=(-120.0, 120.0),
                   elevation=(-15.0, 25.0)) -> np.ndarray:
    """Regular (azimuth, elevation) grid in degrees, shape ``(n_az*n_el, 2)``."""
    az = np.linspace(azimuth[0], azimuth[1], n_azimuth)
    el = np.linspace(elevation[0], elevation[1], n_elevation)
    aa, ee = np.meshgrid(az, el, indexing="ij")
    return np.column_stack([aa.ravel(), ee.ravel()])


def scene_with_direction(scene: RoomScene, azimuth, elevation, distance) -> RoomScene:
    src = direction_to_position(scene.array_center, azimuth, elevation, distance)
    return replace(scene, source_position=tuple(src))


def anechoic_rirs(scene: RoomScene, early_seconds: float = 0.05) -> np.ndarray:
    """Per-microphone RIRs truncated before the first reflection, ``(n_mics, length)``.

    Only the first ``early_seconds`` after the farthest direct path are
    simulated, which is all the truncation keeps.
    """
    dist = max(np.linalg.norm(np.subtract(scene.source_position, m)) for m in scene.mic_positions)
    short = replace(scene, rir_seconds=dist / scene.speed_of_sound + early_seconds)
    out = []
    for m in range(len(scene.mic_positions)):
        rir, info = simulate_rir(short, m)
        out.append(truncate_anechoic(rir, info))
    return np.array(out)


def build_training_set(scene: RoomScene, grid, distance: float, method: str = "proposed",
                       probe_seconds: float = 1.0, seed: int = 0,
                       cfg: StftConfig | None = None, est_cfg=None, pairs=DEFAULT_PAIRS,
                       jobs: int = 1, return_rirs: bool = False):
    """Features of noise-free white-noise renders through anechoic-truncated RIRs.

    ``scene`` fixes the room and array; each grid direction (azimuth,
    elevation in degrees) places the source at ``distance`` from the array
    centre. Unless ``est_cfg`` fixes Q or T60, Q is the lossless CTF length
    of the truncated responses. Returns a :class:`~dprtf.regression.TrainingSet`, plus the
    truncated RIRs ``(n_directions, n_mics, length)`` with ``return_rirs``.
    """
    from .pipeline import extract_feature, spectrograms
    from .regression import TrainingSet

    grid = np.atleast_2d(np.asarray(grid, float))
    if grid.size == 0:
        raise ValueError("empty direction grid")
    cfg = cfg or default_config(scene.fs)
    n_probe = int(round(probe_seconds * scene.fs))

    def one(i):
        sc = scene_with_direction(scene, grid[i, 0], grid[i, 1], distance)
        rirs = anechoic_rirs(sc)
        probe = np.random.default_rng([seed, i]).standard_normal(n_probe)
        clean = np.array([fftconvolve(probe, h)[:n_probe] for h in rirs])
        ec = est_cfg
        if ec is None or (ec.q is None and ec.t60 is None):
            # an anechoic response is short: use its lossless CTF length
            support = int(np.max(np.nonzero(np.any(rirs != 0, axis=0))[0])) + 1
            ec = replace(ec or EstimatorConfig(), q=lossless_length(support, cfg))
        feat = extract_feature(method, spectrograms(clean, cfg), pairs, None, ec)
        return feat, rirs

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one, range(len(grid))))
    else:
        results = [one(i) for i in range(len(grid))]
    data = TrainingSet.from_features([f for f, _ in results], grid)
    if not return_rirs:
        return data
    length = max(r.shape[1] for _, r in results)
    rirs = np.zeros((len(grid), len(scene.mic_positions), length))
    for i, (_, r) in enumerate(results):
        rirs[i, :, :r.shape[1]] = r
    return data, rirs
