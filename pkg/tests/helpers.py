"""Shared oracles and builders for the test suite."""

import numpy as np

from dprtf.stft import StftConfig


def rect_config(n=16, hop=None, fs=16000):
    """Rectangular analysis and unit synthesis windows (COLA only at hop == N)."""
    hop = n if hop is None else hop
    return StftConfig(fs, n, hop, np.ones(n), np.ones(n))


def brute_zeta(wa, ws, k, n):
    """Term-by-term ``exp(2j pi k n / N) * sum_m wa(m) ws(n + m)``."""
    size = len(wa)
    acc = 0.0
    for m in range(size):
        if 0 <= n + m < size:
            acc += wa[m] * ws[n + m]
    return np.exp(2j * np.pi * k * n / size) * acc


def brute_nu(wa, ws, t):
    """Direct double-sum ``sum_m wa(m) ws(m - t)``."""
    size = len(wa)
    return sum(wa[m] * ws[m - t] for m in range(size) if 0 <= m - t < size)


def brute_ctf(rir, cfg, q, bins):
    """``(rir * zeta_k)(p' L)`` by explicit summation over the response."""
    out = np.zeros((q, len(bins)), complex)
    wa, ws = cfg.analysis_window, cfg.synthesis_window
    size = cfg.frame_len
    for p in range(q):
        n0 = p * cfg.hop
        for t, a in enumerate(rir):
            lag = n0 - t
            if a == 0 or not 1 - size <= lag <= size - 1:
                continue
            for j, k in enumerate(bins):
                out[p, j] += a * brute_zeta(wa, ws, k, lag)
    return out


def crossband_kernels(rir, cfg, k, q, first=0):
    """Crossband filters ``h[p', k']`` into target bin ``k`` over all ``N`` source bins.

    ``phi_{k,k'}(n) = exp(2j pi k' n / N) sum_m wa(m) ws(n+m) exp(-2j pi m (k-k') / N)``
    and ``h[p', k'] = (rir * phi_{k,k'})(p' L)`` for ``p' = first .. first+q-1``.
    """
    size, hop = cfg.frame_len, cfg.hop
    wa, ws = cfg.analysis_window, cfg.synthesis_window
    lags = np.arange(1 - size, size)
    kp = np.arange(size)
    m = np.arange(size)
    phi = np.zeros((lags.size, size), complex)
    for i, n in enumerate(lags):
        valid = (n + m >= 0) & (n + m < size)
        prod = np.where(valid, wa * ws[np.clip(n + m, 0, size - 1)], 0.0)
        # sum_m prod(m) exp(-2j pi m (k - k') / N) for every k'
        inner = np.array([np.sum(prod * np.exp(-2j * np.pi * m * (k - kk) / size)) for kk in kp])
        phi[i] = np.exp(2j * np.pi * kp * n / size) * inner
    h = np.zeros((q, size), complex)
    for i in range(q):
        for t, a in enumerate(rir):
            lag = (first + i) * hop - t
            if 1 - size <= lag <= size - 1:
                h[i] += a * phi[lag + size - 1]
    return h


def subtraction_errors(snr_db, seeds, t60=0.5, gamma=1.8, d=25):
    """Relative error of noise-subtracted ``phi_yy`` against the clean-speech oracle
    on the frames selected by the power test, pooled over ``seeds``."""
    import math

    from dprtf.pipeline import spectrograms
    from dprtf.psd import noise_profile, psd_statistics, select_frames, spectral_subtract
    from dprtf.sim import NoiseSpec, RoomScene, render_recording, speech_like
    from dprtf.stft import default_config

    cfg = default_config()
    bins = np.arange(5, 64)
    q = math.ceil(0.25 * t60 * cfg.sample_rate / cfg.hop)
    out = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        scene = RoomScene.with_head((8.0, 7.0, 3.0), (4.0, 3.5, 1.3), 30.0, 0.0, 2.0, t60=t60)
        rec = render_recording(scene, speech_like(3 * 16000, 16000, rng),
                               NoiseSpec("fan", snr_db), seed=seed)
        noisy = spectrograms(rec.signals, cfg)
        clean = spectrograms(rec.clean, cfg)
        noise = spectrograms(rec.noise_only, cfg)
        prof = noise_profile(noise[0], noise[2], q)
        st = psd_statistics(noisy[0], noisy[2], q, d, bins)
        ref = psd_statistics(clean[0], clean[2], q, d, bins)
        sel, _ = select_frames(st.phi_yy, prof.phi_vv[bins], gamma)
        sub = spectral_subtract(st, prof)
        out.append(np.abs(sub.phi_yy[sel] - ref.phi_yy[sel]) / np.abs(ref.phi_yy[sel]))
    return np.concatenate(out)


def noise_only_selection_rates(seed=0, seconds=10.0, gamma=1.8, d=25, kind="fan"):
    """Per-bin fraction of frames passing the power test on a noise-only signal,
    with the profile estimated from a separate segment of the same process."""
    from dprtf.pipeline import spectrograms
    from dprtf.psd import noise_profile, psd_statistics, select_frames
    from dprtf.sim import NoiseSpec, make_noise
    from dprtf.stft import default_config

    cfg = default_config()
    bins = np.arange(5, 64)
    n = int(seconds * cfg.sample_rate)
    sig = make_noise(NoiseSpec(kind), 2, 2 * n, cfg.sample_rate, np.random.default_rng(seed))
    test, ref = spectrograms(sig[:, :n], cfg), spectrograms(sig[:, n:], cfg)
    prof = noise_profile(ref[0], ref[1], 1)
    st = psd_statistics(test[0], test[1], 1, d, bins)
    sel, counts = select_frames(st.phi_yy, prof.phi_vv[bins], gamma)
    return counts / sel.shape[0]


def ctf_world(q, n_frames=600, seed=0, cfg=None):
    """Noise-free channels ``x = s * A``, ``y = s * B`` built with the CTF forward model.

    Returns the two spectrograms and the true ``A``/``B`` coefficient arrays.
    """
    from dprtf.ctf import CtfFilter, ctf_convolve
    from dprtf.stft import Spectrogram, default_config

    cfg = cfg or default_config()
    r = np.random.default_rng(seed)
    shape = (n_frames, cfg.n_bins)
    s = Spectrogram(r.standard_normal(shape) + 1j * r.standard_normal(shape), cfg)
    decay = np.exp(-np.arange(q) / 2.0)[:, None]
    a = (r.standard_normal((q, cfg.n_bins)) + 1j * r.standard_normal((q, cfg.n_bins))) * decay
    b = (r.standard_normal((q, cfg.n_bins)) + 1j * r.standard_normal((q, cfg.n_bins))) * decay
    a[0] += 2.0
    x = ctf_convolve(s, CtfFilter(a, cfg))
    y = ctf_convolve(s, CtfFilter(b, cfg))
    return x, y, a, b


def true_g(a, b, k):
    """``[b_0..b_{Q-1}, -a_1..-a_{Q-1}] / a_0`` of bin ``k``."""
    return np.concatenate([b[:, k], -a[1:, k]]) / a[0, k]


def free_field_scene(azimuth=0.0, elevation=0.0, distance=2.0):
    """Head array in a large anechoic room."""
    from dprtf.sim import RoomScene
    return RoomScene.with_head((20.0, 20.0, 10.0), (10.0, 10.0, 5.0), azimuth, elevation,
                               distance, t60=None, absorption=1.0)


def stack_rirs(rirs):
    """Zero-pad a list of ``(mics, length)`` arrays to a common length."""
    length = max(r.shape[1] for r in rirs)
    out = np.zeros((len(rirs), rirs[0].shape[0], length))
    for i, r in enumerate(rirs):
        out[i, :, :r.shape[1]] = r
    return out


def diffuse_noise(mics, n, fs, rng, n_waves=300, c=343.0):
    """Spherically isotropic field: uncorrelated plane waves from uniform directions."""
    u = rng.standard_normal((n_waves, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    f = np.fft.rfftfreq(n, 1 / fs)
    acc = np.zeros((len(mics), f.size), complex)
    for d in u:
        spec = np.fft.rfft(rng.standard_normal(n))
        for m, pos in enumerate(mics):
            acc[m] += spec * np.exp(2j * np.pi * f * (pos @ d) / c)
    return np.fft.irfft(acc, n)
