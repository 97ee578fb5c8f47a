"""WAV file input/output for 16-bit PCM and 32-bit float data."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

__all__ = ["read_wav", "write_wav", "SampleRateError"]


class SampleRateError(ValueError):
    pass


def read_wav(path, expected_rate: float | None = None) -> tuple[np.ndarray, float]:
    """Read a WAV file as float64 in ``[-1, 1]``, shape ``(n,)`` or ``(n, channels)``."""
    fs, data = wavfile.read(path)
    if expected_rate is not None and fs != expected_rate:
        raise SampleRateError(f"{path}: sample rate {fs} Hz, expected {expected_rate:g} Hz")
    if data.dtype == np.int16:
        out = data.astype(float) / 32768.0
    elif data.dtype == np.int32:
        out = data.astype(float) / 2147483648.0
    elif data.dtype == np.uint8:
        out = (data.astype(float) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.floating):
        out = data.astype(float)
    else:
        raise ValueError(f"{path}: unsupported sample format {data.dtype}")
    return out, float(fs)


def write_wav(path, data, fs: float, fmt: str = "float32") -> None:
    """Write ``(n,)`` or ``(n, channels)`` samples as ``float32`` or ``int16``."""
    data = np.asarray(data, float)
    if fmt == "float32":
        out = data.astype(np.float32)
    elif fmt == "int16":
        out = np.round(np.clip(data, -1.0, 32767 / 32768) * 32768).astype(np.int16)
    else:
        raise ValueError(f"unknown WAV sample format {fmt!r}")
    wavfile.write(path, int(fs), out)
