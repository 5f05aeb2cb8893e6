"""WAV preprocessing: decode, downmix, resample, peak-normalize.

Target format is 16 kHz, 16-bit, mono, with peak energy at -3 dBFS.
Only PCM WAV input is supported (8/16/24/32-bit); anything else should be
converted before extraction.
"""
from __future__ import annotations

import warnings
import wave
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

TARGET_RATE = 16000
PEAK_DBFS = -3.0


def read_wav(path: Path | str) -> tuple[np.ndarray, int]:
    """Decode a PCM WAV file to float64 samples in [-1, 1], shape (n, channels)."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as fh:
            n_channels = fh.getnchannels()
            sampwidth = fh.getsampwidth()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise ValueError(f"cannot decode {path}: {exc}") from exc

    if sampwidth == 1:
        data = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
        data = (data - 128.0) / 128.0
    elif sampwidth == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif sampwidth == 3:
        b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3)
        as_int = (
            b[:, 0].astype(np.int32)
            | (b[:, 1].astype(np.int32) << 8)
            | (b[:, 2].astype(np.int32) << 16)
        )
        as_int = np.where(as_int >= 1 << 23, as_int - (1 << 24), as_int)
        data = as_int.astype(np.float64) / float(1 << 23)
    elif sampwidth == 4:
        data = np.frombuffer(raw, dtype="<i4").astype(np.float64) / float(1 << 31)
    else:
        raise ValueError(f"cannot decode {path}: unsupported sample width {sampwidth}")

    return data.reshape(-1, n_channels), rate


def write_wav_mono16(path: Path | str, samples: np.ndarray, rate: int = TARGET_RATE) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(pcm.tobytes())


def preprocess_audio(
    wav_in: Path | str,
    wav_out: Path | str,
    target_rate: int = TARGET_RATE,
    peak_dbfs: float = PEAK_DBFS,
) -> Path:
    """Produce the extraction-ready twin of a WAV file.

    Downmixes to mono, resamples to ``target_rate``, normalizes the peak to
    ``peak_dbfs``, and writes 16-bit PCM. Silent input is passed through
    unscaled with a warning (peak gain is undefined).
    """
    data, rate = read_wav(wav_in)
    mono = data.mean(axis=1)
    if rate != target_rate:
        div = gcd(target_rate, rate)
        mono = resample_poly(mono, target_rate // div, rate // div)

    peak = float(np.max(np.abs(mono))) if mono.size else 0.0
    if peak <= 1e-8:
        warnings.warn(f"{wav_in}: silent audio, skipping peak normalization")
    else:
        mono = mono * (10.0 ** (peak_dbfs / 20.0) / peak)

    write_wav_mono16(wav_out, mono, target_rate)
    return Path(wav_out)
