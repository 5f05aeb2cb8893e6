"""Speaker-embedding extraction: pretrained verification model or spectral fallback.

The "ecapa" backend wraps a pretrained speaker-verification network
(optional dependency, downloads weights on first use). The "spectral"
backend is self-contained and deterministic: log-mel filterbank statistics
pushed through a fixed random projection to 192 dims. It is far weaker than
a verification model but preserves the contract (fixed width, same-speaker
similarity above cross-speaker) for offline use and testing.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .audio import TARGET_RATE, read_wav

SPEAKER_DIM = 192

_FRAME = 400  # 25 ms at 16 kHz
_HOP = 160  # 10 ms
_N_MELS = 48
_PROJECTION_SEED = 0x5BEC


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def _mel_filterbank(n_fft: int, rate: int, n_mels: int) -> np.ndarray:
    edges = _mel_to_hz(np.linspace(_hz_to_mel(0.0), _hz_to_mel(rate / 2), n_mels + 2))
    bins = np.floor((n_fft + 1) * edges / rate).astype(int)
    bank = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(1, n_mels + 1):
        lo, center, hi = bins[m - 1], bins[m], bins[m + 1]
        for k in range(lo, center):
            if center > lo:
                bank[m - 1, k] = (k - lo) / (center - lo)
        for k in range(center, hi):
            if hi > center:
                bank[m - 1, k] = (hi - k) / (hi - center)
    return bank


def spectral_embedding(samples: np.ndarray, rate: int = TARGET_RATE) -> np.ndarray:
    """Deterministic 192-dim voice signature from log-mel statistics."""
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < _FRAME:
        samples = np.pad(samples, (0, _FRAME - len(samples)))
    n_frames = 1 + (len(samples) - _FRAME) // _HOP
    idx = np.arange(_FRAME)[None, :] + _HOP * np.arange(n_frames)[:, None]
    frames = samples[idx] * np.hanning(_FRAME)[None, :]
    power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
    bank = _mel_filterbank(_FRAME, rate, _N_MELS)
    logmel = np.log(power @ bank.T + 1e-10)
    stats = np.concatenate([logmel.mean(axis=0), logmel.std(axis=0)])

    rng = np.random.default_rng(_PROJECTION_SEED)
    projection = rng.standard_normal((SPEAKER_DIM, stats.size)) / np.sqrt(stats.size)
    embedding = projection @ stats
    return (embedding / np.linalg.norm(embedding)).astype(np.float32)


def _ecapa_embeddings(wav_paths: list[Path]) -> np.ndarray:
    try:
        import torch
        from speechbrain.inference.speaker import EncoderClassifier
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise RuntimeError(
            "the 'ecapa' backend needs speechbrain; install corpus-extractor[ecapa] "
            "or use --speaker-backend spectral"
        ) from exc
    classifier = EncoderClassifier.from_hparams(source="speechbrain/spkrec-ecapa-voxceleb")
    rows = []
    for wav in wav_paths:
        data, rate = read_wav(wav)
        signal = torch.from_numpy(data.mean(axis=1).astype(np.float32))[None, :]
        rows.append(classifier.encode_batch(signal).squeeze().cpu().numpy())
    return np.stack(rows).astype(np.float32)


def extract_speaker(wav_paths: list[Path], backend: str = "spectral") -> np.ndarray:
    """Embedding matrix of shape (n_wavs, 192), row order following input order."""
    wav_paths = [Path(p) for p in wav_paths]
    if backend == "ecapa":
        embeddings = _ecapa_embeddings(wav_paths)
    elif backend == "spectral":
        rows = []
        for wav in wav_paths:
            data, rate = read_wav(wav)
            rows.append(spectral_embedding(data.mean(axis=1), rate))
        embeddings = np.stack(rows)
    else:
        raise ValueError(f"unknown speaker backend '{backend}'")
    if embeddings.shape != (len(wav_paths), SPEAKER_DIM):
        raise RuntimeError(f"speaker backend produced shape {embeddings.shape}")
    return embeddings
