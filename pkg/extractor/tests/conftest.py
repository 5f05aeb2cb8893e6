import wave
from pathlib import Path

import numpy as np
import pytest

# three synthetic "voices": distinct fundamentals and spectral envelopes
VOICES = {
    "p001": {"f0": 120.0, "decay": 6.0},
    "p002": {"f0": 205.0, "decay": 3.5},
    "p003": {"f0": 165.0, "decay": 9.0},
}
UTTS_PER_VOICE = 2


def synth_voice(f0: float, decay: float, seconds: float, rate: int, seed: int) -> np.ndarray:
    """Harmonic stack with a per-voice spectral envelope plus light noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * rate)) / rate
    vibrato = 1.0 + 0.01 * np.sin(2 * np.pi * rng.uniform(4, 7) * t)
    signal = np.zeros_like(t)
    for k in range(1, 12):
        amp = np.exp(-k / decay)
        phase = rng.uniform(0, 2 * np.pi)
        signal += amp * np.sin(2 * np.pi * k * f0 * vibrato * t + phase)
    signal += 0.02 * rng.standard_normal(len(t))
    return 0.8 * signal / np.max(np.abs(signal))


def write_pcm_wav(path: Path, samples: np.ndarray, rate: int, channels: int = 1) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if samples.ndim == 1 and channels > 1:
        samples = np.tile(samples[:, None], (1, channels))
    pcm = np.round(np.clip(samples, -1, 1) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(2)
        fh.setframerate(rate)
        fh.writeframes(pcm.tobytes())


@pytest.fixture(scope="session")
def wav_tree(tmp_path_factory) -> Path:
    """VCTK-style layout: one directory per speaker, 16 kHz mono inputs."""
    root = tmp_path_factory.mktemp("wavs")
    seed = 0
    for name, voice in VOICES.items():
        for u in range(UTTS_PER_VOICE):
            samples = synth_voice(voice["f0"], voice["decay"], 0.5, 16000, seed)
            write_pcm_wav(root / name / f"{name}_{u:03d}.wav", samples, 16000)
            seed += 1
    return root


@pytest.fixture(scope="session")
def stereo_48k_wav(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("raw")
    samples = synth_voice(150.0, 5.0, 0.4, 48000, seed=99)
    path = root / "stereo.wav"
    write_pcm_wav(path, samples, 48000, channels=2)
    return path
