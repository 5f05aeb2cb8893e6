"""Synthetic embedding corpora with a controllable speaker-leakage knob.

Each speaker owns a latent factor; each utterance owns a content factor.
Content frames mix both through fixed random linear maps, with the speaker
contribution scaled by ``leakage_lambda``, so the ground-truth amount of
speaker information inside the content embeddings is known by construction.
Speaker embeddings are noise-free, which keeps the perfect-accuracy
classifier precondition satisfiable on every generated corpus.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import derive_rng
from .store import Manifest, UtteranceEntry, save_array, write_manifest


@dataclass
class SynthConfig:
    n_speakers: int = 20
    utterances_per_speaker: int = 40
    n_frames: int = 20
    d_c: int = 64
    d_s: int = 16
    d_content_factor: int = 8
    d_speaker_factor: int = 8
    leakage_lambda: float = 1.0
    noise_sigma: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.n_speakers < 2:
            raise ValueError("n_speakers must be >= 2")
        if self.utterances_per_speaker < 1:
            raise ValueError("utterances_per_speaker must be >= 1")
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if min(self.d_c, self.d_s, self.d_content_factor, self.d_speaker_factor) < 1:
            raise ValueError("dimensions must be positive")
        if self.d_content_factor > self.d_c:
            raise ValueError("d_content_factor must be <= d_c")
        if self.d_speaker_factor > min(self.d_s, self.d_c):
            raise ValueError("d_speaker_factor must be <= min(d_s, d_c)")
        if not (0.0 <= self.leakage_lambda <= 1.0):
            raise ValueError("leakage_lambda must be in [0, 1]")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")


@dataclass
class SynthTruth:
    """Generative factors kept for probing filtered corpora."""

    content_factors: np.ndarray  # (n_utterances, d_content_factor)
    speaker_factors: np.ndarray  # (n_speakers, d_speaker_factor)
    labels: np.ndarray  # (n_utterances,)


GROUND_TRUTH_FILE = "ground_truth.npz"


def generate_synthetic_corpus(config: SynthConfig, out_dir: Path | str) -> tuple[Manifest, SynthTruth]:
    """Write a corpus directory (manifest, arrays, ground-truth sidecar).

    Fully deterministic for a given config: the single seeded stream draws
    the mixing maps, then speaker factors, then per-utterance factors and
    frame jitter in speaker-major order.
    """
    config.validate()
    out_dir = Path(out_dir)
    rng = derive_rng(config.seed)

    f_c, f_s = config.d_content_factor, config.d_speaker_factor
    content_map = rng.standard_normal((config.d_c, f_c)) / np.sqrt(f_c)
    leak_map = rng.standard_normal((config.d_c, f_s)) / np.sqrt(f_s)
    speaker_map = rng.standard_normal((config.d_s, f_s)) / np.sqrt(f_s)
    speaker_factors = rng.standard_normal((config.n_speakers, f_s))

    entries: list[UtteranceEntry] = []
    content_factors = []
    labels = []
    for s in range(config.n_speakers):
        speaker_emb = speaker_map @ speaker_factors[s]
        leak = config.leakage_lambda * (leak_map @ speaker_factors[s])
        for u in range(config.utterances_per_speaker):
            z_c = rng.standard_normal(f_c)
            jitter = rng.standard_normal((config.n_frames, config.d_c)) * config.noise_sigma
            frames = (content_map @ z_c + leak)[None, :] + jitter

            uid = f"spk{s:03d}_utt{u:03d}"
            content_path = f"content/{uid}.npy"
            speaker_path = f"speaker/{uid}.npy"
            save_array(out_dir / content_path, frames)
            save_array(out_dir / speaker_path, speaker_emb)
            entries.append(UtteranceEntry(uid, s, content_path, speaker_path))
            content_factors.append(z_c)
            labels.append(s)

    manifest = Manifest(
        corpus_name=f"synthetic-lambda{config.leakage_lambda:g}-seed{config.seed}",
        model_id="synthetic",
        layer=0,
        d_c=config.d_c,
        d_s=config.d_s,
        utterances=entries,
        root=out_dir,
    )
    write_manifest(manifest, out_dir / "manifest.json")

    truth = SynthTruth(
        content_factors=np.array(content_factors),
        speaker_factors=speaker_factors,
        labels=np.array(labels, dtype=np.int64),
    )
    np.savez(
        out_dir / GROUND_TRUTH_FILE,
        content_factors=truth.content_factors,
        speaker_factors=truth.speaker_factors,
        labels=truth.labels,
    )
    return manifest, truth


def load_ground_truth(corpus_dir: Path | str) -> SynthTruth:
    data = np.load(Path(corpus_dir) / GROUND_TRUTH_FILE)
    return SynthTruth(
        content_factors=data["content_factors"],
        speaker_factors=data["speaker_factors"],
        labels=data["labels"],
    )
