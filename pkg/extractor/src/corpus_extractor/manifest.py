"""Corpus assembly: label inference, array placement, manifest JSON."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .audio import preprocess_audio
from .content import extract_content, load_content_model
from .models import ExtractionSpec
from .speaker import SPEAKER_DIM, extract_speaker


def collect_wavs(wav_dir: Path | str) -> list[Path]:
    wavs = sorted(Path(wav_dir).rglob("*.wav"))
    if not wavs:
        raise ValueError(f"no .wav files under {wav_dir}")
    return wavs


def speaker_names(wav_paths: list[Path], mapping_csv: Path | None = None) -> list[str]:
    """Speaker name per wav: parent directory name, or a CSV override.

    The CSV maps utterance id (file stem) to speaker name in two columns.
    """
    if mapping_csv is None:
        return [p.parent.name for p in wav_paths]
    table = {}
    with open(mapping_csv, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) >= 2:
                table[row[0]] = row[1]
    missing = [p.stem for p in wav_paths if p.stem not in table]
    if missing:
        raise ValueError(f"speaker map lacks entries for: {', '.join(missing[:5])}")
    return [table[p.stem] for p in wav_paths]


def labels_from_names(names: list[str]) -> list[int]:
    ordering = {name: i for i, name in enumerate(sorted(set(names)))}
    return [ordering[name] for name in names]


def build_corpus(
    spec: ExtractionSpec,
    corpus_name: str = "extracted",
    speaker_backend: str = "spectral",
    mapping_csv: Path | None = None,
    random_init: bool = False,
    preprocess: bool = True,
) -> Path:
    """Run the full extraction and write a validated corpus directory.

    Returns the manifest path. Layout matches the timbreshap interchange
    format exactly: content/<id>.npy, speaker/<id>.npy, manifest.json.
    """
    out_dir = Path(spec.out_dir)
    wavs = collect_wavs(spec.wav_dir)
    names = speaker_names(wavs, mapping_csv)
    labels = labels_from_names(names)

    if preprocess:
        ready = [
            preprocess_audio(wav, out_dir / "wav16k" / name / wav.name)
            for wav, name in zip(wavs, names)
        ]
    else:
        ready = wavs

    entry = spec.entry()
    model = load_content_model(spec, random_init=random_init)
    content_files = extract_content(spec, ready, model=model)

    speaker_dir = out_dir / "speaker"
    speaker_dir.mkdir(parents=True, exist_ok=True)
    embeddings = extract_speaker(ready, backend=speaker_backend)
    utterances = []
    for wav, label, content_file, embedding in zip(wavs, labels, content_files, embeddings):
        speaker_file = speaker_dir / (wav.stem + ".npy")
        np.save(speaker_file, np.ascontiguousarray(embedding, dtype=np.float32))
        utterances.append(
            {
                "utterance_id": wav.stem,
                "speaker_label": label,
                "content_path": str(content_file.relative_to(out_dir)),
                "speaker_path": str(speaker_file.relative_to(out_dir)),
            }
        )

    doc = {
        "corpus_name": corpus_name,
        "model_id": spec.model_id,
        "layer": spec.resolved_layer(),
        "d_c": entry.hidden_dim,
        "d_s": SPEAKER_DIM,
        "utterances": utterances,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path
