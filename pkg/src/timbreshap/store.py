"""Embedding corpus interchange: JSON manifest plus float32 NPY arrays.

A corpus is a directory holding one manifest and, per utterance, a content
matrix file of shape (n_frames, d_c) and a speaker vector file of shape
(d_s,). Array paths in the manifest are relative to the manifest's parent
directory. All arrays are float32, C-order, NPY format.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np


class CorpusError(Exception):
    """A manifest or one of its referenced arrays failed validation."""


@dataclass
class UtteranceEntry:
    utterance_id: str
    speaker_label: int
    content_path: str
    speaker_path: str


@dataclass
class Manifest:
    corpus_name: str
    model_id: str
    layer: int
    d_c: int
    d_s: int
    utterances: list[UtteranceEntry]
    root: Path
    filter_block: dict | None = None

    @property
    def n_speakers(self) -> int:
        return max(u.speaker_label for u in self.utterances) + 1

    @property
    def n_utterances(self) -> int:
        return len(self.utterances)

    def content_file(self, entry: UtteranceEntry) -> Path:
        return self.root / entry.content_path

    def speaker_file(self, entry: UtteranceEntry) -> Path:
        return self.root / entry.speaker_path


@dataclass
class UtteranceRecord:
    utterance_id: str
    speaker_label: int
    content: np.ndarray  # (n_frames, d_c) float32
    speaker: np.ndarray  # (d_s,) float32


@dataclass
class FusedDataset:
    """Per-utterance rows of [speaker dims | frame-averaged content dims].

    Speaker dims occupy columns [0, d_s) and content dims [d_s, d_s + d_c);
    every downstream segment split relies on this layout.
    """

    features: np.ndarray  # (n_samples, d_s + d_c) float64
    labels: np.ndarray  # (n_samples,) int64
    d_s: int
    d_c: int

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


def save_array(path: Path | str, array: np.ndarray) -> None:
    """Write an array as float32 C-order NPY."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.ascontiguousarray(array, dtype=np.float32))


def load_array(path: Path | str) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"missing array file: {path}")
    arr = np.load(path)
    if not np.isfinite(arr).all():
        raise CorpusError(f"non-finite values in array file: {path}")
    return arr


def _array_header(path: Path) -> tuple[tuple[int, ...], np.dtype]:
    # mmap reads only the header, so validation stays cheap for big corpora
    arr = np.load(path, mmap_mode="r")
    return tuple(arr.shape), arr.dtype


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise CorpusError(message)


def load_manifest(path: Path | str) -> Manifest:
    """Parse and fully validate a corpus manifest.

    Checks field presence and types, utterance id uniqueness, contiguous
    speaker-label coverage, and that every referenced array file exists
    with the dtype and dimensions the manifest declares.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CorpusError(f"cannot parse manifest {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise CorpusError(f"cannot parse manifest {path}: top level is not an object")

    for key in ("corpus_name", "model_id", "layer", "d_c", "d_s", "utterances"):
        _require(key in raw, f"manifest missing field '{key}'")
    d_c, d_s = raw["d_c"], raw["d_s"]
    _require(isinstance(d_c, int) and d_c > 0, "d_c must be a positive integer")
    _require(isinstance(d_s, int) and d_s > 0, "d_s must be a positive integer")
    rows = raw["utterances"]
    _require(isinstance(rows, list) and len(rows) > 0, "manifest has no utterances")

    entries: list[UtteranceEntry] = []
    seen_ids: set[str] = set()
    for row in rows:
        for key in ("utterance_id", "speaker_label", "content_path", "speaker_path"):
            _require(isinstance(row, dict) and key in row, f"utterance missing field '{key}'")
        uid = row["utterance_id"]
        label = row["speaker_label"]
        _require(uid not in seen_ids, f"duplicate utterance_id '{uid}'")
        _require(isinstance(label, int) and label >= 0, f"bad speaker_label for '{uid}'")
        seen_ids.add(uid)
        entries.append(UtteranceEntry(uid, label, row["content_path"], row["speaker_path"]))

    labels = {e.speaker_label for e in entries}
    n_speakers = max(labels) + 1
    missing = sorted(set(range(n_speakers)) - labels)
    _require(not missing, f"speaker labels {missing} in [0, {n_speakers}) never appear")

    manifest = Manifest(
        corpus_name=raw["corpus_name"],
        model_id=raw["model_id"],
        layer=raw["layer"],
        d_c=d_c,
        d_s=d_s,
        utterances=entries,
        root=path.parent,
        filter_block=raw.get("filter"),
    )

    for entry in entries:
        for file, want_shape, kind in (
            (manifest.content_file(entry), (None, d_c), "content"),
            (manifest.speaker_file(entry), (d_s,), "speaker"),
        ):
            if not file.is_file():
                raise CorpusError(f"missing array file: {file}")
            shape, dtype = _array_header(file)
            if dtype != np.float32:
                raise CorpusError(f"dtype mismatch in {file}: expected float32, found {dtype}")
            if kind == "content":
                ok = len(shape) == 2 and shape[0] >= 1 and shape[1] == d_c
            else:
                ok = shape == want_shape
            if not ok:
                raise CorpusError(
                    f"dimension mismatch in {file}: manifest declares "
                    f"{kind} dims for d_c={d_c}, d_s={d_s}, file holds shape {shape}"
                )

    return manifest


def write_manifest(manifest: Manifest, path: Path | str) -> None:
    """Serialize a manifest back to its JSON document form."""
    doc: dict = {
        "corpus_name": manifest.corpus_name,
        "model_id": manifest.model_id,
        "layer": manifest.layer,
        "d_c": manifest.d_c,
        "d_s": manifest.d_s,
        "utterances": [
            {
                "utterance_id": u.utterance_id,
                "speaker_label": u.speaker_label,
                "content_path": u.content_path,
                "speaker_path": u.speaker_path,
            }
            for u in manifest.utterances
        ],
    }
    if manifest.filter_block is not None:
        doc["filter"] = manifest.filter_block
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_record(manifest: Manifest, entry: UtteranceEntry) -> UtteranceRecord:
    content = load_array(manifest.content_file(entry))
    speaker = load_array(manifest.speaker_file(entry))
    if content.ndim != 2 or content.shape[0] < 1 or content.shape[1] != manifest.d_c:
        raise CorpusError(f"dimension mismatch in {manifest.content_file(entry)}")
    if speaker.shape != (manifest.d_s,):
        raise CorpusError(f"dimension mismatch in {manifest.speaker_file(entry)}")
    return UtteranceRecord(entry.utterance_id, entry.speaker_label, content, speaker)


def iter_records(manifest: Manifest) -> Iterator[UtteranceRecord]:
    for entry in manifest.utterances:
        yield load_record(manifest, entry)


def frame_average(content: np.ndarray) -> np.ndarray:
    """Collapse a (n_frames, d_c) matrix to its per-dimension mean."""
    content = np.asarray(content)
    if content.ndim != 2:
        raise ValueError(f"content must be 2-D, got shape {content.shape}")
    if content.shape[0] == 0:
        raise ValueError("cannot frame-average an empty (0-frame) matrix")
    return content.mean(axis=0, dtype=np.float64)


def fuse_sample(speaker: np.ndarray, content_mean: np.ndarray) -> np.ndarray:
    """Concatenate speaker dims then content dims into one feature row."""
    speaker = np.asarray(speaker, dtype=np.float64)
    content_mean = np.asarray(content_mean, dtype=np.float64)
    if speaker.ndim != 1 or speaker.size == 0:
        raise ValueError(f"speaker must be a nonempty vector, got shape {speaker.shape}")
    if content_mean.ndim != 1 or content_mean.size == 0:
        raise ValueError(f"content mean must be a nonempty vector, got shape {content_mean.shape}")
    return np.concatenate([speaker, content_mean])


def build_fused_dataset(manifest: Manifest) -> FusedDataset:
    """One feature row per utterance, in manifest order."""
    rows = np.empty((manifest.n_utterances, manifest.d_s + manifest.d_c), dtype=np.float64)
    labels = np.empty(manifest.n_utterances, dtype=np.int64)
    for i, record in enumerate(iter_records(manifest)):
        rows[i] = fuse_sample(record.speaker, frame_average(record.content))
        labels[i] = record.speaker_label
    return FusedDataset(features=rows, labels=labels, d_s=manifest.d_s, d_c=manifest.d_c)
