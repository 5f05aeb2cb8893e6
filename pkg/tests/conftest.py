import json
from pathlib import Path

import numpy as np
import pytest


def write_corpus(
    root: Path,
    records: list[dict],
    d_c: int,
    d_s: int,
    corpus_name: str = "test-corpus",
) -> Path:
    """Write a corpus directory from records of {id, label, content, speaker}."""
    utterances = []
    for rec in records:
        uid = rec["id"]
        content_path = f"content/{uid}.npy"
        speaker_path = f"speaker/{uid}.npy"
        for rel, arr in ((content_path, rec["content"]), (speaker_path, rec["speaker"])):
            file = root / rel
            file.parent.mkdir(parents=True, exist_ok=True)
            np.save(file, np.ascontiguousarray(arr, dtype=np.float32))
        utterances.append(
            {
                "utterance_id": uid,
                "speaker_label": rec["label"],
                "content_path": content_path,
                "speaker_path": speaker_path,
            }
        )
    doc = {
        "corpus_name": corpus_name,
        "model_id": "test",
        "layer": 0,
        "d_c": d_c,
        "d_s": d_s,
        "utterances": utterances,
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return manifest_path


def random_corpus_records(
    rng: np.random.Generator, n_speakers: int, per_speaker: int, n_frames: int, d_c: int, d_s: int
) -> list[dict]:
    records = []
    for s in range(n_speakers):
        speaker = rng.standard_normal(d_s)
        for u in range(per_speaker):
            records.append(
                {
                    "id": f"s{s:02d}u{u:02d}",
                    "label": s,
                    "content": rng.standard_normal((n_frames, d_c)),
                    "speaker": speaker,
                }
            )
    return records


@pytest.fixture
def tiny_manifest(tmp_path):
    """Two-speaker, four-utterance corpus with d_s=2, d_c=3."""
    rng = np.random.default_rng(7)
    records = random_corpus_records(rng, n_speakers=2, per_speaker=2, n_frames=5, d_c=3, d_s=2)
    return write_corpus(tmp_path, records, d_c=3, d_s=2)


ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance.py" not in str(report.nodeid):
        return
    name = report.nodeid.split("::")[-1]
    ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in ACCEPTANCE_RESULTS.items():
        terminalreporter.write_line(f"[{outcome}] {name}")
