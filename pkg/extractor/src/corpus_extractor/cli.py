"""CLI: turn a directory of WAV files into an embedding corpus."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .manifest import build_corpus
from .models import MODEL_REGISTRY, ExtractionSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract-corpus",
        description="Extract content + speaker embeddings into the corpus interchange format",
    )
    parser.add_argument("--model", required=True, choices=sorted(MODEL_REGISTRY))
    parser.add_argument("--layer", type=int, help="encoder layer (default: the model's preset)")
    parser.add_argument("--wav-dir", required=True, help="directory tree of .wav files")
    parser.add_argument("--out", required=True, help="corpus output directory")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--corpus-name", default="extracted")
    parser.add_argument("--speaker-backend", choices=["ecapa", "spectral"], default="ecapa")
    parser.add_argument("--speaker-map", help="CSV of utterance_id,speaker overriding directory labels")
    parser.add_argument(
        "--random-init",
        action="store_true",
        help="random weights instead of pretrained (offline dry runs and tests)",
    )
    parser.add_argument(
        "--no-preprocess",
        action="store_true",
        help="inputs are already 16 kHz mono 16-bit; skip conversion",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExtractionSpec(
        model_id=args.model,
        wav_dir=Path(args.wav_dir),
        out_dir=Path(args.out),
        layer=args.layer,
        device=args.device,
    )
    try:
        manifest = build_corpus(
            spec,
            corpus_name=args.corpus_name,
            speaker_backend=args.speaker_backend,
            mapping_csv=Path(args.speaker_map) if args.speaker_map else None,
            random_init=args.random_init,
            preprocess=not args.no_preprocess,
        )
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
