"""Command-line entry points for corpus generation, scoring, and filtering.

Exit codes: 0 success, 1 precondition failure (e.g. the classifier cannot
reach the accuracy target), 2 input error (unreadable manifest, bad
arguments, missing runs).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .explain import AccuracyPreconditionError, ExplainConfig
from .filters import CROP_PRESETS, NOISE_PRESETS, CropConfig, NoiseConfig
from .mlp import TrainConfig
from .pipeline import (
    AccuracyTargetError,
    FilterSpec,
    PipelineConfig,
    find_run_dir,
    load_attributions,
    run_benchmark,
    run_filter,
)
from .report import REPORT_FORMATS, emit_report
from .store import CorpusError
from .synth import SynthConfig, generate_synthetic_corpus
from .trq import DegenerateAttributionError, TrqReport

OUTPUT_ROOT_ENV = "TIMBRESHAP_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_INPUT = 2


def _default_out() -> str | None:
    return os.environ.get(OUTPUT_ROOT_ENV)


def _add_out_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--out",
        default=_default_out(),
        required=_default_out() is None,
        help=f"output directory (default: ${OUTPUT_ROOT_ENV})",
    )


def _add_synth_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--leakage", type=float, default=1.0, help="speaker leakage in [0, 1]")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--speakers", type=int, default=20)
    parser.add_argument("--utterances-per-speaker", type=int, default=40)
    parser.add_argument("--frames", type=int, default=20)
    parser.add_argument("--d-c", type=int, default=64)
    parser.add_argument("--d-s", type=int, default=16)
    parser.add_argument("--content-factor", type=int, default=8)
    parser.add_argument("--speaker-factor", type=int, default=8)
    parser.add_argument("--noise-sigma", type=float, default=0.1)


def _add_bench_args(parser: argparse.ArgumentParser, with_seed: bool = True) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    if with_seed:
        parser.add_argument("--seed", type=int, help="seed for both training and explanation")
    parser.add_argument("--lr", type=float, help="training learning rate")
    parser.add_argument("--max-epochs", type=int)
    parser.add_argument("--hidden", help="comma-separated hidden layer widths, e.g. 512,256,128")
    parser.add_argument("--n-baselines", type=int)
    parser.add_argument("--path-samples", type=int)
    parser.add_argument("--smoothing", type=float)
    parser.add_argument("--batch-size", type=int, help="training and explanation batch size")
    parser.add_argument(
        "--formats", default="json,csv,svg", help="comma-separated subset of json,csv,svg"
    )


def _add_filter_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=["noise", "crop"], default="noise")
    parser.add_argument(
        "--preset",
        choices=sorted(NOISE_PRESETS) + sorted(CROP_PRESETS),
        help="published parameter regime for the chosen method; explicit flags win",
    )
    parser.add_argument("--sigma-scale", type=float, default=None)
    parser.add_argument("--mu-offset", type=float, default=None)
    parser.add_argument("--ratio", type=float, default=None)
    parser.add_argument("--w-cut", type=float, default=None)


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    return SynthConfig(
        n_speakers=args.speakers,
        utterances_per_speaker=args.utterances_per_speaker,
        n_frames=args.frames,
        d_c=args.d_c,
        d_s=args.d_s,
        d_content_factor=args.content_factor,
        d_speaker_factor=args.speaker_factor,
        leakage_lambda=args.leakage,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )


def _parse_formats(text: str) -> tuple[str, ...]:
    formats = tuple(f for f in text.split(",") if f)
    for fmt in formats:
        if fmt not in REPORT_FORMATS:
            raise ValueError(f"unknown report format '{fmt}'")
    return formats


def _pipeline_config(args: argparse.Namespace, manifest: str | Path) -> PipelineConfig:
    doc: dict = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    train = TrainConfig(**doc.get("train", {}))
    explain = ExplainConfig(**doc.get("explain", {}))
    if args.seed is not None:
        train.seed = args.seed
        explain.seed = args.seed
    if args.lr is not None:
        train.learning_rate = args.lr
    if args.max_epochs is not None:
        train.max_epochs = args.max_epochs
    if args.hidden is not None:
        dims = tuple(int(d) for d in args.hidden.split(","))
        if len(dims) != 3:
            raise ValueError("--hidden needs exactly three widths")
        train.hidden_dims = dims
    if args.n_baselines is not None:
        explain.n_baselines = args.n_baselines
    if args.path_samples is not None:
        explain.n_path_samples = args.path_samples
    if args.smoothing is not None:
        explain.local_smoothing_sigma = args.smoothing
    if args.batch_size is not None:
        train.batch_size = args.batch_size
        explain.batch_size = args.batch_size
    filter_spec = None
    if "filter" in doc:
        filter_spec = FilterSpec(**doc["filter"])
    return PipelineConfig(
        manifest_path=Path(manifest),
        output_dir=Path(args.out),
        train=train,
        explain=explain,
        filter=filter_spec,
        report_formats=_parse_formats(args.formats),
    )


def _filter_spec(args: argparse.Namespace) -> FilterSpec:
    noise = NoiseConfig()
    crop = CropConfig()
    if args.preset is not None:
        if args.method == "noise":
            if args.preset not in NOISE_PRESETS:
                raise ValueError(f"preset '{args.preset}' is not a noise preset")
            noise = NOISE_PRESETS[args.preset]
        else:
            if args.preset not in CROP_PRESETS:
                raise ValueError(f"preset '{args.preset}' is not a crop preset")
            crop = CROP_PRESETS[args.preset]
    return FilterSpec(
        method=args.method,
        sigma_scale=args.sigma_scale if args.sigma_scale is not None else noise.sigma_scale,
        mu_offset=args.mu_offset if args.mu_offset is not None else noise.mu_offset,
        ratio_r=args.ratio if args.ratio is not None else crop.ratio_r,
        w_cut=args.w_cut if args.w_cut is not None else crop.w_cut,
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    manifest, _ = generate_synthetic_corpus(_synth_config(args), args.out)
    print(f"corpus: {Path(args.out) / 'manifest.json'} "
          f"({manifest.n_utterances} utterances, {manifest.n_speakers} speakers)")
    return EXIT_OK


def _cmd_benchmark(args: argparse.Namespace) -> int:
    config = _pipeline_config(args, args.manifest)
    run = run_benchmark(config)
    print(f"run {run.run_id}: mean_score={run.trq.mean_score:.6f} "
          f"sum_score={run.trq.sum_score:.6f} "
          f"(accuracy {run.train_report.final_accuracy:.3f} "
          f"in {run.train_report.epochs_run} epochs)")
    print(f"artifacts: {run.run_dir}")
    return EXIT_OK


def _cmd_filter(args: argparse.Namespace) -> int:
    config = _pipeline_config(args, args.manifest)
    config.filter = _filter_spec(args)
    result = run_filter(config, args.run)
    c = result.comparison
    print(f"filter {result.filter_id} ({config.filter.method}): "
          f"mean_score {c['pre_mean_score']:.6f} -> {c['post_mean_score']:.6f} "
          f"(drop rate {c['score_drop_rate']:.2%})")
    print(f"filtered corpus: {result.filtered_manifest}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    run_dir = find_run_dir(args.out, args.run)
    trq = TrqReport.from_dict(
        json.loads((run_dir / "trq_report.json").read_text(encoding="utf-8"))
    )
    attr = load_attributions(run_dir)
    written = emit_report(trq, attr, _parse_formats(args.formats), run_dir / "report")
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_pipeline(args: argparse.Namespace) -> int:
    corpus_dir = Path(args.out) / "corpus"
    manifest, _ = generate_synthetic_corpus(_synth_config(args), corpus_dir)
    manifest_path = corpus_dir / "manifest.json"
    print(f"corpus: {manifest_path}")

    config = _pipeline_config(args, manifest_path)
    pre = run_benchmark(config)
    print(f"benchmark {pre.run_id}: mean_score={pre.trq.mean_score:.6f}")

    config.filter = _filter_spec(args)
    result = run_filter(config, pre.run_id)
    c = result.comparison
    print(f"filter {result.filter_id}: mean_score {c['pre_mean_score']:.6f} -> "
          f"{c['post_mean_score']:.6f} (drop rate {c['score_drop_rate']:.2%})")
    print(f"reports: {pre.run_dir / 'report'} and {result.post.run_dir / 'report'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timbreshap",
        description="Score and filter residual speaker information in embedding corpora",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _add_out_arg(p)
    _add_synth_args(p)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("benchmark", help="score a corpus")
    p.add_argument("--manifest", required=True)
    _add_out_arg(p)
    _add_bench_args(p)
    p.set_defaults(fn=_cmd_benchmark)

    p = sub.add_parser("filter", help="filter a corpus using a prior run, then rescore")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run", required=True, help="attribution run id")
    _add_out_arg(p)
    _add_bench_args(p)
    _add_filter_args(p)
    p.set_defaults(fn=_cmd_filter)

    p = sub.add_parser("report", help="re-emit report artifacts for a run")
    p.add_argument("--run", required=True)
    _add_out_arg(p)
    p.add_argument("--formats", default="json,csv,svg")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("pipeline", help="synth -> benchmark -> filter -> rescore -> report")
    _add_out_arg(p)
    _add_synth_args(p)
    _add_bench_args(p, with_seed=False)  # --seed comes from the synth args
    _add_filter_args(p)
    p.set_defaults(fn=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (AccuracyTargetError, AccuracyPreconditionError, DegenerateAttributionError) as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (CorpusError, FileNotFoundError, json.JSONDecodeError, ValueError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
