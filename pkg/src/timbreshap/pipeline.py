"""End-to-end run orchestration: benchmark, filter, and artifact layout.

A benchmark run is: fused dataset -> overfit classifier (must hit the
accuracy target) -> gradient-SHAP attribution -> residue scores. Run
directories are content-addressed by a digest of the semantic inputs
(corpus bytes plus training/explanation settings), so identical runs land
in identical artifacts and never contaminate each other.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .explain import (
    AttributionMatrix,
    ExplainConfig,
    gradient_shap_explain,
    select_baselines,
)
from .filters import (
    CropConfig,
    NoiseConfig,
    aggregate_global_shap,
    apply_shap_crop,
    apply_shap_noise,
    standardize_shap,
)
from .mlp import TrainConfig, TrainReport, save_mlp, train_overfit
from .report import REPORT_FORMATS, canonical_json, emit_report
from .store import (
    CorpusError,
    Manifest,
    build_fused_dataset,
    load_array,
    load_manifest,
    save_array,
    write_manifest,
)
from .trq import TrqReport, compute_trq_report


class AccuracyTargetError(RuntimeError):
    """Training stopped below the accuracy target; scoring would be invalid."""


FILTER_METHODS = ("noise", "crop")


@dataclass
class FilterSpec:
    """Pipeline-level filter selection.

    Both transforms are driven by one aggregated attribution vector per
    source run; there is deliberately no per-utterance mode.
    """

    method: str = "noise"
    sigma_scale: float = -1.0
    mu_offset: float = 0.0
    ratio_r: float = 0.2
    w_cut: float = 1.0

    def validate(self) -> None:
        if self.method not in FILTER_METHODS:
            raise ValueError(f"filter method must be one of {FILTER_METHODS}")
        if self.method == "crop":
            CropConfig(self.ratio_r, self.w_cut).validate()

    def to_dict(self) -> dict:
        if self.method == "noise":
            return {
                "method": "noise",
                "sigma_scale": self.sigma_scale,
                "mu_offset": self.mu_offset,
            }
        return {"method": "crop", "ratio_r": self.ratio_r, "w_cut": self.w_cut}


@dataclass
class PipelineConfig:
    manifest_path: Path
    output_dir: Path
    train: TrainConfig = field(default_factory=TrainConfig)
    explain: ExplainConfig = field(default_factory=ExplainConfig)
    filter: FilterSpec | None = None
    report_formats: tuple[str, ...] = REPORT_FORMATS


def _digest_bytes(*chunks: bytes) -> str:
    h = hashlib.sha256()
    for chunk in chunks:
        h.update(chunk)
    return h.hexdigest()


def corpus_digest(manifest: Manifest, manifest_path: Path) -> str:
    """Digest of the manifest bytes plus every referenced array file."""
    h = hashlib.sha256()
    h.update(manifest_path.read_bytes())
    for entry in manifest.utterances:
        for file in (manifest.content_file(entry), manifest.speaker_file(entry)):
            h.update(entry.utterance_id.encode())
            h.update(file.read_bytes())
    return h.hexdigest()


def _run_id(corpus_sha: str, train: TrainConfig, explain: ExplainConfig) -> str:
    doc = {
        "corpus_sha256": corpus_sha,
        "train": dataclasses.asdict(train),
        "explain": dataclasses.asdict(explain),
    }
    return _digest_bytes(canonical_json(doc).encode())[:12]


@dataclass
class BenchmarkRun:
    run_id: str
    run_dir: Path
    trq: TrqReport
    train_report: TrainReport
    attr: AttributionMatrix
    manifest: Manifest


def save_attributions(attr: AttributionMatrix, explain: ExplainConfig, run_dir: Path) -> None:
    """NPY float32 matrix plus a JSON sidecar with layout and provenance."""
    np.save(run_dir / "attributions.npy", attr.values.astype(np.float32))
    sidecar = {
        "d_s": attr.d_s,
        "d_c": attr.d_c,
        "target_class": attr.target_class.tolist(),
        "explain": dataclasses.asdict(explain),
    }
    (run_dir / "attributions.json").write_text(canonical_json(sidecar), encoding="utf-8")


def load_attributions(run_dir: Path) -> AttributionMatrix:
    sidecar = json.loads((run_dir / "attributions.json").read_text(encoding="utf-8"))
    values = np.load(run_dir / "attributions.npy").astype(np.float64)
    return AttributionMatrix(
        values=values,
        target_class=np.array(sidecar["target_class"], dtype=np.int64),
        d_s=sidecar["d_s"],
        d_c=sidecar["d_c"],
    )


def run_benchmark(config: PipelineConfig) -> BenchmarkRun:
    """Execute the full scoring pipeline and persist every artifact.

    Raises AccuracyTargetError (and writes nothing) if the classifier
    cannot reach the configured training accuracy.
    """
    manifest_path = Path(config.manifest_path)
    manifest = load_manifest(manifest_path)
    dataset = build_fused_dataset(manifest)
    corpus_sha = corpus_digest(manifest, manifest_path)
    run_id = _run_id(corpus_sha, config.train, config.explain)

    params, train_report = train_overfit(dataset, config.train)
    if not train_report.reached_target:
        raise AccuracyTargetError(
            f"classifier reached accuracy {train_report.final_accuracy:.4f} "
            f"after {train_report.epochs_run} epochs "
            f"(target {config.train.target_accuracy}); scores would be meaningless"
        )

    baselines = select_baselines(dataset, config.explain)
    attr = gradient_shap_explain(params, dataset, baselines, config.explain)
    trq = compute_trq_report(attr, config.explain.batch_size)

    run_dir = Path(config.output_dir) / "runs" / run_id
    run_dir.mkdir(parents=True, exist_ok=True)
    save_mlp(params, run_dir / "classifier.tpmlp")
    save_attributions(attr, config.explain, run_dir)
    np.save(run_dir / "per_dim_mean_abs.npy", trq.per_dim_mean_abs.astype(np.float32))
    # canonical machine-readable score file, independent of report formats
    (run_dir / "trq_report.json").write_text(canonical_json(trq.to_dict()), encoding="utf-8")
    provenance = {
        "run_id": run_id,
        "manifest_path": str(manifest_path),
        "manifest_sha256": _digest_bytes(manifest_path.read_bytes()),
        "corpus_sha256": corpus_sha,
        "train": dataclasses.asdict(config.train),
        "explain": dataclasses.asdict(config.explain),
        "train_report": {
            "final_accuracy": train_report.final_accuracy,
            "epochs_run": train_report.epochs_run,
            "final_loss": train_report.final_loss,
        },
        "version": __version__,
    }
    (run_dir / "provenance.json").write_text(canonical_json(provenance), encoding="utf-8")
    emit_report(trq, attr, config.report_formats, run_dir / "report")
    return BenchmarkRun(run_id, run_dir, trq, train_report, attr, manifest)


def find_run_dir(output_dir: Path | str, run_id: str) -> Path:
    run_dir = Path(output_dir) / "runs" / run_id
    if not (run_dir / "provenance.json").is_file():
        raise CorpusError(f"no benchmark run '{run_id}' under {output_dir}")
    return run_dir


def apply_filter_to_corpus(
    manifest: Manifest,
    attr: AttributionMatrix,
    spec: FilterSpec,
    source_run: str,
    out_dir: Path | str,
) -> Path:
    """Write the filtered twin of a corpus; returns its manifest path.

    Speaker files are copied byte for byte; content files are transformed
    and re-encoded as float32.
    """
    spec.validate()
    out_dir = Path(out_dir)
    global_vec = aggregate_global_shap(attr, source=source_run)
    if spec.method == "noise":
        noise_cfg = NoiseConfig(spec.sigma_scale, spec.mu_offset)
        noise_row = standardize_shap(global_vec)
    else:
        crop_cfg = CropConfig(spec.ratio_r, spec.w_cut)

    new_entries = []
    for entry in manifest.utterances:
        content = load_array(manifest.content_file(entry))
        if content.shape[1] != manifest.d_c:
            raise CorpusError(f"dimension mismatch in {manifest.content_file(entry)}")
        if spec.method == "noise":
            filtered = apply_shap_noise(content, noise_row, noise_cfg)
        else:
            filtered = apply_shap_crop(content, global_vec, crop_cfg)
        save_array(out_dir / entry.content_path, filtered)
        dst = out_dir / entry.speaker_path
        dst.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(manifest.speaker_file(entry), dst)
        new_entries.append(entry)

    filtered_manifest = Manifest(
        corpus_name=f"{manifest.corpus_name}-filtered",
        model_id=manifest.model_id,
        layer=manifest.layer,
        d_c=manifest.d_c,
        d_s=manifest.d_s,
        utterances=new_entries,
        root=out_dir,
        filter_block={"source_run": source_run, **spec.to_dict()},
    )
    manifest_path = out_dir / "manifest.json"
    write_manifest(filtered_manifest, manifest_path)
    return manifest_path


@dataclass
class FilterRun:
    filter_id: str
    filtered_manifest: Path
    pre_run_id: str
    post: BenchmarkRun
    comparison: dict


def run_filter(config: PipelineConfig, attribution_run_id: str) -> FilterRun:
    """Filter the corpus with a prior run's attributions, then rescore it.

    Emits a before/after comparison with the relative score drop.
    """
    if config.filter is None:
        raise ValueError("pipeline config has no filter spec")
    config.filter.validate()
    pre_dir = find_run_dir(config.output_dir, attribution_run_id)
    pre_provenance = json.loads((pre_dir / "provenance.json").read_text(encoding="utf-8"))
    pre_trq = json.loads((pre_dir / "trq_report.json").read_text(encoding="utf-8"))
    attr = load_attributions(pre_dir)

    manifest = load_manifest(config.manifest_path)
    if attr.d_c != manifest.d_c or attr.d_s != manifest.d_s:
        raise CorpusError(
            f"attribution dims (d_s={attr.d_s}, d_c={attr.d_c}) do not match corpus "
            f"(d_s={manifest.d_s}, d_c={manifest.d_c})"
        )

    filter_id = _digest_bytes(
        canonical_json({"source_run": attribution_run_id, **config.filter.to_dict()}).encode()
    )[:12]
    filter_dir = Path(config.output_dir) / "filters" / filter_id
    corpus_dir = filter_dir / "corpus"
    filtered_manifest = apply_filter_to_corpus(
        manifest, attr, config.filter, attribution_run_id, corpus_dir
    )

    post_config = dataclasses.replace(config, manifest_path=filtered_manifest, filter=None)
    post = run_benchmark(post_config)

    pre_score = pre_trq["mean_score"]
    post_score = post.trq.mean_score
    comparison = {
        "filter": config.filter.to_dict(),
        "pre_run_id": attribution_run_id,
        "post_run_id": post.run_id,
        "pre_mean_score": pre_score,
        "post_mean_score": post_score,
        "delta": post_score - pre_score,
        "score_drop_rate": (pre_score - post_score) / pre_score if pre_score else 0.0,
        "pre_corpus_sha256": pre_provenance["corpus_sha256"],
    }
    (filter_dir / "comparison.json").write_text(canonical_json(comparison), encoding="utf-8")
    return FilterRun(filter_id, filtered_manifest, attribution_run_id, post, comparison)
