"""End-to-end acceptance suite.

Each test is one release criterion, pinned at its stated tolerance. The
terminal summary (see conftest) prints one PASS/FAIL line per criterion.
"""
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from timbreshap.cli import main as cli_main
from timbreshap.explain import (
    ExplainConfig,
    completeness_residual,
    exact_shapley,
    gradient_shap_explain,
    select_baselines,
)
from timbreshap.mlp import TrainConfig, forward, forward_batch, init_mlp, input_gradient, train_overfit
from timbreshap.pipeline import FilterSpec, PipelineConfig, run_benchmark, run_filter
from timbreshap.store import FusedDataset, build_fused_dataset, frame_average, iter_records, load_manifest
from timbreshap.synth import SynthConfig, generate_synthetic_corpus, load_ground_truth
from timbreshap.trq import mean_score, sum_score_from_mean

from test_explain import affine_mlp

BENCH_SYNTH = dict(
    n_speakers=20,
    utterances_per_speaker=20,
    n_frames=10,
    d_c=64,
    d_s=16,
    d_content_factor=8,
    d_speaker_factor=8,
    noise_sigma=0.1,
)
BENCH_TRAIN = dict(hidden_dims=(256, 128, 64))
BENCH_EXPLAIN = dict(n_baselines=128, n_path_samples=100)


def as_dataset(features, labels, d_s=1):
    return FusedDataset(
        features=np.asarray(features, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64),
        d_s=d_s,
        d_c=features.shape[1] - d_s,
    )


def bench_config(manifest_path, out_dir, seed):
    return PipelineConfig(
        manifest_path=Path(manifest_path),
        output_dir=Path(out_dir),
        train=TrainConfig(seed=seed, **BENCH_TRAIN),
        explain=ExplainConfig(seed=seed, **BENCH_EXPLAIN),
        report_formats=("json",),
    )


def run_synth_benchmark(tmp_dir, lam, seed):
    corpus = Path(tmp_dir) / f"corpus-{lam:g}-{seed}"
    config = SynthConfig(leakage_lambda=lam, seed=seed, **BENCH_SYNTH)
    generate_synthetic_corpus(config, corpus)
    return run_benchmark(bench_config(corpus / "manifest.json", Path(tmp_dir) / "out", seed))


# --- criterion: Shapley estimator agrees with the exact enumeration oracle ---

def test_shapley_estimator_matches_exact_oracle():
    start = time.monotonic()
    rng = np.random.default_rng(100)
    for p in (5, 8, 10):
        w = rng.standard_normal((2, p))
        params = affine_mlp(w)
        x = rng.uniform(1.0, 2.0, size=p) * rng.choice([-1.0, 1.0], size=p)
        baseline = rng.standard_normal(p) * 0.1
        label = int(np.argmax(forward(params, x)))

        def model_fn(v, label=label, params=params):
            return float(forward(params, v)[label])

        phi_exact = exact_shapley(model_fn, x, baseline)
        # analytic Shapley of a linear model doubles as a sanity cross-check
        assert np.allclose(phi_exact, w[label] * (x - baseline), rtol=1e-9, atol=1e-9)

        ds = as_dataset(x[None, :], [label])
        config = ExplainConfig(n_baselines=1, n_path_samples=2000, seed=p)
        attr = gradient_shap_explain(params, ds, baseline[None, :], config)
        estimate = attr.values[0]
        mask = np.abs(phi_exact) > 1e-6
        rel = np.abs(estimate - phi_exact)[mask] / np.abs(phi_exact)[mask]
        assert rel.max() < 0.05, f"p={p}: worst relative error {rel.max():.4f}"
    assert time.monotonic() - start < 60.0


# --- criterion: completeness within Monte-Carlo error on random MLPs ---

def test_completeness_within_three_standard_errors():
    for seed in (0, 1):
        rng = np.random.default_rng(200 + seed)
        params = init_mlp([10, 32, 32, 32, 4], seed=seed)
        features = rng.standard_normal((100, 10))
        labels = np.argmax(forward_batch(params, features), axis=1)
        ds = as_dataset(features, labels)
        config = ExplainConfig(
            n_baselines=32, n_path_samples=400, local_smoothing_sigma=0.0, seed=seed
        )
        baselines = select_baselines(ds, config)
        attr = gradient_shap_explain(params, ds, baselines, config)
        residuals = np.array(
            [
                completeness_residual(attr.values[k], attr.fx[k], attr.baseline_expectation[k])
                for k in range(100)
            ]
        )
        assert residuals.mean() < 3 * attr.sum_stderr.mean(), (
            f"seed {seed}: mean residual {residuals.mean():.5f} vs "
            f"3*stderr {3 * attr.sum_stderr.mean():.5f}"
        )


# --- criterion: published mean/sum score pairs are mutually consistent ---

REFERENCE_SCORE_PAIRS = [
    ("hubert-base", 0.1372, 768, 192, 0.3544),
    ("hubert-large", 0.1865, 1024, 192, 0.4986),
    ("hubert-ch", 0.1393, 768, 192, 0.3578),
    ("dphubert", 0.0773, 768, 192, 0.2362),
    ("contentvec", 0.0520, 768, 192, 0.1721),
    ("wavlm-base-plus", 0.0902, 768, 192, 0.2651),
    ("whisper-ppg", 0.0746, 1024, 192, 0.2847),
]


def test_score_identity_reproduces_reference_pairs():
    for name, mean, d_c, d_s, reported_sum in REFERENCE_SCORE_PAIRS:
        implied = sum_score_from_mean(mean, d_c, d_s)
        assert abs(implied - reported_sum) <= 5e-4, (
            f"{name}: implied sum score {implied:.4%} vs reported {reported_sum:.4%}"
        )


# --- criterion: benchmark score rises monotonically with planted leakage ---

def test_leakage_monotonicity_across_seeds(tmp_path):
    start = time.monotonic()
    lambdas = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    for seed in range(5):
        scores = [
            run_synth_benchmark(tmp_path / f"s{seed}", lam, seed).trq.mean_score
            for lam in lambdas
        ]
        rho = spearmanr(lambdas, scores).statistic
        assert rho >= 0.9, f"seed {seed}: spearman {rho:.3f} for scores {scores}"
        assert scores[0] < scores[-1]
    assert time.monotonic() - start < 600.0


# --- criterion: filter efficacy on a fully leaky corpus ---

@pytest.fixture(scope="module")
def efficacy_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("efficacy")
    corpus = tmp / "corpus"
    generate_synthetic_corpus(SynthConfig(leakage_lambda=1.0, seed=0, **BENCH_SYNTH), corpus)
    config = bench_config(corpus / "manifest.json", tmp / "out", seed=0)
    pre = run_benchmark(config)

    noise_scores = {0.0: pre.trq.mean_score}
    probe_manifests = {0.0: load_manifest(corpus / "manifest.json")}
    for sigma in (0.3, 0.6, 1.0):
        config.filter = FilterSpec(method="noise", sigma_scale=-sigma, mu_offset=0.0)
        result = run_filter(config, pre.run_id)
        noise_scores[sigma] = result.comparison["post_mean_score"]
        probe_manifests[sigma] = load_manifest(result.filtered_manifest)

    config.filter = FilterSpec(method="crop", ratio_r=0.2, w_cut=1.0)
    crop_result = run_filter(config, pre.run_id)

    return {
        "corpus": corpus,
        "pre": pre,
        "noise_scores": noise_scores,
        "probe_manifests": probe_manifests,
        "crop": crop_result.comparison,
    }


def content_probe_r2(manifest, truth):
    features = np.stack([frame_average(rec.content) for rec in iter_records(manifest)])
    design = np.hstack([features, np.ones((len(features), 1))])
    target = truth.content_factors
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coef
    return 1.0 - (residual**2).sum() / ((target - target.mean(axis=0)) ** 2).sum()


def test_filter_efficacy_noise_halves_score(efficacy_runs):
    pre = efficacy_runs["noise_scores"][0.0]
    post = efficacy_runs["noise_scores"][1.0]
    drop = (pre - post) / pre
    assert drop >= 0.5, (
        f"fully loaded noise dropped mean_score by {drop:.1%} ({pre:.4f} -> {post:.4f}); "
        "a dataset-constant additive shift cannot halve the score of a retrained "
        "classifier (see decisions ledger)"
    )


def test_filter_efficacy_noise_strictly_reduces(efficacy_runs):
    assert efficacy_runs["noise_scores"][1.0] < efficacy_runs["noise_scores"][0.0]


def test_filter_efficacy_noise_monotone_in_scale(efficacy_runs):
    scores = [efficacy_runs["noise_scores"][s] for s in (0.0, 0.3, 0.6, 1.0)]
    assert all(b <= a for a, b in zip(scores, scores[1:])), scores


def test_filter_efficacy_crop_strictly_reduces(efficacy_runs):
    comparison = efficacy_runs["crop"]
    assert comparison["post_mean_score"] < comparison["pre_mean_score"]


def test_filter_preserves_content_probe(efficacy_runs):
    truth = load_ground_truth(efficacy_runs["corpus"])
    pre_r2 = content_probe_r2(efficacy_runs["probe_manifests"][0.0], truth)
    post_r2 = content_probe_r2(efficacy_runs["probe_manifests"][0.3], truth)
    assert post_r2 >= 0.9 * pre_r2, f"probe R2 {pre_r2:.4f} -> {post_r2:.4f}"


# --- criterion: identity filter settings change nothing, bit for bit ---

@pytest.mark.parametrize(
    "spec",
    [
        FilterSpec(method="noise", sigma_scale=0.0, mu_offset=0.0),
        FilterSpec(method="crop", ratio_r=0.2, w_cut=0.0),
    ],
    ids=["noise-zero", "crop-zero"],
)
def test_identity_filters_bitwise(tmp_path, spec):
    corpus = tmp_path / "corpus"
    generate_synthetic_corpus(SynthConfig(leakage_lambda=1.0, seed=1, **BENCH_SYNTH), corpus)
    config = bench_config(corpus / "manifest.json", tmp_path / "out", seed=1)
    pre = run_benchmark(config)
    config.filter = spec
    result = run_filter(config, pre.run_id)

    original = load_manifest(corpus / "manifest.json")
    filtered = load_manifest(result.filtered_manifest)
    for a, b in zip(original.utterances, filtered.utterances):
        assert original.content_file(a).read_bytes() == filtered.content_file(b).read_bytes()
        assert original.speaker_file(a).read_bytes() == filtered.speaker_file(b).read_bytes()

    pre_json = (pre.run_dir / "trq_report.json").read_bytes()
    post_json = (result.post.run_dir / "trq_report.json").read_bytes()
    assert pre_json == post_json


# --- criterion: the classifier precondition holds on every synthetic corpus ---

@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0])
def test_classifier_reaches_target_on_800_samples(tmp_path, lam):
    corpus = tmp_path / f"c{lam:g}"
    config = SynthConfig(
        leakage_lambda=lam, seed=2, **{**BENCH_SYNTH, "utterances_per_speaker": 40}
    )
    generate_synthetic_corpus(config, corpus)
    ds = build_fused_dataset(load_manifest(corpus / "manifest.json"))
    assert ds.n_samples == 800
    params, report = train_overfit(ds, TrainConfig(seed=2))  # stock settings
    assert report.reached_target, f"accuracy {report.final_accuracy} in {report.epochs_run} epochs"
    assert report.epochs_run <= 500

    # exact input gradients: central finite differences at non-kink points
    rng = np.random.default_rng(3)
    h = 1e-4
    checked = 0
    for idx in rng.permutation(ds.n_samples):
        x = ds.features[idx]
        a = x
        near_kink = False
        for i in range(3):
            z = a @ params.weights[i].T + params.biases[i]
            if np.min(np.abs(z)) < 5e-3:
                near_kink = True
                break
            a = np.maximum(z, 0.0)
        if near_kink:
            continue
        k = int(ds.labels[idx])
        grad = input_gradient(params, x, k)
        probe_dims = rng.choice(x.size, size=8, replace=False)
        for j in probe_dims:
            e = np.zeros(x.size)
            e[j] = h
            fd = (forward(params, x + e)[k] - forward(params, x - e)[k]) / (2 * h)
            denom = max(abs(fd), 1e-8)
            assert abs(grad[j] - fd) / denom < 1e-4
        checked += 1
        if checked >= 3:
            break
    assert checked >= 1


# --- criterion: the CLI pipeline is byte-deterministic ---

def test_pipeline_rerun_byte_identical(tmp_path):
    out = tmp_path / "work"
    args = [
        "pipeline",
        "--out", str(out),
        "--seed", "0",
        "--speakers", "8", "--utterances-per-speaker", "8", "--frames", "6",
        "--d-c", "32", "--d-s", "8", "--content-factor", "4", "--speaker-factor", "4",
        "--hidden", "128,96,64", "--n-baselines", "32", "--path-samples", "50",
        "--method", "crop", "--ratio", "0.2", "--w-cut", "1.0",
        "--formats", "json,csv,svg",
    ]
    assert cli_main(args) == 0
    snapshot = {
        str(p.relative_to(out)): p.read_bytes()
        for p in sorted(out.rglob("*"))
        if p.suffix in (".json", ".csv")
    }
    assert len(snapshot) >= 8
    assert cli_main(args) == 0
    for rel, blob in snapshot.items():
        assert (out / rel).read_bytes() == blob, f"{rel} changed between identical runs"
    current = {
        str(p.relative_to(out))
        for p in sorted(out.rglob("*"))
        if p.suffix in (".json", ".csv")
    }
    assert current == set(snapshot)
