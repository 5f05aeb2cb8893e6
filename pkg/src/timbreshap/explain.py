"""Gradient-SHAP attribution of the speaker classifier.

The estimator averages gradient-times-difference terms over random
interpolation paths between each sample and sampled baseline rows. An exact
Shapley oracle (full subset enumeration) is provided for validating the
estimator on models small enough to enumerate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mlp import MlpParams, forward_batch, input_gradient_batch
from .seeding import BASELINE_SHUFFLE, PATH_SAMPLES, derive_rng
from .store import FusedDataset

MAX_EXACT_FEATURES = 14


class AccuracyPreconditionError(RuntimeError):
    """The classifier does not perfectly fit the samples being explained.

    Residue scores are only meaningful when every sample is classified
    correctly, so explanation refuses to run otherwise.
    """


@dataclass
class ExplainConfig:
    n_baselines: int = 256
    batch_size: int = 256
    local_smoothing_sigma: float = 0.1
    n_path_samples: int = 200
    seed: int = 0

    def validate(self) -> None:
        if self.n_baselines < 1:
            raise ValueError("n_baselines must be >= 1")
        if self.n_path_samples < 1:
            raise ValueError("n_path_samples must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.local_smoothing_sigma < 0:
            raise ValueError("local_smoothing_sigma must be >= 0")


@dataclass
class AttributionMatrix:
    """Signed per-feature attributions, one row per explained sample.

    Column layout matches FusedDataset: speaker dims first, content dims
    after. Extra diagnostic arrays support completeness checks: ``fx`` is
    the explained logit at the sample, ``baseline_expectation`` its mean
    over the baseline set, ``sum_stderr`` the Monte-Carlo standard error
    of each row's attribution total.
    """

    values: np.ndarray  # (n_samples, d_s + d_c)
    target_class: np.ndarray  # (n_samples,)
    d_s: int
    d_c: int
    fx: np.ndarray | None = None
    baseline_expectation: np.ndarray | None = None
    sum_stderr: np.ndarray | None = None

    @property
    def n_samples(self) -> int:
        return int(self.values.shape[0])

    def speaker_segment(self) -> np.ndarray:
        return self.values[:, : self.d_s]

    def content_segment(self) -> np.ndarray:
        return self.values[:, self.d_s :]


def select_baselines(dataset: FusedDataset, config: ExplainConfig) -> np.ndarray:
    """First n_baselines rows of the dataset after a seeded shuffle."""
    config.validate()
    if config.n_baselines > dataset.n_samples:
        raise ValueError(
            f"n_baselines={config.n_baselines} exceeds dataset size {dataset.n_samples}"
        )
    order = derive_rng(config.seed, BASELINE_SHUFFLE).permutation(dataset.n_samples)
    return dataset.features[order[: config.n_baselines]].copy()


def _explain_one(
    params: MlpParams,
    x: np.ndarray,
    target: int,
    baselines: np.ndarray,
    config: ExplainConfig,
    sample_index: int,
) -> tuple[np.ndarray, float]:
    """Attribution row and Monte-Carlo stderr of its total for one sample.

    The per-sample random stream is keyed by (seed, sample index) and draws,
    in order: baseline indices, path positions, then smoothing noise.
    """
    rng = derive_rng(config.seed, PATH_SAMPLES, sample_index)
    n_draws = config.n_path_samples
    b_idx = rng.integers(0, len(baselines), size=n_draws)
    alpha = rng.uniform(0.0, 1.0, size=n_draws)
    if config.local_smoothing_sigma > 0:
        noise = rng.standard_normal((n_draws, x.size)) * config.local_smoothing_sigma
        x_tilde = x[None, :] + noise
    else:
        x_tilde = np.broadcast_to(x, (n_draws, x.size))

    b = baselines[b_idx]
    diff = x_tilde - b
    points = b + alpha[:, None] * diff
    classes = np.full(n_draws, target, dtype=np.int64)

    contrib = np.empty_like(diff)
    for start in range(0, n_draws, config.batch_size):
        stop = start + config.batch_size
        grads = input_gradient_batch(params, points[start:stop], classes[start:stop])
        contrib[start:stop] = grads * diff[start:stop]

    totals = contrib.sum(axis=1)
    stderr = float(totals.std(ddof=1) / math.sqrt(n_draws)) if n_draws > 1 else 0.0
    return contrib.mean(axis=0), stderr


def gradient_shap_explain(
    params: MlpParams,
    samples: FusedDataset,
    baselines: np.ndarray,
    config: ExplainConfig,
) -> AttributionMatrix:
    """Explain every sample's true-class logit against the baseline set.

    Requires the classifier to reach accuracy 1.0 on ``samples``; with a
    perfectly fit classifier the true class is also the predicted one, so
    the explained output is unambiguous.
    """
    config.validate()
    baselines = np.asarray(baselines, dtype=np.float64)
    if baselines.ndim != 2 or baselines.shape[0] == 0:
        raise ValueError("empty baselines")
    if baselines.shape[1] != samples.features.shape[1]:
        raise ValueError("baseline feature width does not match samples")

    logits = forward_batch(params, samples.features)
    preds = np.argmax(logits, axis=1)
    accuracy = float(np.mean(preds == samples.labels))
    if accuracy < 1.0:
        raise AccuracyPreconditionError(
            f"classifier accuracy on explained samples is {accuracy:.4f}, need 1.0"
        )

    n, d = samples.features.shape
    values = np.empty((n, d))
    stderr = np.empty(n)
    for k in range(n):
        values[k], stderr[k] = _explain_one(
            params, samples.features[k], int(samples.labels[k]), baselines, config, k
        )

    baseline_logits = forward_batch(params, baselines).mean(axis=0)
    return AttributionMatrix(
        values=values,
        target_class=samples.labels.copy(),
        d_s=samples.d_s,
        d_c=samples.d_c,
        fx=logits[np.arange(n), samples.labels],
        baseline_expectation=baseline_logits[samples.labels],
        sum_stderr=stderr,
    )


def exact_shapley(
    model_fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    baseline: np.ndarray,
) -> np.ndarray:
    """Shapley values by full subset enumeration.

    The value of a feature subset S is ``model_fn`` applied to a composite
    vector that takes x inside S and the baseline outside S. Feature j gets
    the usual factorial-weighted average of its marginal contributions over
    all subsets not containing j. Cost is O(p * 2^p), guarded at p <= 14.
    """
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if x.shape != baseline.shape or x.ndim != 1:
        raise ValueError("x and baseline must be vectors of equal length")
    p = x.size
    if p > MAX_EXACT_FEATURES:
        raise ValueError(f"exact enumeration limited to {MAX_EXACT_FEATURES} features, got {p}")

    n_masks = 1 << p
    value = np.empty(n_masks)
    bits = 1 << np.arange(p)
    for mask in range(n_masks):
        member = (mask & bits) != 0
        value[mask] = float(model_fn(np.where(member, x, baseline)))

    fact = [math.factorial(k) for k in range(p + 1)]
    weight = np.array([fact[s] * fact[p - s - 1] / fact[p] for s in range(p)])
    sizes = np.array([bin(m).count("1") for m in range(n_masks)])

    phi = np.zeros(p)
    for j in range(p):
        bit = 1 << j
        without = np.flatnonzero((np.arange(n_masks) & bit) == 0)
        phi[j] = np.sum(weight[sizes[without]] * (value[without | bit] - value[without]))
    return phi


def completeness_residual(attr_row: np.ndarray, f_x: float, mean_f_baselines: float) -> float:
    """Absolute gap between an attribution row's total and f(x) - E[f(b)]."""
    attr_row = np.asarray(attr_row, dtype=np.float64)
    return float(abs(attr_row.sum() - (f_x - mean_f_baselines)))
