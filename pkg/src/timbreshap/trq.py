"""Timbre-residue quantification scores over an attribution matrix.

mean_score is the ratio of per-dimension mean absolute attribution in the
content segment to that in the speaker segment; sum_score is the fraction
of total absolute attribution mass carried by the content segment. Batch
statistics measure how stable mean_score is across consecutive batches.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .explain import AttributionMatrix


class DegenerateAttributionError(ValueError):
    """Speaker-segment attribution mass is zero; the scores are undefined."""


def per_dim_mean_abs(attr: AttributionMatrix) -> np.ndarray:
    """Mean absolute attribution per feature dimension."""
    return np.abs(attr.values).mean(axis=0)


def _segment_means(values: np.ndarray, d_s: int) -> tuple[float, float]:
    """(speaker, content) means of per-dimension mean |attribution|."""
    if d_s < 1 or values.shape[1] - d_s < 1:
        raise ValueError("both speaker and content segments must be nonempty")
    per_dim = np.abs(values).mean(axis=0)
    speaker = float(per_dim[:d_s].mean())
    content = float(per_dim[d_s:].mean())
    if speaker <= 0.0:
        raise DegenerateAttributionError(
            "zero speaker attribution mass; classifier or explainer is degenerate"
        )
    return speaker, content


def mean_score(attr: AttributionMatrix) -> float:
    """Content-to-speaker ratio of per-dimension mean absolute attribution."""
    speaker, content = _segment_means(attr.values, attr.d_s)
    return content / speaker


def sum_score(attr: AttributionMatrix) -> float:
    """Share of total absolute attribution mass in the content segment."""
    speaker, content = _segment_means(attr.values, attr.d_s)
    content_total = content * attr.d_c
    speaker_total = speaker * attr.d_s
    return content_total / (content_total + speaker_total)


def sum_score_from_mean(mean: float, d_c: int, d_s: int) -> float:
    """sum_score implied by a mean_score and the segment widths."""
    return mean * d_c / (mean * d_c + d_s)


@dataclass
class BatchStability:
    scores: np.ndarray  # per-batch mean_score, consecutive batches
    std: float  # population standard deviation of scores
    cv: float  # std / mean(scores)
    single_batch: bool  # too few batches for a meaningful spread


def batch_stability(attr: AttributionMatrix, batch_size: int) -> BatchStability:
    """mean_score per consecutive batch plus its spread.

    The last partial batch is kept. With fewer than 2 batches the std is
    reported as 0 and flagged via ``single_batch``.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = attr.n_samples
    scores = []
    for start in range(0, n, batch_size):
        speaker, content = _segment_means(attr.values[start : start + batch_size], attr.d_s)
        scores.append(content / speaker)
    scores = np.array(scores)
    if len(scores) < 2:
        return BatchStability(scores=scores, std=0.0, cv=0.0, single_batch=True)
    std = float(scores.std())  # population: the batches are the whole run
    return BatchStability(scores=scores, std=std, cv=std / float(scores.mean()), single_batch=False)


@dataclass
class TrqReport:
    mean_score: float
    sum_score: float
    per_dim_mean_abs: np.ndarray
    batch_scores: np.ndarray
    batch_std: float
    batch_cv: float
    single_batch: bool
    d_s: int
    d_c: int
    n_samples: int
    batch_size: int

    def to_dict(self) -> dict:
        return {
            "mean_score": self.mean_score,
            "sum_score": self.sum_score,
            "per_dim_mean_abs": self.per_dim_mean_abs.tolist(),
            "batch_scores": self.batch_scores.tolist(),
            "batch_std": self.batch_std,
            "batch_cv": self.batch_cv,
            "single_batch": self.single_batch,
            "d_s": self.d_s,
            "d_c": self.d_c,
            "n_samples": self.n_samples,
            "batch_size": self.batch_size,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrqReport":
        return cls(
            mean_score=doc["mean_score"],
            sum_score=doc["sum_score"],
            per_dim_mean_abs=np.array(doc["per_dim_mean_abs"], dtype=np.float64),
            batch_scores=np.array(doc["batch_scores"], dtype=np.float64),
            batch_std=doc["batch_std"],
            batch_cv=doc["batch_cv"],
            single_batch=doc["single_batch"],
            d_s=doc["d_s"],
            d_c=doc["d_c"],
            n_samples=doc["n_samples"],
            batch_size=doc["batch_size"],
        )


def compute_trq_report(attr: AttributionMatrix, batch_size: int) -> TrqReport:
    stability = batch_stability(attr, batch_size)
    return TrqReport(
        mean_score=mean_score(attr),
        sum_score=sum_score(attr),
        per_dim_mean_abs=per_dim_mean_abs(attr),
        batch_scores=stability.scores,
        batch_std=stability.std,
        batch_cv=stability.cv,
        single_batch=stability.single_batch,
        d_s=attr.d_s,
        d_c=attr.d_c,
        n_samples=attr.n_samples,
        batch_size=batch_size,
    )
