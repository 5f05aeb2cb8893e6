"""Attribution-driven timbre filters applied to frame-level content matrices.

Two transforms: additive noise built from a standardized attribution vector
(broadcast across frames), and quantile cropping that down-scales the
highest-attribution content dimensions. Both are pure per-utterance array
ops; corpus-level orchestration lives in the pipeline module.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .explain import AttributionMatrix


@dataclass
class GlobalShapVector:
    """Per-dimension aggregate of content-segment attributions for one run."""

    values: np.ndarray  # (d_c,) signed
    source: str = ""


@dataclass
class NoiseConfig:
    sigma_scale: float = -1.0
    mu_offset: float = 0.0


@dataclass
class CropConfig:
    ratio_r: float = 0.2
    w_cut: float = 1.0

    def validate(self) -> None:
        if not (0.0 <= self.ratio_r <= 1.0):
            raise ValueError("ratio_r must be in [0, 1]")
        if self.w_cut < 0.0:
            raise ValueError("w_cut must be nonnegative")


# published parameter regimes; noise presets name the |sigma| load fraction,
# crop presets the cropping intensity
NOISE_PRESETS: dict[str, NoiseConfig] = {
    "full": NoiseConfig(sigma_scale=-1.0, mu_offset=0.0),
    "moderate": NoiseConfig(sigma_scale=-0.6, mu_offset=0.0),
    "light": NoiseConfig(sigma_scale=-0.3, mu_offset=0.0),
}
CROP_PRESETS: dict[str, CropConfig] = {
    "partial": CropConfig(ratio_r=0.2, w_cut=10.0),
    "complete": CropConfig(ratio_r=0.2, w_cut=17.0),
}


def aggregate_global_shap(attr: AttributionMatrix, source: str = "") -> GlobalShapVector:
    """Signed mean of the content segment across samples.

    Sign is preserved deliberately: negatively attributed dimensions carry
    usable information for filtering too.
    """
    if attr.n_samples == 0:
        raise ValueError("empty attribution matrix")
    return GlobalShapVector(values=attr.content_segment().mean(axis=0), source=source)


def standardize_shap(shap_c: GlobalShapVector) -> np.ndarray:
    """Center and scale to zero mean / unit population std."""
    v = np.asarray(shap_c.values, dtype=np.float64)
    std = float(v.std())
    if std <= 0.0:
        raise ValueError("degenerate SHAP vector: zero variance")
    return (v - v.mean()) / std


def apply_shap_noise(
    content: np.ndarray, n_shap: np.ndarray, config: NoiseConfig
) -> np.ndarray:
    """Add one scaled-and-offset noise row to every frame.

    The (sigma_scale, mu_offset) = (0, 0) configuration returns a bitwise
    copy of the input.
    """
    content = np.asarray(content)
    n_shap = np.asarray(n_shap, dtype=np.float64)
    if content.ndim != 2 or n_shap.ndim != 1 or content.shape[1] != n_shap.size:
        raise ValueError(
            f"dimension mismatch: content {content.shape} vs noise vector {n_shap.shape}"
        )
    if config.sigma_scale == 0.0 and config.mu_offset == 0.0:
        return content.copy()
    loaded = config.sigma_scale * n_shap + config.mu_offset
    return content + loaded[None, :]


def crop_weights(shap_values: np.ndarray, config: CropConfig) -> np.ndarray:
    """Per-dimension crop weights in the raw attribution's own scale.

    The threshold is the linear-interpolation quantile at level (1 - r);
    values at or below it are zeroed (the boundary maps to zero), survivors
    are rescaled so the strongest dimension gets exactly w_cut. If nothing
    positive survives, all weights are zero.
    """
    config.validate()
    v = np.asarray(shap_values, dtype=np.float64)
    threshold = float(np.quantile(v, 1.0 - config.ratio_r))
    cropped = np.where(v > threshold, v, 0.0)
    peak = cropped.max()
    if peak <= 0.0:
        return np.zeros_like(v)
    return config.w_cut * cropped / peak


def apply_shap_crop(
    content: np.ndarray, shap_c: GlobalShapVector, config: CropConfig
) -> np.ndarray:
    """Scale each content dimension by (1 - crop weight).

    w_cut = 0 is the identity; w_cut > 1 inverts the sign of the strongest
    dimensions, which is intentional.
    """
    content = np.asarray(content)
    v = np.asarray(shap_c.values, dtype=np.float64)
    if content.ndim != 2 or content.shape[1] != v.size:
        raise ValueError(
            f"dimension mismatch: content {content.shape} vs shap vector {v.shape}"
        )
    if config.w_cut == 0.0:
        config.validate()
        return content.copy()
    weights = crop_weights(v, config)
    return content * (1.0 - weights)[None, :]
