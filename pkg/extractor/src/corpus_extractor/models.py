"""Supported encoder models: checkpoint ids, extraction layers, widths.

Layer numbers are 1-based transformer-layer outputs chosen for best
content-task performance per model family; "whisper-ppg" uses the complete
encoder output instead of a single inner layer. Whether a given checkpoint
applies waveform normalization before the feature extractor is recorded per
model; getting it wrong degrades (but does not break) extraction.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable


@dataclass
class ModelEntry:
    hf_id: str
    family: str  # "hubert" | "wavlm" | "whisper"
    default_layer: int
    hidden_dim: int
    normalize_input: bool
    config_factory: Callable[[], object]


def _hubert_base_config():
    from transformers import HubertConfig

    return HubertConfig()


def _hubert_large_config():
    from transformers import HubertConfig

    return HubertConfig(
        hidden_size=1024,
        num_hidden_layers=24,
        num_attention_heads=16,
        intermediate_size=4096,
        do_stable_layer_norm=True,
        feat_extract_norm="layer",
        feat_proj_layer_norm=True,
    )


def _wavlm_base_config():
    from transformers import WavLMConfig

    return WavLMConfig()


def _whisper_medium_config():
    from transformers import WhisperConfig

    return WhisperConfig(
        d_model=1024,
        encoder_layers=24,
        encoder_attention_heads=16,
        encoder_ffn_dim=4096,
        decoder_layers=24,
        decoder_attention_heads=16,
        decoder_ffn_dim=4096,
    )


MODEL_REGISTRY: dict[str, ModelEntry] = {
    "hubert-base": ModelEntry(
        "facebook/hubert-base-ls960", "hubert", 9, 768, False, _hubert_base_config
    ),
    "hubert-large": ModelEntry(
        "facebook/hubert-large-ll60k", "hubert", 21, 1024, True, _hubert_large_config
    ),
    "hubert-ch": ModelEntry(
        "TencentGameMate/chinese-hubert-base", "hubert", 9, 768, True, _hubert_base_config
    ),
    # stand-in architecture: the published DPHuBERT checkpoint is structurally
    # pruned, which custom loading code must handle; widths and layer match
    "dphubert": ModelEntry(
        "pyf98/DPHuBERT", "hubert", 12, 768, False, _hubert_base_config
    ),
    "contentvec": ModelEntry(
        "lengyue233/content-vec-best", "hubert", 12, 768, False, _hubert_base_config
    ),
    "wavlm-base-plus": ModelEntry(
        "microsoft/wavlm-base-plus", "wavlm", 12, 768, False, _wavlm_base_config
    ),
    "whisper-ppg": ModelEntry(
        "openai/whisper-medium", "whisper", 24, 1024, False, _whisper_medium_config
    ),
}


@dataclass
class ExtractionSpec:
    model_id: str
    wav_dir: Path
    out_dir: Path
    layer: int | None = None  # None -> the registry default for the model
    device: str = "cpu"

    def entry(self) -> ModelEntry:
        if self.model_id not in MODEL_REGISTRY:
            known = ", ".join(sorted(MODEL_REGISTRY))
            raise ValueError(f"unknown model '{self.model_id}' (known: {known})")
        return MODEL_REGISTRY[self.model_id]

    def resolved_layer(self) -> int:
        return self.layer if self.layer is not None else self.entry().default_layer
