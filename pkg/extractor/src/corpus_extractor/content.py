"""Content-embedding extraction via forward hooks on encoder layers."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .audio import TARGET_RATE, read_wav
from .models import ExtractionSpec, ModelEntry


def load_content_model(spec: ExtractionSpec, random_init: bool = False):
    """Instantiate the encoder, pretrained or randomly initialized.

    Random initialization builds the architecture from its config without
    touching the network; useful for offline contract tests and dry runs.
    """
    entry = spec.entry()
    if random_init:
        torch.manual_seed(0)
        config = entry.config_factory()
        if entry.family == "hubert":
            from transformers import HubertModel

            model = HubertModel(config)
        elif entry.family == "wavlm":
            from transformers import WavLMModel

            model = WavLMModel(config)
        else:
            from transformers import WhisperModel

            model = WhisperModel(config)
    else:
        if entry.family == "hubert":
            from transformers import HubertModel

            model = HubertModel.from_pretrained(entry.hf_id)
        elif entry.family == "wavlm":
            from transformers import WavLMModel

            model = WavLMModel.from_pretrained(entry.hf_id)
        else:
            from transformers import WhisperModel

            model = WhisperModel.from_pretrained(entry.hf_id)
    return model.to(spec.device).eval()


def _validate_layer(entry: ModelEntry, model, layer: int) -> None:
    if entry.family == "whisper":
        n_layers = model.config.encoder_layers
    else:
        n_layers = model.config.num_hidden_layers
    if not (1 <= layer <= n_layers):
        raise ValueError(f"layer {layer} out of range for {entry.family} with {n_layers} layers")


def _load_waveform(path: Path, normalize: bool) -> np.ndarray:
    data, rate = read_wav(path)
    if rate != TARGET_RATE:
        raise ValueError(f"{path}: expected {TARGET_RATE} Hz input, got {rate} (preprocess first)")
    mono = data.mean(axis=1)
    if normalize:
        mono = (mono - mono.mean()) / np.sqrt(mono.var() + 1e-7)
    return mono.astype(np.float32)


def _hubert_like_hidden(model, layer: int, waveform: np.ndarray, device: str) -> np.ndarray:
    captured: list[torch.Tensor] = []

    def hook(_module, _inputs, output):
        captured.append(output[0] if isinstance(output, tuple) else output)

    handle = model.encoder.layers[layer - 1].register_forward_hook(hook)
    try:
        with torch.no_grad():
            model(torch.from_numpy(waveform)[None, :].to(device))
    finally:
        handle.remove()
    if not captured:
        raise RuntimeError(f"forward hook on layer {layer} captured nothing")
    return captured[0][0].cpu().numpy()


def _whisper_encoder_hidden(model, waveform: np.ndarray, device: str) -> np.ndarray:
    from transformers import WhisperFeatureExtractor

    extractor = WhisperFeatureExtractor(feature_size=model.config.num_mel_bins)
    features = extractor(
        waveform, sampling_rate=TARGET_RATE, return_tensors="pt"
    ).input_features.to(device)
    with torch.no_grad():
        hidden = model.encoder(features).last_hidden_state[0].cpu().numpy()
    # the extractor pads to 30 s; keep only frames covering the real signal
    # (mel hop 160, conv stride 2 -> one frame per 320 samples)
    n_frames = max(1, int(np.ceil(len(waveform) / 320)))
    return hidden[: min(n_frames, len(hidden))]


def extract_content(
    spec: ExtractionSpec,
    wav_paths: list[Path],
    model=None,
    random_init: bool = False,
) -> list[Path]:
    """One float32 NPY of shape (n_frames, hidden_dim) per input WAV."""
    entry = spec.entry()
    layer = spec.resolved_layer()
    if model is None:
        model = load_content_model(spec, random_init=random_init)
    if entry.family != "whisper":
        _validate_layer(entry, model, layer)

    out_paths = []
    content_dir = Path(spec.out_dir) / "content"
    content_dir.mkdir(parents=True, exist_ok=True)
    for wav in wav_paths:
        waveform = _load_waveform(Path(wav), entry.normalize_input)
        if entry.family == "whisper":
            hidden = _whisper_encoder_hidden(model, waveform, spec.device)
        else:
            hidden = _hubert_like_hidden(model, layer, waveform, spec.device)
        if hidden.ndim != 2 or hidden.shape[1] != entry.hidden_dim:
            raise RuntimeError(
                f"{wav}: unexpected hidden shape {hidden.shape}, wanted (*, {entry.hidden_dim})"
            )
        out = content_dir / (Path(wav).stem + ".npy")
        np.save(out, np.ascontiguousarray(hidden, dtype=np.float32))
        out_paths.append(out)
    return out_paths
