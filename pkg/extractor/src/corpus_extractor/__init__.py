"""Embedding-corpus extraction from pretrained speech encoders."""

__version__ = "0.1.0"

from .audio import preprocess_audio, read_wav, write_wav_mono16
from .content import extract_content, load_content_model
from .manifest import build_corpus, collect_wavs, labels_from_names, speaker_names
from .models import MODEL_REGISTRY, ExtractionSpec, ModelEntry
from .speaker import SPEAKER_DIM, extract_speaker, spectral_embedding

__all__ = [
    "MODEL_REGISTRY",
    "ExtractionSpec",
    "ModelEntry",
    "SPEAKER_DIM",
    "build_corpus",
    "collect_wavs",
    "extract_content",
    "extract_speaker",
    "labels_from_names",
    "load_content_model",
    "preprocess_audio",
    "read_wav",
    "spectral_embedding",
    "speaker_names",
    "write_wav_mono16",
]
