"""Speaker-residue scoring and filtering for speech embedding corpora."""

__version__ = "0.1.0"

from .explain import (
    AccuracyPreconditionError,
    AttributionMatrix,
    ExplainConfig,
    completeness_residual,
    exact_shapley,
    gradient_shap_explain,
    select_baselines,
)
from .filters import (
    CropConfig,
    GlobalShapVector,
    NoiseConfig,
    aggregate_global_shap,
    apply_shap_crop,
    apply_shap_noise,
    standardize_shap,
)
from .mlp import (
    MlpParams,
    TrainConfig,
    TrainReport,
    evaluate_accuracy,
    forward,
    init_mlp,
    input_gradient,
    train_overfit,
)
from .store import (
    CorpusError,
    FusedDataset,
    Manifest,
    UtteranceRecord,
    build_fused_dataset,
    frame_average,
    fuse_sample,
    load_manifest,
)
from .synth import SynthConfig, SynthTruth, generate_synthetic_corpus, load_ground_truth
from .trq import (
    DegenerateAttributionError,
    TrqReport,
    batch_stability,
    compute_trq_report,
    mean_score,
    sum_score,
    sum_score_from_mean,
)

__all__ = [
    "AccuracyPreconditionError",
    "AttributionMatrix",
    "CorpusError",
    "CropConfig",
    "DegenerateAttributionError",
    "ExplainConfig",
    "FusedDataset",
    "GlobalShapVector",
    "Manifest",
    "MlpParams",
    "NoiseConfig",
    "SynthConfig",
    "SynthTruth",
    "TrainConfig",
    "TrainReport",
    "TrqReport",
    "UtteranceRecord",
    "aggregate_global_shap",
    "apply_shap_crop",
    "apply_shap_noise",
    "batch_stability",
    "build_fused_dataset",
    "completeness_residual",
    "compute_trq_report",
    "evaluate_accuracy",
    "exact_shapley",
    "forward",
    "frame_average",
    "fuse_sample",
    "generate_synthetic_corpus",
    "gradient_shap_explain",
    "init_mlp",
    "input_gradient",
    "load_ground_truth",
    "load_manifest",
    "mean_score",
    "select_baselines",
    "standardize_shap",
    "sum_score",
    "sum_score_from_mean",
    "train_overfit",
]
