"""Speaker-classification MLP: four fully connected layers with ReLU.

The network is trained to memorize its training set (the attribution stage
requires perfect accuracy), so there is deliberately no regularization.
Everything is plain numpy; forward, backward, and input gradients are exact.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .seeding import INIT, TRAIN_SHUFFLE, derive_rng
from .store import FusedDataset

N_LAYERS = 4
CHECKPOINT_MAGIC = b"TPMLP1"


@dataclass
class MlpParams:
    layer_dims: list[int]  # [d_in, h1, h2, h3, n_classes]
    weights: list[np.ndarray]  # weights[i] has shape (layer_dims[i+1], layer_dims[i])
    biases: list[np.ndarray]

    @property
    def d_in(self) -> int:
        return self.layer_dims[0]

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    max_epochs: int = 500
    target_accuracy: float = 1.0
    seed: int = 0
    hidden_dims: tuple[int, int, int] = (512, 256, 128)
    batch_size: int = 256


@dataclass
class TrainReport:
    final_accuracy: float
    epochs_run: int
    final_loss: float
    target_accuracy: float

    @property
    def reached_target(self) -> bool:
        return self.final_accuracy >= self.target_accuracy


def init_mlp(layer_dims: list[int], seed: int) -> MlpParams:
    """Fan-in-scaled zero-mean Gaussian weights, zero biases, seeded."""
    if len(layer_dims) != N_LAYERS + 1:
        raise ValueError(f"expected {N_LAYERS + 1} layer dims, got {len(layer_dims)}")
    if any(d <= 0 for d in layer_dims):
        raise ValueError(f"layer dims must be positive, got {layer_dims}")
    rng = derive_rng(seed, INIT)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.standard_normal((fan_out, fan_in)) * scale)
        biases.append(np.zeros(fan_out))
    return MlpParams(list(layer_dims), weights, biases)


def _check_input(params: MlpParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.d_in:
        raise ValueError(f"input dim {x.shape[-1]} != network input dim {params.d_in}")
    return x


def forward_batch(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Logits for a batch of rows, shape (n, n_classes)."""
    a = _check_input(params, np.atleast_2d(x))
    for i in range(N_LAYERS - 1):
        a = np.maximum(a @ params.weights[i].T + params.biases[i], 0.0)
    return a @ params.weights[-1].T + params.biases[-1]


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Logits for a single input vector."""
    x = _check_input(params, x)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    return forward_batch(params, x[None, :])[0]


def _forward_cached(params: MlpParams, x: np.ndarray):
    """Forward pass keeping post-activation values for backprop."""
    acts = [x]
    a = x
    for i in range(N_LAYERS - 1):
        a = np.maximum(a @ params.weights[i].T + params.biases[i], 0.0)
        acts.append(a)
    logits = a @ params.weights[-1].T + params.biases[-1]
    return logits, acts


def input_gradient_batch(
    params: MlpParams, x: np.ndarray, class_indices: np.ndarray
) -> np.ndarray:
    """d logits[i, class_indices[i]] / d x[i] for every row i.

    The ReLU subgradient at exactly zero is taken as zero.
    """
    x = _check_input(params, np.atleast_2d(x))
    class_indices = np.asarray(class_indices, dtype=np.int64)
    if np.any(class_indices < 0) or np.any(class_indices >= params.n_classes):
        raise ValueError("class index out of range")
    _, acts = _forward_cached(params, x)
    g = params.weights[-1][class_indices]  # (n, h3)
    for i in range(N_LAYERS - 2, -1, -1):
        g = g * (acts[i + 1] > 0.0)
        g = g @ params.weights[i]
    return g


def input_gradient(params: MlpParams, x: np.ndarray, class_index: int) -> np.ndarray:
    """Exact gradient of one logit with respect to a single input vector."""
    x = _check_input(params, x)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    return input_gradient_batch(params, x[None, :], np.array([class_index]))[0]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def mean_cross_entropy(params: MlpParams, features: np.ndarray, labels: np.ndarray) -> float:
    logits = forward_batch(params, features)
    shifted = logits - logits.max(axis=1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(len(labels)), labels]
    return float(np.mean(logz - picked))


def evaluate_accuracy(params: MlpParams, dataset: FusedDataset) -> float:
    """Fraction of rows whose argmax logit matches the label.

    np.argmax resolves ties toward the lowest class index, which is the
    tie-break rule this metric is defined with.
    """
    if dataset.n_samples == 0:
        raise ValueError("empty dataset")
    preds = np.argmax(forward_batch(params, dataset.features), axis=1)
    return float(np.mean(preds == dataset.labels))


def train_overfit(dataset: FusedDataset, config: TrainConfig) -> tuple[MlpParams, TrainReport]:
    """Mini-batch gradient descent until training accuracy hits the target.

    Stops at the first epoch whose full-batch accuracy reaches
    ``config.target_accuracy``, or after ``config.max_epochs``. Failing to
    reach the target is not an exception here; callers that require perfect
    accuracy must check ``TrainReport.reached_target``. Assumes every class
    a caller cares about is represented; corpus loading enforces label
    coverage, so uncovered classes only arise with hand-built datasets.
    """
    if dataset.n_samples == 0:
        raise ValueError("empty dataset")
    n_classes = dataset.n_classes
    if not (0.0 < config.target_accuracy <= 1.0):
        raise ValueError("target_accuracy must be in (0, 1]")

    x = dataset.features
    y = dataset.labels
    n = dataset.n_samples
    dims = [x.shape[1], *config.hidden_dims, n_classes]
    params = init_mlp(dims, config.seed)
    shuffle_rng = derive_rng(config.seed, TRAIN_SHUFFLE)
    lr = config.learning_rate

    epochs_run = 0
    accuracy = evaluate_accuracy(params, dataset)
    while accuracy < config.target_accuracy and epochs_run < config.max_epochs:
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            bx, by = x[idx], y[idx]
            logits, acts = _forward_cached(params, bx)
            delta = _softmax(logits)
            delta[np.arange(len(by)), by] -= 1.0
            delta /= len(by)
            for i in range(N_LAYERS - 1, -1, -1):
                grad_w = delta.T @ acts[i]
                grad_b = delta.sum(axis=0)
                if i > 0:
                    delta = (delta @ params.weights[i]) * (acts[i] > 0.0)
                params.weights[i] -= lr * grad_w
                params.biases[i] -= lr * grad_b
        epochs_run += 1
        accuracy = evaluate_accuracy(params, dataset)

    report = TrainReport(
        final_accuracy=accuracy,
        epochs_run=epochs_run,
        final_loss=mean_cross_entropy(params, x, y),
        target_accuracy=config.target_accuracy,
    )
    return params, report


def save_mlp(params: MlpParams, path: Path | str) -> None:
    """Checkpoint: magic bytes, layer dims, then float32 weight/bias payloads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(params.layer_dims)))
        fh.write(struct.pack(f"<{len(params.layer_dims)}I", *params.layer_dims))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def load_mlp(path: Path | str) -> MlpParams:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a classifier checkpoint: {path}")
        (n_dims,) = struct.unpack("<I", fh.read(4))
        dims = list(struct.unpack(f"<{n_dims}I", fh.read(4 * n_dims)))
        if n_dims != N_LAYERS + 1:
            raise ValueError(f"checkpoint holds {n_dims} layer dims, expected {N_LAYERS + 1}")
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            w = np.frombuffer(fh.read(4 * fan_out * fan_in), dtype="<f4")
            weights.append(w.reshape(fan_out, fan_in).astype(np.float64))
            b = np.frombuffer(fh.read(4 * fan_out), dtype="<f4")
            biases.append(b.astype(np.float64))
    return MlpParams(dims, weights, biases)
