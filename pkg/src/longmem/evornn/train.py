"""Training: exact reverse-mode gradients, clipped SGD, toy training loop.

`compute_gradients` returns the gradient of the summed NEGATIVE score over
a batch (so duplicating an example doubles it). The training loop scales by
the number of labeled positions, clips by global norm, and applies plain
SGD updates. Loss is reported per labeled position, comparable to log V.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from ..embeddings import SymbolSequence
from ..errors import DomainError, TrainingDivergedError
from .layer import LayerGrads, evo_backward_batch, zero_layer_grads
from .model import ModelForward, ModelParams, forward_with_caches, score_batch


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.2
    clip_norm: float = 1.0
    negatives: int = 16
    steps: int = 1000
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise DomainError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.clip_norm <= 0:
            raise DomainError(f"clip norm must be positive, got {self.clip_norm}")
        if self.negatives < 1:
            raise DomainError(f"negative count must be >= 1, got {self.negatives}")
        if self.steps < 0 or self.batch_size < 1:
            raise DomainError("steps must be >= 0 and batch size >= 1")


@dataclass
class ModelGrads:
    """Gradient arrays mirroring ModelParams."""

    input_table: np.ndarray
    layers: list[LayerGrads]
    decoder_w: np.ndarray
    decoder_b: np.ndarray
    output_table: np.ndarray


def zero_grads(model: ModelParams) -> ModelGrads:
    return ModelGrads(
        input_table=np.zeros_like(model.input_table),
        layers=[zero_layer_grads(layer) for layer in model.layers],
        decoder_w=np.zeros_like(model.decoder_w),
        decoder_b=np.zeros_like(model.decoder_b),
        output_table=np.zeros_like(model.output_table),
    )


def parameter_pairs(model: ModelParams, grads: ModelGrads):
    """Yield (name, parameter, gradient) triples in a fixed order."""
    yield "input_table", model.input_table, grads.input_table
    for i, (layer, lg) in enumerate(zip(model.layers, grads.layers)):
        for s, (cell, cg) in enumerate(zip(layer.cells, lg.cells)):
            names = ("w_update", "b_update", "w_reset", "b_reset", "w_candidate", "b_candidate")
            for name, tensor, grad in zip(names, cell.tensors(), cg):
                yield f"layer{i}.cell{s}.{name}", tensor, grad
        for b, matrix in enumerate(layer.projections.matrices):
            if matrix is not None:
                yield f"layer{i}.projection{b}", matrix, lg.projections[b]
        yield f"layer{i}.init_state", layer.init_state, lg.init_state
    yield "decoder_w", model.decoder_w, grads.decoder_w
    yield "decoder_b", model.decoder_b, grads.decoder_b
    yield "output_table", model.output_table, grads.output_table


def batch_arrays(batch: Sequence[tuple[SymbolSequence, Sequence[int]]], horizon: int):
    """Stack a batch of (sequence, labels) pairs into id and label matrices.

    The model input for each example is its sequence followed by all labels
    but the last (teacher forcing); every labels entry must have H+1 ids.
    """
    if not batch:
        raise DomainError("batch must be non-empty")
    ids_rows = []
    label_rows = []
    for seq, labels in batch:
        labels = list(labels)
        if len(labels) != horizon + 1:
            raise DomainError(
                f"expected {horizon + 1} labels per example, got {len(labels)}"
            )
        ids_rows.append(list(seq.ids) + labels[:-1] if horizon else list(seq.ids))
        label_rows.append(labels)
    lengths = {len(r) for r in ids_rows}
    if len(lengths) > 1:
        raise DomainError("all sequences in a batch must share one length")
    return np.asarray(ids_rows, dtype=np.int64), np.asarray(label_rows, dtype=np.int64)


def sample_negatives(
    rng: np.random.Generator, labels: np.ndarray, vocab: int, count: int
) -> np.ndarray:
    """Uniform negatives without replacement, excluding the paired label.

    Shape (B, J, count). Draws from [0, vocab-1) and shifts ids at or above
    the label by one, which is exactly uniform over the non-label ids.
    """
    if count > vocab - 1:
        raise DomainError(f"cannot draw {count} negatives from {vocab - 1} non-label ids")
    b, j = labels.shape
    keys = rng.random((b, j, vocab - 1))
    order = np.argsort(keys, axis=-1)[..., :count]
    return order + (order >= labels[..., None])


def compute_gradients(
    model: ModelParams,
    batch: Sequence[tuple[SymbolSequence, Sequence[int]]],
    config: TrainConfig,
    negatives: Optional[np.ndarray] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, ModelGrads]:
    """Summed negative score over the batch and its exact gradients.

    When `config.negatives` < V-1 and no negatives are supplied, a sample
    is drawn from `rng` (or a fresh generator seeded by the config).
    """
    ids, labels = batch_arrays(batch, model.horizon)
    vocab = model.output_table.shape[0]
    if negatives is None and config.negatives < vocab - 1:
        if rng is None:
            rng = np.random.default_rng(config.seed)
        negatives = sample_negatives(rng, labels, vocab, config.negatives)
    forward = forward_with_caches(model, ids)
    return gradients_from_forward(model, forward, labels, negatives)


def gradients_from_forward(
    model: ModelParams,
    forward: ModelForward,
    labels: np.ndarray,
    negatives: Optional[np.ndarray],
) -> tuple[float, ModelGrads]:
    score, grad_y, grad_out_table = score_batch(
        forward.decoded, labels, model.output_table, negatives, with_grads=True
    )
    grads = zero_grads(model)
    grads.output_table += grad_out_table
    b, j, _ = grad_y.shape
    grads.decoder_w += forward.decoded_states.reshape(b * j, -1).T @ grad_y.reshape(b * j, -1)
    grads.decoder_b += grad_y.sum(axis=(0, 1))
    total_steps = forward.ids.shape[1]
    prefix = forward.prefix_length
    grad_top: list[Optional[np.ndarray]] = [None] * total_steps
    for offset in range(j):
        grad_top[prefix - 1 + offset] = grad_y[:, offset] @ model.decoder_w.T
    grad_outputs = grad_top
    for layer_index in range(len(model.layers) - 1, -1, -1):
        grad_inputs = evo_backward_batch(
            model.layers[layer_index],
            forward.layer_forwards[layer_index],
            grad_outputs,
            grads.layers[layer_index],
        )
        grad_outputs = grad_inputs
    for t in range(total_steps):
        np.add.at(grads.input_table, forward.ids[:, t], grad_outputs[t])
    return -score, grads


def clip_global_norm(grads: ModelGrads, model: ModelParams, clip_norm: float) -> float:
    """Scale all gradients so the global L2 norm is at most clip_norm."""
    total = 0.0
    for _, _, grad in parameter_pairs(model, grads):
        total += float((grad * grad).sum())
    norm = np.sqrt(total)
    if norm > clip_norm:
        scale = clip_norm / norm
        for _, _, grad in parameter_pairs(model, grads):
            grad *= scale
    return norm


def sgd_step(model: ModelParams, grads: ModelGrads, learning_rate: float) -> None:
    for _, param, grad in parameter_pairs(model, grads):
        param -= learning_rate * grad


@dataclass(frozen=True)
class StepMetrics:
    step: int
    loss: float
    multiply_adds: int
    wall_ms: float


@dataclass
class TrainResult:
    history: list[StepMetrics] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss if self.history else float("nan")

    def moving_average(self, window: int = 100) -> float:
        tail = [m.loss for m in self.history[-window:]]
        return float(np.mean(tail)) if tail else float("nan")


def train_toy(
    model: ModelParams,
    task: Iterable[tuple[SymbolSequence, Sequence[int]]],
    config: TrainConfig,
) -> TrainResult:
    """Clipped-SGD training on a task stream; deterministic given seeds.

    Gradients are scaled by the number of labeled positions in the batch so
    the step size is batch-size-invariant; recorded loss is the mean
    negative log-probability per labeled position. `multiply_adds` is the
    instrumented hidden-to-hidden multiply count of one forward pass
    through one sequence. Aborts with the step index if loss leaves the
    finite range.
    """
    rng = np.random.default_rng(config.seed)
    stream: Iterator = iter(task)
    vocab = model.output_table.shape[0]
    result = TrainResult()
    for step in range(config.steps):
        batch = [next(stream) for _ in range(config.batch_size)]
        started = time.perf_counter()
        ids, labels = batch_arrays(batch, model.horizon)
        negatives = (
            sample_negatives(rng, labels, vocab, config.negatives)
            if config.negatives < vocab - 1
            else None
        )
        forward = forward_with_caches(model, ids)
        neg_score, grads = gradients_from_forward(model, forward, labels, negatives)
        positions = config.batch_size * (model.horizon + 1)
        loss = neg_score / positions
        if not np.isfinite(loss):
            raise TrainingDivergedError(step)
        for _, _, grad in parameter_pairs(model, grads):
            grad /= positions
        clip_global_norm(grads, model, config.clip_norm)
        sgd_step(model, grads, config.learning_rate)
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        result.history.append(
            StepMetrics(
                step=step,
                loss=loss,
                multiply_adds=forward.multiply_adds,
                wall_ms=elapsed_ms,
            )
        )
    return result
