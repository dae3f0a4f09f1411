"""EvoRNN: schedule-sized GRU cells with boundary projections.

Public surface of the recurrent-model subpackage.
"""

from .cell import GruCellParams, gru_step, init_cell
from .layer import (
    EvoRnnLayer,
    ProjectionSet,
    evo_forward,
    identity_like,
    init_layer,
)
from .model import (
    ModelParams,
    build_model,
    forward_with_caches,
    load_checkpoint,
    save_checkpoint,
    score_log_prob,
    stacked_forward,
)
from .tasks import lag_distribution, task_lag_recall
from .train import (
    ModelGrads,
    StepMetrics,
    TrainConfig,
    TrainResult,
    clip_global_norm,
    compute_gradients,
    parameter_pairs,
    sample_negatives,
    train_toy,
)

__all__ = [
    "GruCellParams",
    "gru_step",
    "init_cell",
    "EvoRnnLayer",
    "ProjectionSet",
    "evo_forward",
    "identity_like",
    "init_layer",
    "ModelParams",
    "build_model",
    "forward_with_caches",
    "load_checkpoint",
    "save_checkpoint",
    "score_log_prob",
    "stacked_forward",
    "lag_distribution",
    "task_lag_recall",
    "ModelGrads",
    "StepMetrics",
    "TrainConfig",
    "TrainResult",
    "clip_global_norm",
    "compute_gradients",
    "parameter_pairs",
    "sample_negatives",
    "train_toy",
]
