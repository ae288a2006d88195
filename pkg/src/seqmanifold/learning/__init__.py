from .charts import (
    LocalChart,
    build_charts,
    default_epsilon_aug,
    estimate_intrinsic_dim,
    local_pca,
)
from .osa import AlignmentGraph, osa_align, osa_local_align, so_exp
from .augment import AugmentedSample, augment, nearest_neighbor_pairs
from .mlp import MlpModel
from .losses import LossBatch, LossValues, build_loss_batch, compute_losses
from .training import TrainingConfig, TrainingDivergence, TrainResult, train
from .learned import learned_manifold, project_learned

__all__ = [
    "LocalChart",
    "build_charts",
    "default_epsilon_aug",
    "estimate_intrinsic_dim",
    "local_pca",
    "AlignmentGraph",
    "osa_align",
    "osa_local_align",
    "so_exp",
    "AugmentedSample",
    "augment",
    "nearest_neighbor_pairs",
    "MlpModel",
    "LossBatch",
    "LossValues",
    "build_loss_batch",
    "compute_losses",
    "TrainingConfig",
    "TrainingDivergence",
    "TrainResult",
    "train",
    "learned_manifold",
    "project_learned",
]
