"""Multiwavelet neural operator: architecture, training and checkpoints."""
from mwt.model.network import ModelConfig, OperatorModel, backward, forward, forward_2d
from mwt.model.train import (
    Adam,
    EpochRecord,
    TrainConfig,
    TrainResult,
    evaluate,
    history_csv,
    relative_l2,
    relative_l2_grad,
    train,
)

__all__ = [
    "Adam", "EpochRecord", "ModelConfig", "OperatorModel", "TrainConfig", "TrainResult",
    "backward", "evaluate", "forward", "forward_2d", "history_csv", "relative_l2",
    "relative_l2_grad", "train",
]
