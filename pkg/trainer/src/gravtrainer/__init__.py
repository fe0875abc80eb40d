"""Learned inversion of surface gravity maps over the dataset interchange format."""

from .specs import COMPOSITE_WEIGHTS, NetSpec, TrainConfig
from .model import build_model, parameter_count
from .losses import composite_loss, gdl_loss, kernel_misfit, mse
from .train import TrainResult, train, train_dice
from .predict import load_checkpoint, predict

__all__ = [
    "COMPOSITE_WEIGHTS",
    "NetSpec",
    "TrainConfig",
    "TrainResult",
    "build_model",
    "composite_loss",
    "gdl_loss",
    "kernel_misfit",
    "load_checkpoint",
    "mse",
    "parameter_count",
    "predict",
    "train",
    "train_dice",
]
