"""Convolutional classifier with hand-derived gradients."""

from .network import CnnModel, compute_gradients, conv_parameter_count, init_cnn
from .training import predict, predict_batch, train

__all__ = [
    "CnnModel",
    "compute_gradients",
    "conv_parameter_count",
    "init_cnn",
    "predict",
    "predict_batch",
    "train",
]
