"""Forward and backward passes of the network's building blocks.

The single-example functions (``conv1d_forward``, ``relu``, ``max_pool_1``,
``dropout``, ``dense_softmax``, ``cross_entropy``) are the reference forms; the
``*_batch`` variants operate on (batch, length, width) arrays and are what the
network runs.
"""

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ValidationError

PROBABILITY_FLOOR = 1e-12


def conv1d_forward(inputs: np.ndarray, filt: np.ndarray, bias: float) -> np.ndarray:
    """Pre-activation feature map c_i = w . x[i:i+h] + b of one filter."""
    x, d = inputs.shape
    h = filt.shape[0]
    if filt.shape[1] != d:
        raise ValidationError(
            f"filter width {filt.shape[1]} does not match input width {d}", field="filter"
        )
    if h > x:
        raise ValidationError(
            f"region size {h} exceeds input length {x}", field="filter", constraint="h <= x"
        )
    windows = sliding_window_view(inputs, (h, d))[:, 0]
    return np.einsum("ihd,hd->i", windows, filt) + bias


def relu(values: np.ndarray) -> np.ndarray:
    return np.maximum(values, 0.0)


def max_pool_1(feature_map: np.ndarray) -> tuple[float, int]:
    """Maximum and its first-occurrence index."""
    if feature_map.size == 0:
        raise ValidationError("cannot pool an empty feature map", field="feature_map")
    index = int(np.argmax(feature_map))
    return float(feature_map[index]), index


def dropout_mask(
    shape: tuple[int, ...], rate: float, rng: np.random.Generator
) -> Optional[np.ndarray]:
    """Inverted-dropout scale mask, or None when nothing is dropped."""
    if rate <= 0.0:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def dropout(
    values: np.ndarray, rate: float, training: bool, rng: np.random.Generator
) -> np.ndarray:
    if not 0.0 <= rate < 1.0:
        raise ValidationError("dropout rate must lie in [0, 1)", field="rate", value=rate)
    if not training:
        return values
    mask = dropout_mask(values.shape, rate, rng)
    return values if mask is None else values * mask


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = np.exp(scores - scores.max(axis=-1, keepdims=True))
    return shifted / shifted.sum(axis=-1, keepdims=True)


def dense_softmax(pooled: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """softmax(W_z . f); the dense layer has no bias."""
    return softmax(weights @ pooled)


def cross_entropy(probs: np.ndarray, gold: int) -> float:
    return float(-np.log(max(float(probs[gold]), PROBABILITY_FLOOR)))


def conv_forward_batch(inputs: np.ndarray, filters: np.ndarray, biases: np.ndarray) -> np.ndarray:
    """(B, n, d) inputs, (F, h, d) filters -> (B, n - h + 1, F) pre-activations."""
    n = inputs.shape[1]
    h = filters.shape[1]
    if h > n:
        raise ValidationError(
            f"region size {h} exceeds input length {n}", field="filters", constraint="h <= n"
        )
    m = n - h + 1
    out = np.broadcast_to(biases, (inputs.shape[0], m, filters.shape[0])).copy()
    for j in range(h):
        out += inputs[:, j : j + m, :] @ filters[:, j, :].T
    return out


def conv_backward_batch(
    inputs: np.ndarray, filters: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. inputs, filters and biases of ``conv_forward_batch``."""
    h = filters.shape[1]
    m = grad_out.shape[1]
    grad_inputs = np.zeros_like(inputs)
    grad_filters = np.empty_like(filters)
    for j in range(h):
        window = inputs[:, j : j + m, :]
        grad_filters[:, j, :] = np.tensordot(grad_out, window, axes=([0, 1], [0, 1]))
        grad_inputs[:, j : j + m, :] += grad_out @ filters[:, j, :]
    return grad_inputs, grad_filters, grad_out.sum(axis=(0, 1))


def max_pool_batch(feature_maps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1-max pooling over axis 1 of (B, m, F); returns (B, F) values and argmax."""
    argmax = np.argmax(feature_maps, axis=1)
    pooled = np.take_along_axis(feature_maps, argmax[:, None, :], axis=1)[:, 0, :]
    return pooled, argmax


def max_pool_backward_batch(grad_pooled: np.ndarray, argmax: np.ndarray, m: int) -> np.ndarray:
    batch, filters = grad_pooled.shape
    grad = np.zeros((batch, m, filters))
    np.put_along_axis(grad, argmax[:, None, :], grad_pooled[:, None, :], axis=1)
    return grad
