"""The convolutional classifier: parameters, forward pass and analytic gradients."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..embedding import EmbeddingMatrix, FusedDataset
from ..errors import GradientError, ValidationError
from ..validation import ConvSpec, TrainConfig
from .layers import (
    PROBABILITY_FLOOR,
    conv_backward_batch,
    conv_forward_batch,
    dropout_mask,
    max_pool_backward_batch,
    max_pool_batch,
    relu,
    softmax,
)

N_CLASSES = 2


@dataclass
class CnnModel:
    """Embedding table, one filter bank per region size and the dense weights W_z.

    With ``use_topics`` the input width is 2y (word rows plus the document's topic
    vector); without it the model is the plain word-only classifier.
    """

    embedding: np.ndarray  # (V, y)
    filters: list[np.ndarray]  # per region size, (F, h, d)
    biases: list[np.ndarray]  # per region size, (F,)
    dense: np.ndarray  # (C, F * len(region_sizes))
    spec: ConvSpec
    use_topics: bool
    seed: int = 0

    @property
    def y(self) -> int:
        return int(self.embedding.shape[1])

    @property
    def input_width(self) -> int:
        return 2 * self.y if self.use_topics else self.y

    @property
    def n_classes(self) -> int:
        return int(self.dense.shape[0])

    def parameters(self) -> dict[str, np.ndarray]:
        params = {"embedding": self.embedding}
        for i, (filters, biases) in enumerate(zip(self.filters, self.biases)):
            params[f"filters.{i}"] = filters
            params[f"biases.{i}"] = biases
        params["dense"] = self.dense
        return params

    def copy(self) -> "CnnModel":
        return CnnModel(
            embedding=self.embedding.copy(),
            filters=[f.copy() for f in self.filters],
            biases=[b.copy() for b in self.biases],
            dense=self.dense.copy(),
            spec=self.spec,
            use_topics=self.use_topics,
            seed=self.seed,
        )


def conv_parameter_count(spec: ConvSpec) -> int:
    """sum over region sizes of F * (h * d + 1)."""
    if spec.input_width is None:
        raise ValidationError("input_width must be resolved", field="input_width")
    return sum(
        spec.filters_per_size * (h * spec.input_width + 1) for h in spec.region_sizes
    )


def init_cnn(
    emb: EmbeddingMatrix,
    spec: ConvSpec,
    use_topics: bool,
    seed: int = 0,
    scale: float = 0.01,
    n_classes: int = N_CLASSES,
) -> CnnModel:
    """Filters and W_z drawn from U(-scale, scale); biases start at zero."""
    width = 2 * emb.y if use_topics else emb.y
    spec = spec.model_copy(update={"input_width": width})
    rng = np.random.default_rng(seed)
    filters = [
        rng.uniform(-scale, scale, size=(spec.filters_per_size, h, width))
        for h in spec.region_sizes
    ]
    biases = [np.zeros(spec.filters_per_size) for _ in spec.region_sizes]
    dense = rng.uniform(
        -scale, scale, size=(n_classes, spec.filters_per_size * len(spec.region_sizes))
    )
    return CnnModel(
        embedding=emb.vectors.copy(),
        filters=filters,
        biases=biases,
        dense=dense,
        spec=spec,
        use_topics=use_topics,
        seed=seed,
    )


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre_activations: list[np.ndarray]
    argmax: list[np.ndarray]
    pooled: np.ndarray
    mask: Optional[np.ndarray]
    dropped: np.ndarray
    probs: np.ndarray

    def routing(self) -> tuple[np.ndarray, ...]:
        """Pooling positions and ReLU signs that fix which linear piece is active."""
        signs = [
            np.take_along_axis(pre, arg[:, None, :], axis=1)[:, 0, :] > 0
            for pre, arg in zip(self.pre_activations, self.argmax)
        ]
        return tuple(self.argmax) + tuple(signs)


def assemble_inputs(
    model: CnnModel, indices: np.ndarray, topic_vectors: Optional[np.ndarray]
) -> np.ndarray:
    """(B, L) indices -> (B, L, d) rows; topic vectors are repeated along the length."""
    words = model.embedding[indices]
    if not model.use_topics:
        return words
    if topic_vectors is None:
        raise ValidationError("a topic-based model needs topic vectors", field="topic_vectors")
    batch, length = indices.shape
    topics = np.broadcast_to(topic_vectors[:, None, :], (batch, length, model.y))
    return np.concatenate([words, topics], axis=2)


def forward(
    model: CnnModel,
    indices: np.ndarray,
    topic_vectors: Optional[np.ndarray],
    dropout_rate: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> ForwardCache:
    """Dropout is applied only when ``rng`` is given (training mode)."""
    inputs = assemble_inputs(model, indices, topic_vectors)
    pre_activations, argmaxes, pooled_parts = [], [], []
    for filters, biases in zip(model.filters, model.biases):
        pre = conv_forward_batch(inputs, filters, biases)
        pooled, argmax = max_pool_batch(relu(pre))
        pre_activations.append(pre)
        argmaxes.append(argmax)
        pooled_parts.append(pooled)
    pooled = np.concatenate(pooled_parts, axis=1)

    mask = dropout_mask(pooled.shape, dropout_rate, rng) if rng is not None else None
    dropped = pooled if mask is None else pooled * mask
    probs = softmax(dropped @ model.dense.T)
    return ForwardCache(
        inputs=inputs,
        pre_activations=pre_activations,
        argmax=argmaxes,
        pooled=pooled,
        mask=mask,
        dropped=dropped,
        probs=probs,
    )


def mean_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(labels.shape[0]), labels]
    return float(-np.log(np.maximum(picked, PROBABILITY_FLOOR)).mean())


@dataclass
class Gradients:
    grads: dict[str, np.ndarray]
    loss: float
    probs: np.ndarray
    cache: Optional[ForwardCache] = field(default=None, repr=False)


def compute_gradients(
    model: CnnModel,
    batch: FusedDataset,
    config: TrainConfig,
    rng: Optional[np.random.Generator],
) -> Gradients:
    """Exact gradients of the mean cross-entropy over ``batch``.

    One dropout mask per example is drawn from ``rng`` and reused in the backward
    pass. Topic columns are inputs, not parameters, so only the word half of the
    input gradient reaches the embedding table.
    """
    labels = batch.labels
    size = labels.shape[0]
    cache = forward(model, batch.indices, batch.topic_vectors, config.dropout_rate, rng)

    grad_scores = cache.probs.copy()
    grad_scores[np.arange(size), labels] -= 1.0
    grad_scores /= size

    grads: dict[str, np.ndarray] = {"dense": grad_scores.T @ cache.dropped}
    grad_pooled = grad_scores @ model.dense
    if cache.mask is not None:
        grad_pooled = grad_pooled * cache.mask

    filters_per_size = model.spec.filters_per_size
    grad_inputs = np.zeros_like(cache.inputs) if config.fine_tune_embeddings else None
    for i, (filters, pre, argmax) in enumerate(
        zip(model.filters, cache.pre_activations, cache.argmax)
    ):
        part = grad_pooled[:, i * filters_per_size : (i + 1) * filters_per_size]
        grad_pre = max_pool_backward_batch(part, argmax, pre.shape[1]) * (pre > 0)
        d_inputs, d_filters, d_biases = conv_backward_batch(cache.inputs, filters, grad_pre)
        grads[f"filters.{i}"] = d_filters
        grads[f"biases.{i}"] = d_biases
        if grad_inputs is not None:
            grad_inputs += d_inputs

    if grad_inputs is not None:
        grad_embedding = np.zeros_like(model.embedding)
        np.add.at(grad_embedding, batch.indices, grad_inputs[:, :, : model.y])
        grad_embedding[0] = 0.0
        grads["embedding"] = grad_embedding

    for name, grad in grads.items():
        if not np.isfinite(grad).all():
            raise GradientError(group=name)

    return Gradients(
        grads=grads, loss=mean_loss(cache.probs, labels), probs=cache.probs, cache=cache
    )


def check_parameters(model: CnnModel) -> None:
    for name, param in model.parameters().items():
        if not np.isfinite(param).all():
            raise GradientError(group=name)


def save_checkpoint(model: CnnModel, path: Path) -> None:
    meta = {
        "spec": model.spec.model_dump(),
        "use_topics": model.use_topics,
        "seed": model.seed,
        "shapes": {name: list(param.shape) for name, param in model.parameters().items()},
    }
    with open(path, "wb") as handle:
        np.savez(handle, meta=np.array(json.dumps(meta)), **model.parameters())


def load_checkpoint(path: Path) -> CnnModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        params = {name: data[name] for name in meta["shapes"]}
    spec = ConvSpec.model_validate(meta["spec"])
    for name, shape in meta["shapes"].items():
        if list(params[name].shape) != shape:
            raise ValidationError(f"checkpoint tensor '{name}' has the wrong shape", field=name)
    count = len(spec.region_sizes)
    return CnnModel(
        embedding=params["embedding"],
        filters=[params[f"filters.{i}"] for i in range(count)],
        biases=[params[f"biases.{i}"] for i in range(count)],
        dense=params["dense"],
        spec=spec,
        use_topics=bool(meta["use_topics"]),
        seed=int(meta["seed"]),
    )
