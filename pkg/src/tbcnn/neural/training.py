"""Mini-batch training and prediction for the convolutional classifiers."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..embedding import FusedDataset, FusedInput
from ..errors import GradientError, ValidationError
from ..validation import TrainConfig
from .network import CnnModel, check_parameters, compute_gradients, forward
from .optimizers import make_optimizer

logger = logging.getLogger(__name__)

PREDICT_BATCH = 500


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class TrainResult:
    model: CnnModel
    history: list[EpochStats] = field(default_factory=list)


def train(
    model: CnnModel,
    dataset: FusedDataset,
    config: TrainConfig,
    progress: Optional[Callable[[EpochStats], None]] = None,
) -> TrainResult:
    """Train a copy of ``model``; the argument is left untouched.

    Shuffling and dropout each draw from their own seeded generator, so two calls
    with equal inputs produce identical parameters.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot train on an empty dataset", field="dataset")
    if model.use_topics != dataset.has_topics:
        raise ValidationError(
            "dataset topic vectors do not match the model input width", field="dataset"
        )

    trained = model.copy()
    optimizer = make_optimizer(config)
    shuffle_rng = np.random.default_rng(config.shuffle_seed)
    dropout_rng = np.random.default_rng(config.dropout_seed)
    total = len(dataset)
    result = TrainResult(model=trained)

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(total)
        loss_sum = 0.0
        correct = 0
        for batch_no, start in enumerate(range(0, total, config.batch_size), start=1):
            batch = dataset.subset(order[start : start + config.batch_size])
            try:
                step = compute_gradients(trained, batch, config, dropout_rng)
                optimizer.step(trained.parameters(), step.grads)
                check_parameters(trained)
            except GradientError as exc:
                raise GradientError(exc.details.get("group", "unknown"), epoch, batch_no) from exc
            loss_sum += step.loss * len(batch)
            correct += int((step.probs.argmax(axis=1) == batch.labels).sum())

        stats = EpochStats(epoch=epoch, loss=loss_sum / total, accuracy=correct / total)
        result.history.append(stats)
        logger.info(
            "epoch %d/%d loss=%.4f train_acc=%.4f",
            epoch,
            config.epochs,
            stats.loss,
            stats.accuracy,
        )
        if progress is not None:
            progress(stats)
    return result


def predict(model: CnnModel, item: FusedInput) -> tuple[int, np.ndarray]:
    """Label and class distribution for one input, dropout disabled."""
    topic = item.topic_vector[None, :] if model.use_topics else None
    probs = forward(model, item.indices[None, :], topic).probs[0]
    return int(np.argmax(probs)), probs


def predict_batch(
    model: CnnModel, dataset: FusedDataset, batch_size: int = PREDICT_BATCH
) -> tuple[np.ndarray, np.ndarray]:
    parts = []
    for start in range(0, len(dataset), batch_size):
        batch = dataset.subset(np.arange(start, min(start + batch_size, len(dataset))))
        topics = batch.topic_vectors if model.use_topics else None
        parts.append(forward(model, batch.indices, topics).probs)
    probs = np.concatenate(parts) if parts else np.empty((0, model.n_classes))
    return probs.argmax(axis=1), probs


def write_training_log(history: list[EpochStats], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("epoch\tloss\ttrain_acc\n")
        for stats in history:
            handle.write(f"{stats.epoch}\t{stats.loss:.6f}\t{stats.accuracy:.6f}\n")


def read_training_log(path: Path) -> list[EpochStats]:
    history = []
    with open(path, encoding="utf-8") as handle:
        next(handle)
        for line in handle:
            epoch, loss, accuracy = line.rstrip("\n").split("\t")
            history.append(EpochStats(int(epoch), float(loss), float(accuracy)))
    return history
