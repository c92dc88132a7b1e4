"""Central-difference verification of the analytic gradients."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..embedding import FusedDataset
from ..validation import TrainConfig
from .network import CnnModel, compute_gradients, forward, mean_loss

logger = logging.getLogger(__name__)

TOLERANCE = 1e-4


@dataclass
class GradientCheckReport:
    max_relative_error: dict[str, float] = field(default_factory=dict)
    checked: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    @property
    def worst(self) -> float:
        return max(self.max_relative_error.values(), default=0.0)

    def passed(self, tolerance: float = TOLERANCE) -> bool:
        return self.worst < tolerance


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8)


def _same_routing(left: tuple[np.ndarray, ...], right: tuple[np.ndarray, ...]) -> bool:
    return all(np.array_equal(a, b) for a, b in zip(left, right))


def _coordinates(
    name: str, param: np.ndarray, batch: FusedDataset, limit: Optional[int], rng
) -> list[tuple[int, ...]]:
    if name == "embedding":
        rows = np.unique(batch.indices)
        rows = rows[rows != 0]
        coords = [(int(r), c) for r in rows for c in range(param.shape[1])]
    else:
        coords = [tuple(int(i) for i in idx) for idx in np.ndindex(param.shape)]
    if limit is not None and len(coords) > limit:
        picked = rng.choice(len(coords), size=limit, replace=False)
        coords = [coords[i] for i in sorted(picked)]
    return coords


def gradient_check(
    model: CnnModel,
    batch: FusedDataset,
    config: TrainConfig,
    step: float = 1e-3,
    seed: int = 0,
    max_entries: Optional[int] = None,
) -> GradientCheckReport:
    """Compare analytic gradients with (L(w + h) - L(w - h)) / 2h per parameter group.

    The same dropout masks are used for every loss evaluation. Coordinates whose
    perturbation moves a pooling position or flips a ReLU sign are skipped, since
    the loss is not differentiable there. ``model`` is restored before returning.
    """
    analytic = compute_gradients(model, batch, config, np.random.default_rng(seed))
    baseline = analytic.cache.routing() if analytic.cache is not None else ()
    topics = batch.topic_vectors if model.use_topics else None
    sampler = np.random.default_rng(seed + 1)

    def evaluate() -> tuple[float, tuple[np.ndarray, ...]]:
        cache = forward(
            model, batch.indices, topics, config.dropout_rate, np.random.default_rng(seed)
        )
        return mean_loss(cache.probs, batch.labels), cache.routing()

    report = GradientCheckReport()
    for name, param in model.parameters().items():
        if name not in analytic.grads:
            continue
        worst, checked, skipped = 0.0, 0, 0
        for coord in _coordinates(name, param, batch, max_entries, sampler):
            original = param[coord]
            param[coord] = original + step
            loss_plus, route_plus = evaluate()
            param[coord] = original - step
            loss_minus, route_minus = evaluate()
            param[coord] = original
            if not (_same_routing(route_plus, baseline) and _same_routing(route_minus, baseline)):
                skipped += 1
                continue
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            worst = max(worst, relative_error(float(analytic.grads[name][coord]), numeric))
            checked += 1
        report.max_relative_error[name] = worst
        report.checked[name] = checked
        report.skipped[name] = skipped
        logger.debug("%s: checked=%d skipped=%d max_rel=%.3g", name, checked, skipped, worst)
    return report
