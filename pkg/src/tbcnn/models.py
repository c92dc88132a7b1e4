"""Data models shared across the toolkit."""

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

Split = Literal["train", "test"]


@dataclass(frozen=True)
class LabeledDocument:
    """A tokenized document with its sentiment label."""

    tokens: tuple[str, ...]
    label: int  # 0 = negative, 1 = positive
    doc_id: int
    split: Split = "train"


@dataclass(frozen=True)
class PaddedDocument:
    """A document encoded to exactly L vocabulary indices."""

    indices: np.ndarray  # int64, length L, read-only
    true_length: int
    label: int
    doc_id: int
    split: Split = "train"

    @property
    def length(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class CorpusStatistics:
    """Summary of a document collection."""

    documents: int
    mean_tokens: float
    max_tokens: int
    min_tokens: int
    positives: int
    negatives: int


@dataclass(frozen=True)
class Metrics:
    """Classification metrics in percent, positive class as target."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    warnings: tuple[str, ...] = ()


@dataclass
class SystemResult:
    """One row of the comparison table."""

    system: str
    metrics: Metrics
    seconds: float  # model generation + testing
    details: dict = field(default_factory=dict)


@dataclass
class MetricsReport:
    """Per-system metrics in configuration order."""

    results: list[SystemResult] = field(default_factory=list)
    seed: Optional[int] = None

    def get(self, system: str) -> SystemResult:
        for result in self.results:
            if result.system == system:
                return result
        raise KeyError(system)

    @property
    def systems(self) -> list[str]:
        return [result.system for result in self.results]
