"""Bag-of-words comparison systems: Multinomial Naive Bayes, linear SVM and NBSVM."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.special import logsumexp
from sklearn.exceptions import ConvergenceWarning
from sklearn.feature_extraction.text import CountVectorizer
from sklearn.linear_model import SGDClassifier
from sklearn.naive_bayes import MultinomialNB

from .corpus import Vocabulary
from .errors import LinearModelError, ValidationError
from .models import LabeledDocument

logger = logging.getLogger(__name__)

LossKind = Literal["hinge", "logistic"]
_SKLEARN_LOSS = {"hinge": "hinge", "logistic": "log_loss"}


def _keep_tokens(tokens: Sequence[str]) -> Sequence[str]:
    return tokens


def _token_vectorizer(**options) -> CountVectorizer:
    """A CountVectorizer over already tokenized documents."""
    return CountVectorizer(
        preprocessor=_keep_tokens,
        tokenizer=list,
        token_pattern=None,
        lowercase=False,
        dtype=np.float64,
        **options,
    )


@dataclass(frozen=True)
class FeatureSpace:
    """Unigram columns follow the vocabulary (without padding); bigrams come after.

    Bigram terms are the two tokens joined by a space.
    """

    vocab: Vocabulary
    bigrams: tuple[str, ...] = ()

    @property
    def unigram_size(self) -> int:
        return self.vocab.size - 1

    @property
    def size(self) -> int:
        return self.unigram_size + len(self.bigrams)

    def terms(self) -> dict[str, int]:
        columns = {word: index - 1 for index, word in enumerate(self.vocab.index_to_word) if index}
        offset = self.unigram_size
        columns.update((pair, offset + i) for i, pair in enumerate(self.bigrams))
        return columns

    def vectorizer(self, binary: bool = False) -> CountVectorizer:
        return _token_vectorizer(
            vocabulary=self.terms(),
            ngram_range=(1, 2) if self.bigrams else (1, 1),
            binary=binary,
        )


def build_feature_space(
    train_docs: Sequence[LabeledDocument],
    vocab: Vocabulary,
    bigrams: bool = False,
    bigram_min_count: int = 2,
) -> FeatureSpace:
    if not bigrams:
        return FeatureSpace(vocab=vocab)
    counter = _token_vectorizer(ngram_range=(2, 2))
    try:
        matrix = counter.fit_transform([doc.tokens for doc in train_docs])
    except ValueError:
        # no document has two tokens
        logger.warning("no bigrams in the training documents")
        return FeatureSpace(vocab=vocab)
    totals = np.asarray(matrix.sum(axis=0)).ravel()
    kept = tuple(str(term) for term in counter.get_feature_names_out()[totals >= bigram_min_count])
    logger.info("feature space: %d unigrams, %d bigrams", vocab.size - 1, len(kept))
    return FeatureSpace(vocab=vocab, bigrams=kept)


@dataclass(frozen=True)
class SparseCounts:
    """Documents as rows of a CSR matrix of term counts (or 0/1 presence)."""

    matrix: sparse.csr_matrix
    labels: np.ndarray
    binary: bool = False

    @property
    def V(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return int(self.matrix.shape[0])

    def binarized(self) -> "SparseCounts":
        matrix = self.matrix.copy()
        matrix.data = np.ones_like(matrix.data)
        return SparseCounts(matrix=matrix, labels=self.labels, binary=True)

    def subset(self, rows: np.ndarray) -> "SparseCounts":
        return SparseCounts(matrix=self.matrix[rows], labels=self.labels[rows], binary=self.binary)


def build_counts(
    docs: Sequence[LabeledDocument], space: FeatureSpace, binary: bool = False
) -> SparseCounts:
    matrix = space.vectorizer(binary).transform([doc.tokens for doc in docs]).tocsr()
    return SparseCounts(
        matrix=matrix,
        labels=np.asarray([doc.label for doc in docs], dtype=np.int64),
        binary=binary,
    )


def _require_two_classes(labels: np.ndarray, system: str) -> None:
    if labels.shape[0] == 0:
        raise LinearModelError(f"{system} needs training documents", reason="empty")
    if np.unique(labels).shape[0] < 2:
        raise LinearModelError(
            f"{system} needs documents of both classes", reason="single_class"
        )


@dataclass(frozen=True)
class MnbModel:
    log_priors: np.ndarray  # (2,)
    log_likelihood: np.ndarray  # (2, V)
    smoothing: float


def train_mnb(counts: SparseCounts, smoothing: float = 1.0) -> MnbModel:
    """log P(w|c) = log((count + s) / (total_c + s V)); priors from class frequencies."""
    if smoothing <= 0:
        raise ValidationError("smoothing must be positive", field="smoothing", value=smoothing)
    _require_two_classes(counts.labels, "MNB")
    classifier = MultinomialNB(alpha=smoothing, force_alpha=True)
    classifier.fit(counts.matrix, counts.labels)
    return MnbModel(
        log_priors=classifier.class_log_prior_.copy(),
        log_likelihood=classifier.feature_log_prob_.copy(),
        smoothing=smoothing,
    )


def mnb_posterior(model: MnbModel, counts: Union[SparseCounts, sparse.spmatrix]) -> np.ndarray:
    matrix = counts.matrix if isinstance(counts, SparseCounts) else counts
    joint = np.asarray(matrix @ model.log_likelihood.T) + model.log_priors
    return np.exp(joint - logsumexp(joint, axis=1, keepdims=True))


def predict_mnb(model: MnbModel, counts: SparseCounts) -> np.ndarray:
    return mnb_posterior(model, counts).argmax(axis=1)


def nb_log_count_ratio(counts: SparseCounts, smoothing: float = 1.0) -> np.ndarray:
    """r = log((p / |p|_1) / (q / |q|_1)) over smoothed per-class presence counts."""
    presence = counts if counts.binary else counts.binarized()
    labels = presence.labels
    p = smoothing + np.asarray(presence.matrix[labels == 1].sum(axis=0)).ravel()
    q = smoothing + np.asarray(presence.matrix[labels == 0].sum(axis=0)).ravel()
    return np.log(p / p.sum()) - np.log(q / q.sum())


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    loss: LossKind
    reg: float
    interpolation: Optional[float] = None


def train_linear(
    features: Union[SparseCounts, sparse.spmatrix],
    labels: Optional[np.ndarray] = None,
    loss: LossKind = "hinge",
    reg: float = 1e-4,
    epochs: int = 15,
    seed: int = 0,
    interpolation: Optional[float] = None,
) -> LinearModel:
    """L2-regularised hinge or logistic loss by stochastic gradient descent.

    With ``interpolation`` the weights become (1 - b) * mean|w| + b * w.
    """
    if isinstance(features, SparseCounts):
        matrix = features.matrix
        labels = features.labels if labels is None else labels
    else:
        matrix = features
    if labels is None:
        raise ValidationError("labels are required for raw feature matrices", field="labels")
    if loss not in _SKLEARN_LOSS:
        raise ValidationError(f"unknown loss '{loss}'", field="loss", value=loss)
    _require_two_classes(labels, "linear model")

    classifier = SGDClassifier(
        loss=_SKLEARN_LOSS[loss],
        penalty="l2",
        alpha=reg,
        max_iter=epochs,
        tol=None,
        shuffle=True,
        random_state=seed % 2**32,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        with np.errstate(over="ignore", invalid="ignore"):
            classifier.fit(matrix, labels)

    weights = classifier.coef_[0].astype(np.float64)
    bias = float(classifier.intercept_[0])
    if not (np.isfinite(weights).all() and math.isfinite(bias)):
        raise LinearModelError(
            "linear model diverged", step=int(classifier.t_), reason="non_finite_weights"
        )
    if interpolation is not None:
        weights = (1.0 - interpolation) * np.abs(weights).mean() + interpolation * weights
    return LinearModel(
        weights=weights, bias=bias, loss=loss, reg=reg, interpolation=interpolation
    )


def decision_values(model: LinearModel, features: Union[SparseCounts, sparse.spmatrix]) -> np.ndarray:
    matrix = features.matrix if isinstance(features, SparseCounts) else features
    return np.asarray(matrix @ model.weights).ravel() + model.bias


def predict_linear(model: LinearModel, features: Union[SparseCounts, sparse.spmatrix]) -> np.ndarray:
    """Class 1 iff w.x + b > 0; a zero score goes to class 0."""
    return (decision_values(model, features) > 0).astype(np.int64)


@dataclass(frozen=True)
class NbsvmModel:
    ratio: np.ndarray
    linear: LinearModel
    smoothing: float


def nbsvm_features(counts: SparseCounts, ratio: np.ndarray) -> sparse.csr_matrix:
    presence = counts if counts.binary else counts.binarized()
    return sparse.csr_matrix(presence.matrix.multiply(ratio[None, :]))


def train_nbsvm(
    counts: SparseCounts,
    smoothing: float = 1.0,
    interpolation: float = 0.25,
    reg: float = 1e-4,
    loss: LossKind = "hinge",
    epochs: int = 15,
    seed: int = 0,
) -> NbsvmModel:
    _require_two_classes(counts.labels, "NBSVM")
    ratio = nb_log_count_ratio(counts, smoothing)
    linear = train_linear(
        nbsvm_features(counts, ratio),
        counts.labels,
        loss=loss,
        reg=reg,
        epochs=epochs,
        seed=seed,
        interpolation=interpolation,
    )
    return NbsvmModel(ratio=ratio, linear=linear, smoothing=smoothing)


def predict_nbsvm(model: NbsvmModel, counts: SparseCounts) -> np.ndarray:
    return predict_linear(model.linear, nbsvm_features(counts, model.ratio))


def tune_svm_regularization(
    counts: SparseCounts,
    regs: Sequence[float] = (1e-4, 1e-3, 1e-2),
    holdout_fraction: float = 0.1,
    seed: int = 0,
    epochs: int = 15,
) -> tuple[float, dict[float, float]]:
    """Pick the strength with the best held-out accuracy; ties keep the earlier value."""
    if not regs:
        raise ValidationError("at least one regularization strength is needed", field="regs")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(counts))
    held = max(1, int(math.ceil(holdout_fraction * len(counts))))
    holdout, fit_part = counts.subset(order[:held]), counts.subset(order[held:])

    scores: dict[float, float] = {}
    best = regs[0]
    for reg in regs:
        model = train_linear(fit_part, loss="hinge", reg=reg, epochs=epochs, seed=seed)
        scores[reg] = float((predict_linear(model, holdout) == holdout.labels).mean())
        logger.info("svm reg=%g held-out accuracy=%.4f", reg, scores[reg])
        if scores[reg] > scores[best]:
            best = reg
    return best, scores


BaselineModel = Union[MnbModel, LinearModel, NbsvmModel]


def dump_mnb(model: MnbModel, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"smoothing\t{model.smoothing!r}\n")
        for c in range(model.log_priors.shape[0]):
            handle.write(f"log_prior\t{c}\t{float(model.log_priors[c])!r}\n")
        for c in range(model.log_likelihood.shape[0]):
            handle.write(f"class\t{c}\n")
            for index, value in enumerate(model.log_likelihood[c]):
                handle.write(f"{index}\t{float(value)!r}\n")


def dump_linear_model(model: LinearModel, path: Path) -> None:
    """Parameters, then the non-zero weights as ``index<TAB>value``."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"loss\t{model.loss}\n")
        handle.write(f"reg\t{model.reg!r}\n")
        if model.interpolation is not None:
            handle.write(f"interpolation\t{model.interpolation!r}\n")
        handle.write(f"bias\t{model.bias!r}\n")
        for index in np.flatnonzero(model.weights):
            handle.write(f"{index}\t{float(model.weights[index])!r}\n")


def save_baseline(model: BaselineModel, path: Path) -> None:
    if isinstance(model, MnbModel):
        meta = {"kind": "mnb", "smoothing": model.smoothing}
        arrays = {"log_priors": model.log_priors, "log_likelihood": model.log_likelihood}
    else:
        linear = model.linear if isinstance(model, NbsvmModel) else model
        meta = {
            "kind": "nbsvm" if isinstance(model, NbsvmModel) else "linear",
            "bias": linear.bias,
            "loss": linear.loss,
            "reg": linear.reg,
            "interpolation": linear.interpolation,
        }
        arrays = {"weights": linear.weights}
        if isinstance(model, NbsvmModel):
            meta["smoothing"] = model.smoothing
            arrays["ratio"] = model.ratio
    with open(path, "wb") as handle:
        np.savez(handle, meta=np.array(json.dumps(meta)), **arrays)


def load_baseline(path: Path) -> BaselineModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        arrays = {name: data[name] for name in data.files if name != "meta"}
    if meta["kind"] == "mnb":
        return MnbModel(
            log_priors=arrays["log_priors"],
            log_likelihood=arrays["log_likelihood"],
            smoothing=meta["smoothing"],
        )
    linear = LinearModel(
        weights=arrays["weights"],
        bias=meta["bias"],
        loss=meta["loss"],
        reg=meta["reg"],
        interpolation=meta["interpolation"],
    )
    if meta["kind"] == "nbsvm":
        return NbsvmModel(ratio=arrays["ratio"], linear=linear, smoothing=meta["smoothing"])
    return linear
