"""Latent Dirichlet Allocation fitted by collapsed Gibbs sampling."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _gibbs
from .corpus import Vocabulary
from .errors import TopicModelError, ValidationError
from .models import LabeledDocument
from .validation import LdaConfig

logger = logging.getLogger(__name__)

_PERPLEXITY_CHUNK = 200_000


@dataclass(frozen=True)
class BagCorpus:
    """Token occurrences of M documents, flattened with per-document offsets."""

    words: np.ndarray  # (total_tokens,) int64, each < vocab_size
    doc_offsets: np.ndarray  # (M + 1,) int64
    vocab_size: int
    index_offset: int = 0  # add to a word index to get its Vocabulary index

    def __post_init__(self) -> None:
        if self.doc_offsets.ndim != 1 or self.doc_offsets.shape[0] < 1:
            raise ValidationError("doc_offsets must hold M + 1 entries", field="doc_offsets")
        if int(self.doc_offsets[-1]) != self.words.shape[0]:
            raise ValidationError("doc_offsets must end at the token count", field="doc_offsets")
        if self.words.size and (self.words.min() < 0 or self.words.max() >= self.vocab_size):
            raise ValidationError(
                "word indices must lie in [0, V)",
                field="words",
                constraint=f"< {self.vocab_size}",
            )

    @classmethod
    def from_sequences(
        cls, docs: Sequence[Sequence[int]], vocab_size: int, index_offset: int = 0
    ) -> "BagCorpus":
        lengths = np.asarray([len(doc) for doc in docs], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        words = (
            np.concatenate([np.asarray(doc, dtype=np.int64) for doc in docs])
            if len(docs) and offsets[-1] > 0
            else np.zeros(0, dtype=np.int64)
        )
        return cls(
            words=words, doc_offsets=offsets, vocab_size=vocab_size, index_offset=index_offset
        )

    @classmethod
    def from_documents(cls, docs: Sequence[LabeledDocument], vocab: Vocabulary) -> "BagCorpus":
        """Full in-vocabulary token sequences; padding is removed from the word space."""
        return cls.from_sequences(
            [vocab.to_indices(doc.tokens) - 1 for doc in docs],
            vocab_size=vocab.size - 1,
            index_offset=1,
        )

    @property
    def M(self) -> int:
        return int(self.doc_offsets.shape[0] - 1)

    @property
    def total_tokens(self) -> int:
        return int(self.words.shape[0])

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.doc_offsets)

    @property
    def doc_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.M, dtype=np.int64), self.doc_lengths)

    def document(self, d: int) -> np.ndarray:
        return self.words[self.doc_offsets[d] : self.doc_offsets[d + 1]]


@dataclass
class TopicModel:
    """Gibbs state of one chain plus the smoothed estimators derived from it."""

    config: LdaConfig
    vocab_size: int
    words: np.ndarray
    doc_offsets: np.ndarray
    z: np.ndarray
    n_dt: np.ndarray  # (M, k)
    n_tw: np.ndarray  # (k, V)
    n_t: np.ndarray  # (k,)
    index_offset: int = 0
    sweeps_done: int = 0
    trace: list[tuple[int, float]] = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.n_t.shape[0])

    @property
    def M(self) -> int:
        return int(self.n_dt.shape[0])

    @property
    def alpha(self) -> float:
        return self.config.resolved_alpha

    @property
    def beta(self) -> float:
        return self.config.beta

    def theta_matrix(self) -> np.ndarray:
        alpha = self.alpha
        lengths = self.n_dt.sum(axis=1, keepdims=True)
        return (self.n_dt + alpha) / (lengths + self.k * alpha)

    def phi_matrix(self) -> np.ndarray:
        beta = self.beta
        return (self.n_tw + beta) / (self.n_t[:, None] + self.vocab_size * beta)

    def position(self, d: int, position: int) -> int:
        start, stop = int(self.doc_offsets[d]), int(self.doc_offsets[d + 1])
        if not 0 <= position < stop - start:
            raise TopicModelError(
                f"Token position {position} outside document {d} of length {stop - start}",
                document=d,
            )
        return start + position


def _check_document(model: TopicModel, d: int) -> None:
    if not 0 <= d < model.M:
        raise TopicModelError(f"Document index {d} out of range [0, {model.M})", document=d)


def _check_topic(model: TopicModel, t: int) -> None:
    if not 0 <= t < model.k:
        raise TopicModelError(f"Topic index {t} out of range [0, {model.k})", k=model.k)


def draw_topic(weights: np.ndarray, u: float) -> int:
    """Pick a topic from unnormalised ``weights`` using one uniform ``u`` in [0, 1)."""
    return int(_gibbs.draw_index(np.cumsum(np.asarray(weights, dtype=np.float64)), u))


def conditional_weights(model: TopicModel, d: int, w: int) -> np.ndarray:
    """Unnormalised collapsed conditional over topics for word ``w`` in document ``d``."""
    return (
        (model.n_dt[d] + model.alpha)
        * (model.n_tw[:, w] + model.beta)
        / (model.n_t + model.vocab_size * model.beta)
    )


def remove_assignment(model: TopicModel, d: int, position: int) -> int:
    """Decrement the counts of one token; returns the topic it held."""
    _check_document(model, d)
    i = model.position(d, position)
    t, w = int(model.z[i]), int(model.words[i])
    model.n_dt[d, t] -= 1
    model.n_tw[t, w] -= 1
    model.n_t[t] -= 1
    return t


def resample_assignment(
    model: TopicModel, d: int, position: int, rng: np.random.Generator
) -> int:
    """Sample a new topic for an already-decremented token and restore the counts."""
    _check_document(model, d)
    i = model.position(d, position)
    w = int(model.words[i])
    t = draw_topic(conditional_weights(model, d, w), rng.random())
    model.z[i] = t
    model.n_dt[d, t] += 1
    model.n_tw[t, w] += 1
    model.n_t[t] += 1
    return t


def check_counts(model: TopicModel) -> None:
    """Raise if the count matrices disagree with the assignment vector."""
    k, V = model.k, model.vocab_size
    doc_of = np.repeat(np.arange(model.M), np.diff(model.doc_offsets))
    n_dt = np.zeros((model.M, k), dtype=np.int64)
    np.add.at(n_dt, (doc_of, model.z), 1)
    n_tw = np.zeros((k, V), dtype=np.int64)
    np.add.at(n_tw, (model.z, model.words), 1)
    if (
        not np.array_equal(n_dt, model.n_dt)
        or not np.array_equal(n_tw, model.n_tw)
        or not np.array_equal(n_tw.sum(axis=1), model.n_t)
    ):
        raise TopicModelError("Gibbs count matrices are inconsistent with assignments", k=k)


def initialize_lda(
    corpus: BagCorpus, config: LdaConfig, rng: Optional[np.random.Generator] = None
) -> TopicModel:
    """Uniform random assignments drawn from the config seed."""
    if corpus.M == 0:
        raise TopicModelError("Cannot fit LDA on an empty corpus", k=config.k)
    empty = np.flatnonzero(corpus.doc_lengths == 0)
    if empty.size:
        raise TopicModelError(
            f"Document {int(empty[0])} has no tokens after vocabulary filtering",
            k=config.k,
            document=int(empty[0]),
        )
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    k = config.k
    z = rng.integers(0, k, size=corpus.total_tokens, dtype=np.int64)
    n_dt = np.zeros((corpus.M, k), dtype=np.int64)
    np.add.at(n_dt, (corpus.doc_of, z), 1)
    n_tw = np.zeros((k, corpus.vocab_size), dtype=np.int64)
    np.add.at(n_tw, (z, corpus.words), 1)
    return TopicModel(
        config=config,
        vocab_size=corpus.vocab_size,
        words=corpus.words.copy(),
        doc_offsets=corpus.doc_offsets.copy(),
        z=z,
        n_dt=n_dt,
        n_tw=n_tw,
        n_t=n_tw.sum(axis=1),
        index_offset=corpus.index_offset,
    )


def run_sweeps(
    model: TopicModel, corpus: BagCorpus, sweeps: int, rng: np.random.Generator
) -> TopicModel:
    config = model.config
    doc_of = corpus.doc_of
    alpha, beta = model.alpha, model.beta
    vbeta = model.vocab_size * beta
    for _ in range(sweeps):
        uniforms = rng.random(corpus.total_tokens)
        _gibbs.gibbs_sweep(
            model.words,
            doc_of,
            model.z,
            model.n_dt,
            model.n_tw,
            model.n_t,
            alpha,
            beta,
            vbeta,
            uniforms,
        )
        model.sweeps_done += 1
        if config.check_counts:
            check_counts(model)
        step = model.sweeps_done
        if step > config.burn_in and step % config.eval_every == 0:
            value = perplexity(model, corpus)
            model.trace.append((step, value))
            logger.info("k=%d sweep %d/%d perplexity %.3f", model.k, step, config.iterations, value)
        else:
            logger.debug("k=%d sweep %d done", model.k, step)
    return model


def fit_lda(corpus: BagCorpus, config: LdaConfig) -> TopicModel:
    rng = np.random.default_rng(config.seed)
    model = initialize_lda(corpus, config, rng)
    logger.info(
        "fitting LDA: k=%d alpha=%.4g beta=%.4g on %d docs / %d tokens, %d sweeps",
        config.k,
        model.alpha,
        model.beta,
        corpus.M,
        corpus.total_tokens,
        config.iterations,
    )
    return run_sweeps(model, corpus, config.iterations, rng)


def estimate_theta(model: TopicModel, d: int) -> np.ndarray:
    _check_document(model, d)
    counts = model.n_dt[d]
    return (counts + model.alpha) / (counts.sum() + model.k * model.alpha)


def estimate_phi(model: TopicModel, t: int) -> np.ndarray:
    _check_topic(model, t)
    return (model.n_tw[t] + model.beta) / (model.n_t[t] + model.vocab_size * model.beta)


def perplexity(model: TopicModel, corpus: BagCorpus) -> float:
    """exp of the negative mean per-token log-likelihood under point estimates."""
    if corpus.total_tokens == 0:
        raise TopicModelError("Cannot compute perplexity of an empty corpus", k=model.k)
    if corpus.M != model.M:
        raise TopicModelError(
            f"Corpus has {corpus.M} documents but the model was fitted on {model.M}", k=model.k
        )
    theta = model.theta_matrix()
    phi = model.phi_matrix()
    doc_of = corpus.doc_of
    log_likelihood = 0.0
    for start in range(0, corpus.total_tokens, _PERPLEXITY_CHUNK):
        stop = start + _PERPLEXITY_CHUNK
        words = corpus.words[start:stop]
        probs = np.einsum("ik,ki->i", theta[doc_of[start:stop]], phi[:, words])
        log_likelihood += float(np.log(probs).sum())
    return float(np.exp(-log_likelihood / corpus.total_tokens))


def top_keywords(model: TopicModel, t: int, K: int) -> np.ndarray:
    """Word indices of the K most probable words of topic t; ties go to the lower index."""
    if K < 1:
        raise ValidationError("K must be at least 1", field="K", value=K, constraint=">= 1")
    phi = estimate_phi(model, t)
    return np.argsort(-phi, kind="stable")[:K]


def top_words(model: TopicModel, t: int, K: int, vocab: Vocabulary) -> list[str]:
    return [vocab.word(int(w) + model.index_offset) for w in top_keywords(model, t, K)]


def dominant_topic(model: TopicModel, d: int) -> int:
    return int(np.argmax(estimate_theta(model, d)))


def fold_in_theta(
    phi: np.ndarray,
    alpha: float,
    words: np.ndarray,
    sweeps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Gibbs over one unseen document against a frozen topic-word matrix."""
    k = phi.shape[0]
    words = np.asarray(words, dtype=np.int64)
    if words.size == 0:
        return np.full(k, 1.0 / k)
    z = rng.integers(0, k, size=words.shape[0], dtype=np.int64)
    n_d = np.bincount(z, minlength=k).astype(np.int64)
    uniforms = rng.random((sweeps, words.shape[0]))
    _gibbs.fold_in_sweeps(np.ascontiguousarray(phi[:, words]), z, n_d, alpha, uniforms)
    return (n_d + alpha) / (words.shape[0] + k * alpha)


def fold_in(model: TopicModel, words: np.ndarray, sweeps: int = 50, seed: int = 0) -> np.ndarray:
    return fold_in_theta(
        model.phi_matrix(), model.alpha, words, sweeps, np.random.default_rng(seed)
    )


def topic_purity(model: TopicModel, labels: Sequence[int]) -> float:
    """Share of documents whose dominant topic agrees with the majority label of that topic."""
    labels = np.asarray(labels)
    if labels.shape[0] != model.M:
        raise ValidationError("need one label per document", field="labels")
    dominant = np.argmax(model.theta_matrix(), axis=1)
    agree = 0
    for t in range(model.k):
        members = labels[dominant == t]
        if members.size:
            agree += int(np.bincount(members).max())
    return agree / model.M


@dataclass(frozen=True)
class SweepResult:
    rows: list[tuple[int, float]]
    best_k: int
    best_model: Optional[TopicModel] = None


def _fit_and_score(corpus: BagCorpus, config: LdaConfig) -> tuple[TopicModel, float]:
    try:
        model = fit_lda(corpus, config)
        return model, perplexity(model, corpus)
    except Exception as exc:
        raise TopicModelError(f"LDA fit for k={config.k} failed: {exc}", k=config.k) from exc


def sweep_topics(
    corpus: BagCorpus,
    k_values: Sequence[int],
    template: LdaConfig,
    max_workers: int = 1,
) -> SweepResult:
    """Fit one chain per k with the same seed and budget; select the lowest perplexity."""
    if not k_values:
        raise ValidationError("k_values must not be empty", field="k_values")
    configs = [
        LdaConfig.model_validate({**template.model_dump(), "k": int(k)}) for k in k_values
    ]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            fitted = pool.map(_fit_and_score, [corpus] * len(configs), configs)
            return _select_best(configs, fitted)
    return _select_best(configs, (_fit_and_score(corpus, config) for config in configs))


def _select_best(
    configs: Sequence[LdaConfig], fitted: Iterable[tuple[TopicModel, float]]
) -> SweepResult:
    """Consume chains as they finish; only the lowest-perplexity model stays referenced."""
    rows: list[tuple[int, float]] = []
    best_model: TopicModel | None = None
    best_k, best_score = configs[0].k, np.inf
    for config, (model, score) in zip(configs, fitted):
        logger.info("sweep k=%d perplexity=%.3f", config.k, score)
        rows.append((config.k, score))
        if best_model is None or score < best_score:
            best_model, best_k, best_score = model, config.k, score
    assert best_model is not None
    return SweepResult(rows=rows, best_k=best_k, best_model=best_model)


def write_sweep_report(result: SweepResult, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("k\tperplexity\n")
        for k, score in result.rows:
            handle.write(f"{k}\t{score:.3f}\n")


def read_sweep_report(path: Path) -> list[tuple[int, float]]:
    rows: list[tuple[int, float]] = []
    with open(path, encoding="utf-8") as handle:
        next(handle, None)
        for line in handle:
            k, score = line.rstrip("\n").split("\t")
            rows.append((int(k), float(score)))
    return rows


def save_topic_model(model: TopicModel, path: Path) -> None:
    meta = {
        "config": model.config.model_dump(),
        "vocab_size": model.vocab_size,
        "index_offset": model.index_offset,
        "M": model.M,
        "k": model.k,
        "sweeps_done": model.sweeps_done,
        "trace": model.trace,
    }
    with open(path, "wb") as handle:
        np.savez_compressed(
            handle,
            meta=np.array(json.dumps(meta)),
            words=model.words,
            doc_offsets=model.doc_offsets,
            z=model.z,
            n_dt=model.n_dt,
            n_tw=model.n_tw,
        )


def load_topic_model(path: Path) -> TopicModel:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            arrays = {name: data[name] for name in ("words", "doc_offsets", "z", "n_dt", "n_tw")}
    except (OSError, KeyError, ValueError) as exc:
        raise TopicModelError(f"Cannot load topic model from {path}: {exc}") from exc

    n_dt, n_tw = arrays["n_dt"], arrays["n_tw"]
    if n_dt.shape != (meta["M"], meta["k"]) or n_tw.shape != (meta["k"], meta["vocab_size"]):
        raise TopicModelError(f"Topic model file {path} has inconsistent shapes", k=meta["k"])
    return TopicModel(
        config=LdaConfig.model_validate(meta["config"]),
        vocab_size=int(meta["vocab_size"]),
        words=arrays["words"],
        doc_offsets=arrays["doc_offsets"],
        z=arrays["z"],
        n_dt=n_dt,
        n_tw=n_tw,
        n_t=n_tw.sum(axis=1),
        index_offset=int(meta["index_offset"]),
        sweeps_done=int(meta["sweeps_done"]),
        trace=[(int(step), float(value)) for step, value in meta["trace"]],
    )
