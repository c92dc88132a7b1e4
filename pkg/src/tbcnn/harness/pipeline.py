"""End-to-end experiment: data, topics, embeddings, the five systems and the report."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Any, Iterator, Optional, Union

import numpy as np

from ..baselines import (
    FeatureSpace,
    LinearModel,
    MnbModel,
    NbsvmModel,
    build_counts,
    build_feature_space,
    load_baseline,
    predict_linear,
    predict_mnb,
    predict_nbsvm,
    save_baseline,
    train_linear,
    train_mnb,
    train_nbsvm,
    tune_svm_regularization,
)
from ..config import ExperimentConfig
from ..corpus import (
    EncodedCorpus,
    Vocabulary,
    build_vocabulary,
    corpus_statistics,
    encode_corpus,
    load_dataset,
    save_vocabulary,
    subsample,
)
from ..embedding import (
    EmbeddingMatrix,
    FusedDataset,
    TopicAssigner,
    TopicVectorTable,
    build_topic_table,
    dump_topic_vectors,
    fuse_corpus,
    load_embeddings,
    random_embeddings,
)
from ..errors import StageError, TopicModelError, ValidationError
from ..models import LabeledDocument, MetricsReport, SystemResult
from ..neural.network import CnnModel, init_cnn, load_checkpoint, save_checkpoint
from ..neural.training import predict_batch, train, write_training_log
from ..seeding import derive_seed
from ..topic_model import (
    BagCorpus,
    TopicModel,
    fit_lda,
    load_topic_model,
    save_topic_model,
    sweep_topics,
    top_words,
    write_sweep_report,
)
from ..validation import TrainConfig
from .artifacts import ArtifactStore
from .metrics import compute_metrics
from .report import emit_report

logger = logging.getLogger(__name__)

CNN_SYSTEMS = ("textcnn", "tbcnn")
_LOGGED_KEYWORDS = 10
_SHARED_STAGES = ("data", "topics", "embeddings", "topic_table")
SystemModel = Union[MnbModel, LinearModel, NbsvmModel, CnnModel]


@contextmanager
def stage(name: str, store: Optional[ArtifactStore] = None) -> Iterator[None]:
    """Log a stage boundary; any failure becomes a ``StageError`` and marks the run stale."""
    logger.info("stage '%s' started", name)
    started = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        if store is not None:
            store.mark_stale(name, exc)
        raise StageError(name, exc) from exc
    logger.info("stage '%s' finished in %.1fs", name, time.perf_counter() - started)


@dataclass(frozen=True)
class PreparedData:
    train_docs: list[LabeledDocument]
    test_docs: list[LabeledDocument]
    vocab: Vocabulary
    train: EncodedCorpus
    test: EncodedCorpus


@dataclass(frozen=True)
class TopicContext:
    model: TopicModel
    bag: BagCorpus
    assigner: TopicAssigner


@dataclass(frozen=True)
class TrainedSystem:
    system: str
    model: SystemModel
    fit_seconds: float
    details: dict[str, Any]


def save_encoded(data: PreparedData, store: ArtifactStore) -> None:
    with open(store.corpus, "wb") as handle:
        np.savez_compressed(
            handle,
            **{
                f"{corpus.split}_{name}": getattr(corpus, name)
                for corpus in (data.train, data.test)
                for name in ("indices", "lengths", "labels", "doc_ids")
            },
        )


class Experiment:
    """Lazily builds each stage's products once and shares them between systems.

    TextCNN and TB-CNN read the same encoded corpus, embedding matrix and seeds.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        store: Optional[ArtifactStore] = None,
        reuse_lda: bool = False,
    ):
        self.config = config
        self.store = store
        self.reuse_lda = reuse_lda

    def seed(self, label: str) -> int:
        return derive_seed(self.config.seed, label)

    def with_region_sizes(
        self, region_sizes: tuple[int, ...], store: Optional[ArtifactStore] = None
    ) -> "Experiment":
        """Copy that trains other filter heights on the stage products already built here."""
        cnn = self.config.cnn
        conv = cnn.conv.model_copy(update={"region_sizes": tuple(region_sizes)})
        config = self.config.model_copy(update={"cnn": cnn.model_copy(update={"conv": conv})})
        variant = Experiment(config, store, self.reuse_lda)
        for name in _SHARED_STAGES:
            if name in self.__dict__:
                variant.__dict__[name] = self.__dict__[name]
        return variant

    @cached_property
    def data(self) -> PreparedData:
        config = self.config
        with stage("prepare", self.store):
            if config.data.path is None:
                raise ValidationError("data.path is required", field="data.path")
            train_docs, test_docs = load_dataset(config.data.path, config.data.format)
            if config.data.train_size is not None:
                train_docs = subsample(
                    train_docs, config.data.train_size, self.seed("subsample")
                )
            if config.data.test_size is not None:
                test_docs = subsample(test_docs, config.data.test_size, self.seed("subsample"))
            stats = corpus_statistics(train_docs)
            logger.info(
                "train: %d docs (%d pos / %d neg), mean %.1f tokens, max %d",
                stats.documents,
                stats.positives,
                stats.negatives,
                stats.mean_tokens,
                stats.max_tokens,
            )
            vocab = build_vocabulary(train_docs, config.data.min_count, config.data.max_size)
            length = config.data.max_length
            data = PreparedData(
                train_docs=train_docs,
                test_docs=test_docs,
                vocab=vocab,
                train=encode_corpus(train_docs, vocab, length, "train"),
                test=encode_corpus(test_docs, vocab, length, "test"),
            )
            if self.store is not None:
                self.store.ensure()
                save_vocabulary(vocab, self.store.vocab)
                save_encoded(data, self.store)
        return data

    def _bag(self) -> tuple[BagCorpus, dict[int, int]]:
        """LDA bags of the training documents that keep at least one token."""
        data = self.data
        kept = [doc for doc in data.train_docs if data.vocab.to_indices(doc.tokens).size]
        if len(kept) < len(data.train_docs):
            logger.warning(
                "%d training documents have no vocabulary tokens and are left out of LDA",
                len(data.train_docs) - len(kept),
            )
        rows = {doc.doc_id: row for row, doc in enumerate(kept)}
        return BagCorpus.from_documents(kept, data.vocab), rows

    def fit_topic_model(self, bag: BagCorpus) -> TopicModel:
        lda = self.config.lda
        seed = self.seed("lda")
        if lda.k is not None:
            return fit_lda(bag, lda.lda_config(lda.k, seed))
        result = sweep_topics(
            bag, lda.k_values, lda.lda_config(lda.k_values[0], seed), lda.max_workers
        )
        logger.info("selected k=%d by lowest perplexity", result.best_k)
        if self.store is not None:
            write_sweep_report(result, self.store.lda_sweep)
        if result.best_model is None:
            raise TopicModelError("topic sweep returned no model", k=result.best_k)
        return result.best_model

    @cached_property
    def topics(self) -> TopicContext:
        bag, rows = self._bag()
        with stage("lda", self.store):
            source = self.config.lda.model_path
            store = self.store
            if source is None and self.reuse_lda and store is not None and store.lda_model.exists():
                source = store.lda_model
            if source is not None:
                model = load_topic_model(source)
                if model.M != bag.M or model.vocab_size != bag.vocab_size:
                    raise TopicModelError(
                        f"topic model in {source} does not match the prepared corpus",
                        k=model.k,
                    )
                logger.info("loaded topic model (k=%d) from %s", model.k, source)
            else:
                model = self.fit_topic_model(bag)
                if self.store is not None:
                    save_topic_model(model, self.store.lda_model)
            assigner = TopicAssigner(
                model, rows, self.config.lda.fold_in_sweeps, self.seed("fold_in")
            )
        return TopicContext(model=model, bag=bag, assigner=assigner)

    @cached_property
    def embeddings(self) -> EmbeddingMatrix:
        section = self.config.embedding
        with stage("embedding", self.store):
            if section.path is None:
                logger.warning(
                    "no embedding file configured; using random %d-dim vectors", section.dimension
                )
                return random_embeddings(self.data.vocab, section.dimension, self.seed("embedding"))
            return load_embeddings(
                section.path, self.data.vocab, self.seed("embedding"), section.binary
            )

    @cached_property
    def topic_table(self) -> TopicVectorTable:
        with stage("topic_vectors", self.store):
            table = build_topic_table(
                self.topics.model, self.embeddings, self.config.embedding.keywords
            )
            for t in range(table.k):
                words = top_words(self.topics.model, t, _LOGGED_KEYWORDS, self.data.vocab)
                logger.info("topic %d: %s", t, " ".join(words))
            if self.store is not None:
                dump_topic_vectors(table, self.data.vocab, self.store.topic_vectors)
        return table

    def lda_words(self, docs: list[LabeledDocument]) -> list[np.ndarray]:
        offset = self.topics.model.index_offset
        return [self.data.vocab.to_indices(doc.tokens) - offset for doc in docs]

    def cnn_dataset(self, split: str, use_topics: bool) -> FusedDataset:
        encoded = self.data.train if split == "train" else self.data.test
        if not use_topics:
            return FusedDataset.plain(encoded)
        docs = self.data.train_docs if split == "train" else self.data.test_docs
        dataset, topic_ids = fuse_corpus(
            encoded, self.topic_table, self.topics.assigner, self.lda_words(docs)
        )
        logger.info(
            "%s topic histogram: %s", split, np.bincount(topic_ids, minlength=self.topic_table.k)
        )
        return dataset

    @cached_property
    def unigram_space(self) -> FeatureSpace:
        return build_feature_space(self.data.train_docs, self.data.vocab)

    @cached_property
    def nbsvm_space(self) -> FeatureSpace:
        section = self.config.baselines
        return build_feature_space(
            self.data.train_docs, self.data.vocab, section.bigrams, section.bigram_min_count
        )

    def train_config(self) -> TrainConfig:
        return self.config.cnn.train.model_copy(
            update={
                "shuffle_seed": self.seed("cnn.shuffle"),
                "dropout_seed": self.seed("cnn.dropout"),
                "init_seed": self.seed("cnn.init"),
            }
        )

    def _fit(self, system: str) -> tuple[SystemModel, dict[str, Any]]:
        section = self.config.baselines
        train_docs = self.data.train_docs
        if system == "mnb":
            counts = build_counts(train_docs, self.unigram_space)
            return train_mnb(counts, section.mnb_smoothing), {}
        if system == "bow_svm":
            counts = build_counts(train_docs, self.unigram_space)
            seed = self.seed("svm")
            reg, scores = tune_svm_regularization(
                counts, section.svm_regs, section.holdout_fraction, seed, section.epochs
            )
            model = train_linear(counts, reg=reg, epochs=section.epochs, seed=seed)
            return model, {"reg": reg, "holdout_accuracy": scores}
        if system == "nbsvm":
            counts = build_counts(train_docs, self.nbsvm_space, binary=True)
            model = train_nbsvm(
                counts,
                smoothing=section.nbsvm_smoothing,
                interpolation=section.nbsvm_interpolation,
                reg=section.nbsvm_reg,
                loss=section.nbsvm_loss,
                epochs=section.epochs,
                seed=self.seed("nbsvm"),
            )
            return model, {"bigrams": len(self.nbsvm_space.bigrams)}

        use_topics = system == "tbcnn"
        config = self.train_config()
        initial = init_cnn(
            self.embeddings,
            self.config.cnn.conv,
            use_topics,
            seed=config.init_seed,
            scale=config.init_scale,
        )
        result = train(initial, self.cnn_dataset("train", use_topics), config)
        if self.store is not None:
            write_training_log(result.history, self.store.training_log(system))
        details: dict[str, Any] = {"epochs": len(result.history)}
        if result.history:
            details["final_loss"] = result.history[-1].loss
        if use_topics:
            details["k"] = self.topics.model.k
        return result.model, details

    def _build_shared(self, system: str) -> None:
        """Build the stages a system reads before its clock starts."""
        _ = self.data
        if system in CNN_SYSTEMS:
            _ = self.embeddings
        if system == "tbcnn":
            _ = self.topic_table

    def train_system(self, system: str) -> TrainedSystem:
        """Fit one system; its clock covers only system-specific work."""
        self._build_shared(system)
        with stage(f"train:{system}", self.store):
            started = time.perf_counter()
            model, details = self._fit(system)
            seconds = time.perf_counter() - started
            if self.store is not None:
                self.store.ensure()
                path = self.store.model(system)
                if isinstance(model, CnnModel):
                    save_checkpoint(model, path)
                else:
                    save_baseline(model, path)
                self.store.write_fit_seconds(system, seconds, details)
        logger.info("%s trained in %.1fs", system, seconds)
        return TrainedSystem(system=system, model=model, fit_seconds=seconds, details=details)

    def load_trained(self, system: str) -> TrainedSystem:
        if self.store is None:
            raise ValidationError("loading a trained system needs an output directory")
        path = self.store.model(system)
        if not path.exists():
            raise ValidationError(
                f"no trained model for '{system}' at {path}; run 'train' first",
                field="system",
                value=system,
            )
        model = load_checkpoint(path) if system in CNN_SYSTEMS else load_baseline(path)
        seconds, details = self.store.read_fit_seconds(system)
        return TrainedSystem(system=system, model=model, fit_seconds=seconds, details=details)

    def _predict(self, system: str, model: SystemModel) -> np.ndarray:
        test_docs = self.data.test_docs
        if isinstance(model, CnnModel):
            labels, _ = predict_batch(model, self.cnn_dataset("test", model.use_topics))
            return labels
        if isinstance(model, MnbModel):
            return predict_mnb(model, build_counts(test_docs, self.unigram_space))
        if isinstance(model, NbsvmModel):
            return predict_nbsvm(model, build_counts(test_docs, self.nbsvm_space, binary=True))
        return predict_linear(model, build_counts(test_docs, self.unigram_space))

    def evaluate(self, trained: TrainedSystem) -> SystemResult:
        """Score on the test split; the reported time is fit plus prediction."""
        self._build_shared(trained.system)
        with stage(f"evaluate:{trained.system}", self.store):
            started = time.perf_counter()
            predictions = self._predict(trained.system, trained.model)
            seconds = trained.fit_seconds + time.perf_counter() - started
            result = SystemResult(
                system=trained.system,
                metrics=compute_metrics(predictions, self.data.test.labels),
                seconds=seconds,
                details=trained.details,
            )
            if self.store is not None:
                self.store.ensure()
                self.store.write_result(result)
        logger.info(
            "%s: accuracy %.2f, F1 %.2f, %.1fs",
            result.system,
            result.metrics.accuracy,
            result.metrics.f1,
            result.seconds,
        )
        return result

    def run_system(self, system: str) -> SystemResult:
        return self.evaluate(self.train_system(system))


def run_experiment(config: ExperimentConfig, store: Optional[ArtifactStore] = None) -> MetricsReport:
    """Run every configured system in order and write the report when a store is given."""
    if store is not None:
        store.ensure()
        store.clear_stale()
    experiment = Experiment(config, store)
    report = MetricsReport(seed=config.seed)
    for system in config.systems:
        report.results.append(experiment.run_system(system))
    if store is not None:
        with stage("report", store):
            emit_report(report, store.root)
    return report


def region_label(region_sizes: tuple[int, ...]) -> str:
    return "(" + ",".join(str(h) for h in region_sizes) + ")"


def run_region_sweep(
    config: ExperimentConfig, store: Optional[ArtifactStore] = None, system: str = "tbcnn"
) -> MetricsReport:
    """Train ``system`` once per set in ``cnn.region_sweep``; one report row per set.

    Data, topics and embeddings are built once. Each set's model and metrics go to
    its own sub-store so the main run's artifacts are left alone.
    """
    if system not in CNN_SYSTEMS:
        raise ValidationError(
            f"region sweeps need a convolutional system, got '{system}'",
            field="system",
            value=system,
            constraint=" or ".join(CNN_SYSTEMS),
        )
    if store is not None:
        store.ensure()
        store.clear_stale()
    base = Experiment(config, store)
    base._build_shared(system)
    report = MetricsReport(seed=config.seed)
    for region_sizes in config.cnn.region_sweep:
        run_store = None if store is None else store.region_run(region_sizes).ensure()
        result = base.with_region_sizes(region_sizes, run_store).run_system(system)
        label = f"{system} {region_label(region_sizes)}"
        report.results.append(replace(result, system=label))
    if store is not None:
        with stage("report", store):
            emit_report(report, store.root, stem="region_sweep")
    return report
