"""Pretrained word vectors, per-topic keyword means and the fused x-by-2y inputs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Mapping, Optional, Sequence

import numpy as np
from cachetools import LRUCache

from .corpus import PAD_INDEX, EncodedCorpus, Vocabulary
from .errors import EmbeddingFormatError, TopicResolutionError, ValidationError
from .models import PaddedDocument, Split
from .topic_model import TopicModel, dominant_topic, fold_in_theta, top_keywords

logger = logging.getLogger(__name__)

INIT_RANGE = 0.25
LOW_COVERAGE = 0.5


@dataclass(frozen=True)
class EmbeddingMatrix:
    """V x y word vectors; row 0 is the all-zero padding row."""

    vectors: np.ndarray
    source_coverage: float = 0.0

    @property
    def y(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def size(self) -> int:
        return int(self.vectors.shape[0])


def random_embeddings(vocab: Vocabulary, dim: int, seed: int) -> EmbeddingMatrix:
    """U(-0.25, 0.25) rows for every word, drawn in one block so rows depend only on the seed."""
    rng = np.random.default_rng(seed)
    vectors = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(vocab.size, dim))
    vectors[PAD_INDEX] = 0.0
    return EmbeddingMatrix(vectors=vectors, source_coverage=0.0)


def _parse_header(line: str, path: Path) -> tuple[int, int]:
    parts = line.split()
    try:
        count, dim = (int(part) for part in parts)
    except ValueError:
        raise EmbeddingFormatError(
            f"Malformed header in {path.name}: expected '<count> <dim>', got '{line.strip()}'",
            path=str(path),
            line=1,
        ) from None
    if count < 0 or dim < 1:
        raise EmbeddingFormatError(
            f"Header of {path.name} announces count={count}, dim={dim}", path=str(path), line=1
        )
    return count, dim


def _read_text_vectors(path: Path, vocab: Vocabulary, seed: int) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8", errors="replace") as handle:
        _, dim = _parse_header(handle.readline(), path)
        vectors = random_embeddings(vocab, dim, seed).vectors
        found = np.zeros(vocab.size, dtype=bool)
        for number, line in enumerate(handle, start=2):
            parts = line.rstrip().split(" ")
            if parts == [""]:
                continue
            if len(parts) - 1 != dim:
                raise EmbeddingFormatError(
                    f"Line {number} of {path.name} has {len(parts) - 1} values, expected {dim}",
                    path=str(path),
                    line=number,
                    expected_dim=dim,
                    found_dim=len(parts) - 1,
                )
            index = vocab.index(parts[0])
            if index is None:
                continue
            try:
                vectors[index] = np.asarray(parts[1:], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(
                    f"Line {number} of {path.name} holds a non-numeric value",
                    path=str(path),
                    line=number,
                ) from None
            found[index] = True
    return vectors, found


def _read_binary_word(handle: BinaryIO) -> Optional[bytes]:
    chars = bytearray()
    while True:
        ch = handle.read(1)
        if not ch:
            return bytes(chars) if chars else None
        if ch == b" ":
            return bytes(chars)
        if ch != b"\n":
            chars += ch


def _read_binary_vectors(
    path: Path, vocab: Vocabulary, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as handle:
        count, dim = _parse_header(handle.readline().decode("utf-8", errors="replace"), path)
        vectors = random_embeddings(vocab, dim, seed).vectors
        found = np.zeros(vocab.size, dtype=bool)
        width = np.dtype("<f4").itemsize * dim
        for record in range(1, count + 1):
            word = _read_binary_word(handle)
            if word is None:
                logger.warning("%s ends after %d of %d records", path.name, record - 1, count)
                break
            payload = handle.read(width)
            if len(payload) != width:
                raise EmbeddingFormatError(
                    f"Record {record} of {path.name} is truncated",
                    path=str(path),
                    line=record,
                    expected_dim=dim,
                    found_dim=len(payload) // 4,
                )
            index = vocab.index(word.decode("utf-8", errors="replace"))
            if index is not None:
                vectors[index] = np.frombuffer(payload, dtype="<f4").astype(np.float64)
                found[index] = True
    return vectors, found


def load_embeddings(
    path: Path, vocab: Vocabulary, seed: int = 0, binary: Optional[bool] = None
) -> EmbeddingMatrix:
    """Copy pretrained rows for vocabulary words only; the rest stay seeded-random."""
    path = Path(path)
    if binary is None:
        binary = path.suffix == ".bin"
    try:
        reader = _read_binary_vectors if binary else _read_text_vectors
        vectors, found = reader(path, vocab, seed)
    except OSError as exc:
        raise EmbeddingFormatError(f"Cannot read {path}: {exc}", path=str(path)) from exc

    vectors[PAD_INDEX] = 0.0
    if not np.isfinite(vectors).all():
        raise EmbeddingFormatError(f"{path.name} contains non-finite values", path=str(path))
    coverage = float(found[1:].mean()) if vocab.size > 1 else 0.0
    logger.info(
        "loaded %d-dim vectors for %d of %d vocabulary words (%.1f%%)",
        vectors.shape[1],
        int(found.sum()),
        vocab.size - 1,
        100 * coverage,
    )
    if coverage < LOW_COVERAGE:
        logger.warning("only %.1f%% of the vocabulary has pretrained vectors", 100 * coverage)
    return EmbeddingMatrix(vectors=vectors, source_coverage=coverage)


def save_embeddings(emb: EmbeddingMatrix, vocab: Vocabulary, path: Path) -> None:
    """word2vec text format; values are written with round-trip precision."""
    if emb.size != vocab.size:
        raise ValidationError("embedding rows must match the vocabulary", field="emb")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{vocab.size - 1} {emb.y}\n")
        for index in range(1, vocab.size):
            values = " ".join(repr(float(value)) for value in emb.vectors[index])
            handle.write(f"{vocab.word(index)} {values}\n")


@dataclass(frozen=True)
class TopicVectorTable:
    """k x y topic vectors, each the mean of its topic's keyword embeddings."""

    vectors: np.ndarray
    keywords: np.ndarray  # (k, K) vocabulary indices
    K: int

    @property
    def k(self) -> int:
        return int(self.vectors.shape[0])


def _check_alignment(model: TopicModel, emb: EmbeddingMatrix) -> None:
    if model.vocab_size + model.index_offset != emb.size:
        raise ValidationError(
            "topic model and embedding matrix were built on different vocabularies",
            field="emb",
            constraint=f"{model.vocab_size + model.index_offset} rows",
        )


def keyword_indices(model: TopicModel, t: int, K: int) -> np.ndarray:
    """Vocabulary indices of the top K keywords of topic t."""
    return top_keywords(model, t, K) + model.index_offset


def topic_vector(model: TopicModel, t: int, emb: EmbeddingMatrix, K: int) -> np.ndarray:
    _check_alignment(model, emb)
    return emb.vectors[keyword_indices(model, t, K)].mean(axis=0)


def build_topic_table(model: TopicModel, emb: EmbeddingMatrix, K: int) -> TopicVectorTable:
    _check_alignment(model, emb)
    keywords = np.stack([keyword_indices(model, t, K) for t in range(model.k)])
    vectors = emb.vectors[keywords].mean(axis=1)
    return TopicVectorTable(vectors=vectors, keywords=keywords, K=int(keywords.shape[1]))


def dump_topic_vectors(table: TopicVectorTable, vocab: Vocabulary, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("topic\tkeywords\tvector\n")
        for t in range(table.k):
            words = ",".join(vocab.word(int(index)) for index in table.keywords[t])
            values = " ".join(repr(float(value)) for value in table.vectors[t])
            handle.write(f"{t}\t{words}\t{values}\n")


class TopicAssigner:
    """Gives each document its dominant topic.

    Training documents use their LDA row; anything else is folded in against the
    frozen topic-word estimates and cached.
    """

    CACHE_SIZE = 100_000

    def __init__(
        self,
        model: TopicModel,
        train_rows: Mapping[int, int],
        fold_in_sweeps: int = 50,
        seed: int = 0,
    ) -> None:
        self.model = model
        self.train_rows = dict(train_rows)
        self.fold_in_sweeps = fold_in_sweeps
        self.seed = seed
        self._phi = model.phi_matrix()
        self._cache: LRUCache = LRUCache(maxsize=self.CACHE_SIZE)

    def topic_for(self, split: Split, doc_id: int, words: Optional[np.ndarray] = None) -> int:
        """``words`` are LDA word indices of the document (vocabulary index minus offset).

        Fold-in results are cached per document and word sequence, so a truncated and
        a full view of one document never share an entry.
        """
        if split == "train" and doc_id in self.train_rows:
            return dominant_topic(self.model, self.train_rows[doc_id])
        if words is None:
            raise TopicResolutionError(doc_id=doc_id, split=split)
        words = np.ascontiguousarray(words, dtype=np.int64)
        key = (split, doc_id, words.shape[0], hash(words.tobytes()))
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        rng = np.random.default_rng([self.seed, doc_id, 0 if split == "train" else 1])
        theta = fold_in_theta(self._phi, self.model.alpha, words, self.fold_in_sweeps, rng)
        topic = int(np.argmax(theta))
        self._cache[key] = topic
        return topic

    def padded_words(self, doc: PaddedDocument) -> np.ndarray:
        return doc.indices[: doc.true_length] - self.model.index_offset


@dataclass(frozen=True)
class FusedInput:
    """One document as an x x 2y matrix: word rows left, its topic vector right."""

    indices: np.ndarray
    topic_id: int
    topic_vector: np.ndarray
    matrix: np.ndarray
    label: int
    doc_id: int

    @property
    def x(self) -> int:
        return int(self.matrix.shape[0])


def fuse(
    doc: PaddedDocument,
    emb: EmbeddingMatrix,
    topics: TopicVectorTable,
    assigner: TopicAssigner,
    words: Optional[np.ndarray] = None,
) -> FusedInput:
    if words is None:
        words = assigner.padded_words(doc)
    topic = assigner.topic_for(doc.split, doc.doc_id, words)
    vector = topics.vectors[topic]
    left = emb.vectors[doc.indices]
    right = np.broadcast_to(vector, (doc.length, emb.y))
    return FusedInput(
        indices=doc.indices,
        topic_id=topic,
        topic_vector=vector,
        matrix=np.concatenate([left, right], axis=1),
        label=doc.label,
        doc_id=doc.doc_id,
    )


@dataclass(frozen=True)
class FusedDataset:
    """Array form of many inputs; matrices are assembled per batch by the network.

    ``topic_vectors`` is None for plain word-only inputs.
    """

    indices: np.ndarray  # (N, L)
    labels: np.ndarray  # (N,)
    topic_vectors: Optional[np.ndarray] = None  # (N, y)
    doc_ids: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @property
    def has_topics(self) -> bool:
        return self.topic_vectors is not None

    def subset(self, positions: np.ndarray) -> "FusedDataset":
        return FusedDataset(
            indices=self.indices[positions],
            labels=self.labels[positions],
            topic_vectors=None if self.topic_vectors is None else self.topic_vectors[positions],
            doc_ids=None if self.doc_ids is None else self.doc_ids[positions],
        )

    @classmethod
    def plain(cls, encoded: EncodedCorpus) -> "FusedDataset":
        return cls(indices=encoded.indices, labels=encoded.labels, doc_ids=encoded.doc_ids)


def fuse_corpus(
    encoded: EncodedCorpus,
    topics: TopicVectorTable,
    assigner: TopicAssigner,
    words: Optional[Sequence[np.ndarray]] = None,
) -> tuple[FusedDataset, np.ndarray]:
    """Topic vectors for every document of ``encoded``; returns the dataset and topic ids.

    ``words`` optionally gives each document's full LDA word sequence for fold-in.
    """
    topic_ids = np.empty(len(encoded), dtype=np.int64)
    for position in range(len(encoded)):
        doc_words = words[position] if words is not None else None
        if doc_words is None:
            length = int(encoded.lengths[position])
            doc_words = encoded.indices[position, :length] - assigner.model.index_offset
        topic_ids[position] = assigner.topic_for(
            encoded.split, int(encoded.doc_ids[position]), doc_words
        )
    dataset = FusedDataset(
        indices=encoded.indices,
        labels=encoded.labels,
        topic_vectors=topics.vectors[topic_ids],
        doc_ids=encoded.doc_ids,
    )
    return dataset, topic_ids
