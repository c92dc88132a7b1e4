"""Dataset ingestion, tokenization, vocabulary construction and fixed-length encoding."""

from __future__ import annotations

import logging
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np

from .errors import DatasetError, ValidationError, VocabularyError
from .models import CorpusStatistics, LabeledDocument, PaddedDocument, Split

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
PAD_INDEX = 0
LABEL_TOKENS = {"pos": 1, "neg": 0, "1": 1, "0": 0}
SPLITS: tuple[Split, Split] = ("train", "test")
DELIMITED_SUFFIXES = (".tsv", ".txt")

_BREAK_RE = re.compile(r"<br\s*/?>", re.IGNORECASE)
_WORD_RE = re.compile(r"[^\W_]+")

TokensLike = Union[LabeledDocument, Sequence[str]]


def tokenize(text: str) -> list[str]:
    """Lowercase, drop HTML line breaks and punctuation, keep word order."""
    return _WORD_RE.findall(_BREAK_RE.sub(" ", text).lower())


@dataclass(frozen=True)
class Vocabulary:
    """Bidirectional word/index map; index 0 is the padding token."""

    index_to_word: tuple[str, ...]
    counts: tuple[int, ...]
    word_to_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.index_to_word or self.index_to_word[PAD_INDEX] != PAD_TOKEN:
            raise ValueError("index 0 must hold the padding token")
        if len(self.counts) != len(self.index_to_word):
            raise ValueError("counts must align with index_to_word")
        mapping = {word: index for index, word in enumerate(self.index_to_word)}
        if len(mapping) != len(self.index_to_word):
            raise ValueError("vocabulary words must be unique")
        object.__setattr__(self, "word_to_index", mapping)

    @property
    def pad_index(self) -> int:
        return PAD_INDEX

    @property
    def size(self) -> int:
        return len(self.index_to_word)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, word: object) -> bool:
        return word in self.word_to_index and word != PAD_TOKEN

    def index(self, word: str) -> Optional[int]:
        if word == PAD_TOKEN:
            return None
        return self.word_to_index.get(word)

    def word(self, index: int) -> str:
        return self.index_to_word[index]

    def to_indices(self, tokens: Iterable[str]) -> np.ndarray:
        """In-vocabulary indices of ``tokens`` in order; OOV tokens are dropped."""
        lookup = self.word_to_index
        ids = [lookup[token] for token in tokens if token in lookup and token != PAD_TOKEN]
        return np.asarray(ids, dtype=np.int64)


def _tokens_of(doc: TokensLike) -> Sequence[str]:
    return doc.tokens if isinstance(doc, LabeledDocument) else doc


def build_vocabulary(
    docs: Sequence[TokensLike], min_count: int = 2, max_size: int = 30000
) -> Vocabulary:
    """Rank words by frequency (ties lexicographic) and keep at most ``max_size - 1``."""
    if not docs:
        raise ValidationError("Cannot build a vocabulary from no documents", field="docs")
    if min_count < 1:
        raise ValidationError(
            "min_count must be at least 1", field="min_count", value=min_count, constraint=">= 1"
        )
    frequencies: Counter[str] = Counter()
    for doc in docs:
        frequencies.update(_tokens_of(doc))

    ranked = sorted(
        ((word, count) for word, count in frequencies.items() if count >= min_count),
        key=lambda item: (-item[1], item[0]),
    )[: max(max_size - 1, 0)]
    if not ranked:
        raise VocabularyError(min_count=min_count, max_size=max_size)

    words = (PAD_TOKEN,) + tuple(word for word, _ in ranked)
    counts = (0,) + tuple(count for _, count in ranked)
    logger.info(
        "built vocabulary of %d words (min_count=%d, %d distinct tokens seen)",
        len(ranked),
        min_count,
        len(frequencies),
    )
    return Vocabulary(index_to_word=words, counts=counts)


def encode(doc: LabeledDocument, vocab: Vocabulary, length: int) -> PaddedDocument:
    """Map tokens to indices, drop OOV, then truncate or right-pad to ``length``."""
    if length < 1:
        raise ValidationError("length must be at least 1", field="length", value=length)
    ids = vocab.to_indices(doc.tokens)
    true_length = min(ids.shape[0], length)
    indices = np.full(length, PAD_INDEX, dtype=np.int64)
    indices[:true_length] = ids[:true_length]
    indices.setflags(write=False)
    return PaddedDocument(
        indices=indices,
        true_length=int(true_length),
        label=doc.label,
        doc_id=doc.doc_id,
        split=doc.split,
    )


@dataclass(frozen=True)
class EncodedCorpus:
    """Many padded documents stacked into one N x L index matrix."""

    indices: np.ndarray  # (N, L) int64
    lengths: np.ndarray  # (N,)
    labels: np.ndarray  # (N,)
    doc_ids: np.ndarray  # (N,)
    split: Split = "train"

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @property
    def max_length(self) -> int:
        return int(self.indices.shape[1])

    @property
    def empty_documents(self) -> int:
        return int(np.count_nonzero(self.lengths == 0))

    def document(self, position: int) -> PaddedDocument:
        indices = self.indices[position].copy()
        indices.setflags(write=False)
        return PaddedDocument(
            indices=indices,
            true_length=int(self.lengths[position]),
            label=int(self.labels[position]),
            doc_id=int(self.doc_ids[position]),
            split=self.split,
        )


def encode_corpus(
    docs: Sequence[LabeledDocument], vocab: Vocabulary, length: int, split: Split = "train"
) -> EncodedCorpus:
    encoded = [encode(doc, vocab, length) for doc in docs]
    if encoded:
        indices = np.stack([doc.indices for doc in encoded])
    else:
        indices = np.zeros((0, length), dtype=np.int64)
    corpus = EncodedCorpus(
        indices=indices,
        lengths=np.asarray([doc.true_length for doc in encoded], dtype=np.int64),
        labels=np.asarray([doc.label for doc in encoded], dtype=np.int64),
        doc_ids=np.asarray([doc.doc_id for doc in encoded], dtype=np.int64),
        split=split,
    )
    if corpus.empty_documents:
        logger.warning(
            "%d %s documents have no in-vocabulary tokens and encode to padding only",
            corpus.empty_documents,
            split,
        )
    return corpus


def _parse_label(token: str, path: Path, line: Optional[int] = None) -> int:
    label = LABEL_TOKENS.get(token.strip().lower())
    if label is None:
        where = f"{path.name}:{line}" if line is not None else path.name
        raise DatasetError(
            f"Unknown label '{token}' in {where}; expected pos/neg",
            path=str(path),
            line=line,
            label=token,
        )
    return label


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DatasetError(f"Cannot read {path.name}: {exc}", path=str(path)) from exc


def _build_documents(
    rows: Iterable[tuple[int, str]], split: Split, source: Path
) -> list[LabeledDocument]:
    docs: list[LabeledDocument] = []
    skipped = 0
    for label, text in rows:
        tokens = tokenize(text)
        if not tokens:
            skipped += 1
            continue
        docs.append(
            LabeledDocument(tokens=tuple(tokens), label=label, doc_id=len(docs), split=split)
        )
    if skipped:
        logger.warning("skipped %d empty documents in %s", skipped, source)
    return docs


def read_delimited(path: Path, split: Split = "train") -> list[LabeledDocument]:
    """Read ``<label>\\t<text>`` records, one per line."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"Dataset file not found: {path}", path=str(path))
    rows: list[tuple[int, str]] = []
    for number, line in enumerate(_read_text(path).splitlines(), start=1):
        if not line.strip():
            continue
        token, sep, text = line.partition("\t")
        if not sep:
            raise DatasetError(
                f"Line {number} of {path.name} has no tab-separated label",
                path=str(path),
                line=number,
            )
        rows.append((_parse_label(token, path, number), text))
    return _build_documents(rows, split, path)


def _read_imdb_split(root: Path, split: Split, max_workers: int) -> list[LabeledDocument]:
    files: list[tuple[int, Path]] = []
    for folder, label in (("pos", 1), ("neg", 0)):
        directory = root / split / folder
        if not directory.is_dir():
            raise DatasetError(f"Missing directory {directory}", path=str(directory))
        files.extend((label, file) for file in sorted(directory.glob("*.txt")))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        texts = list(pool.map(_read_text, (file for _, file in files)))
    return _build_documents(
        ((label, text) for (label, _), text in zip(files, texts)), split, root / split
    )


def _delimited_split_file(root: Path, split: Split) -> Optional[Path]:
    for suffix in DELIMITED_SUFFIXES:
        candidate = root / f"{split}{suffix}"
        if candidate.is_file():
            return candidate
    return None


def load_dataset(
    path: Path,
    format: Literal["auto", "imdb", "delimited"] = "auto",
    max_workers: int = 8,
) -> tuple[list[LabeledDocument], list[LabeledDocument]]:
    """Load the train and test splits from an IMDB tree or per-split delimited files."""
    root = Path(path)
    if not root.exists():
        raise DatasetError(f"Dataset path not found: {root}", path=str(root))
    if not root.is_dir():
        raise DatasetError(
            f"Dataset path must be a directory holding both splits: {root}", path=str(root)
        )

    if format == "auto":
        format = "imdb" if (root / "train" / "pos").is_dir() else "delimited"

    if format == "imdb":
        train, test = (_read_imdb_split(root, split, max_workers) for split in SPLITS)
    else:
        splits: list[list[LabeledDocument]] = []
        for split in SPLITS:
            file = _delimited_split_file(root, split)
            if file is None:
                raise DatasetError(
                    f"Missing {split}.tsv (or {split}.txt) in {root}", path=str(root)
                )
            splits.append(read_delimited(file, split))
        train, test = splits

    logger.info("loaded %d train and %d test documents from %s", len(train), len(test), root)
    return train, test


def subsample(docs: Sequence[LabeledDocument], n: int, seed: int) -> list[LabeledDocument]:
    """Seeded subset of ``n`` documents kept in their original order."""
    if n >= len(docs):
        return list(docs)
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(len(docs), size=n, replace=False))
    return [docs[i] for i in chosen]


def corpus_statistics(docs: Sequence[LabeledDocument]) -> CorpusStatistics:
    if not docs:
        raise ValidationError("Cannot describe an empty corpus", field="docs")
    lengths = np.asarray([len(doc.tokens) for doc in docs])
    positives = sum(1 for doc in docs if doc.label == 1)
    return CorpusStatistics(
        documents=len(docs),
        mean_tokens=float(lengths.mean()),
        max_tokens=int(lengths.max()),
        min_tokens=int(lengths.min()),
        positives=positives,
        negatives=len(docs) - positives,
    )


def save_vocabulary(vocab: Vocabulary, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for index, (word, count) in enumerate(zip(vocab.index_to_word, vocab.counts)):
            handle.write(f"{index}\t{word}\t{count}\n")


def load_vocabulary(path: Path) -> Vocabulary:
    words: list[str] = []
    counts: list[int] = []
    for number, line in enumerate(_read_text(Path(path)).splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 3 or int(parts[0]) != number - 1:
            raise DatasetError(
                f"Malformed vocabulary line {number} in {Path(path).name}",
                path=str(path),
                line=number,
            )
        words.append(parts[1])
        counts.append(int(parts[2]))
    return Vocabulary(index_to_word=tuple(words), counts=tuple(counts))
