"""Pytest configuration and shared fixtures for testing."""

import os
from pathlib import Path

import numpy as np
import pytest

from tbcnn.corpus import Vocabulary, build_vocabulary
from tbcnn.embedding import EmbeddingMatrix, FusedDataset
from tbcnn.models import LabeledDocument
from tbcnn.neural.network import CnnModel, init_cnn
from tbcnn.topic_model import BagCorpus
from tbcnn.validation import ConvSpec, TrainConfig

POSITIVE_WORDS = ["great", "wonderful", "excellent", "loved", "brilliant"]
NEGATIVE_WORDS = ["awful", "boring", "terrible", "hated", "dull"]
NEUTRAL_WORDS = ["movie", "film", "plot", "actor", "scene", "story", "the", "a"]


def make_review(rng: np.random.Generator, label: int, length: int = 12) -> str:
    sentiment = POSITIVE_WORDS if label == 1 else NEGATIVE_WORDS
    words = [
        rng.choice(sentiment) if rng.random() < 0.4 else rng.choice(NEUTRAL_WORDS)
        for _ in range(length)
    ]
    return " ".join(str(word) for word in words).capitalize() + "!"


def write_delimited_dataset(root: Path, train_size: int, test_size: int, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    for split, size in (("train", train_size), ("test", test_size)):
        lines = []
        for i in range(size):
            label = i % 2
            lines.append(f"{'pos' if label else 'neg'}\t{make_review(rng, label)}")
        (root / f"{split}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return root


@pytest.fixture
def toy_docs() -> list[LabeledDocument]:
    """Provide four short labelled documents."""
    return [
        LabeledDocument(tokens=("good", "movie", "good"), label=1, doc_id=0),
        LabeledDocument(tokens=("bad", "movie"), label=0, doc_id=1),
        LabeledDocument(tokens=("great", "good", "fun"), label=1, doc_id=2),
        LabeledDocument(tokens=("bad", "boring", "bad"), label=0, doc_id=3),
    ]


@pytest.fixture
def toy_vocab(toy_docs) -> Vocabulary:
    """Provide the vocabulary of the toy documents with min_count 1."""
    return build_vocabulary(toy_docs, min_count=1)


@pytest.fixture
def dataset_dir(tmp_path: Path) -> Path:
    """Provide a small delimited sentiment dataset (40 train / 20 test)."""
    return write_delimited_dataset(tmp_path / "data", train_size=40, test_size=20)


@pytest.fixture
def imdb_dir(tmp_path: Path) -> Path:
    """Provide a tiny IMDB-style directory tree."""
    root = tmp_path / "aclImdb"
    reviews = {
        ("train", "pos"): ["A great film.<br />Loved it", "Wonderful story"],
        ("train", "neg"): ["Awful plot", "Boring, dull acting"],
        ("test", "pos"): ["Brilliant"],
        ("test", "neg"): ["Terrible movie"],
    }
    for (split, folder), texts in reviews.items():
        directory = root / split / folder
        directory.mkdir(parents=True)
        for i, text in enumerate(texts):
            (directory / f"{i}_7.txt").write_text(text, encoding="utf-8")
    return root


@pytest.fixture
def two_topic_corpus() -> tuple[BagCorpus, list[int]]:
    """Provide 20 documents drawn from two disjoint word sets, with their generating topics."""
    rng = np.random.default_rng(7)
    docs, labels = [], []
    for topic in (0, 1):
        for _ in range(10):
            docs.append(rng.integers(5 * topic, 5 * topic + 5, size=30))
            labels.append(topic)
    return BagCorpus.from_sequences(docs, vocab_size=10), labels


@pytest.fixture
def tiny_embedding() -> EmbeddingMatrix:
    """Provide a V=10, y=4 embedding with a zero padding row."""
    rng = np.random.default_rng(3)
    vectors = rng.uniform(-0.25, 0.25, size=(10, 4))
    vectors[0] = 0.0
    return EmbeddingMatrix(vectors=vectors, source_coverage=1.0)


@pytest.fixture
def tiny_spec() -> ConvSpec:
    """Provide region sizes (2, 3) with two filters each."""
    return ConvSpec(region_sizes=(2, 3), filters_per_size=2)


@pytest.fixture
def tiny_batch() -> FusedDataset:
    """Provide six padded documents of length 8 with topic vectors."""
    rng = np.random.default_rng(11)
    indices = rng.integers(1, 10, size=(6, 8))
    indices[0, 5:] = 0
    indices[3, 6:] = 0
    return FusedDataset(
        indices=indices,
        labels=np.array([0, 1, 0, 1, 1, 0]),
        topic_vectors=rng.uniform(-0.25, 0.25, size=(6, 4)),
        doc_ids=np.arange(6),
    )


@pytest.fixture
def tiny_model(tiny_embedding, tiny_spec) -> CnnModel:
    """Provide a topic-channel model with weights large enough to keep ReLUs active."""
    return init_cnn(tiny_embedding, tiny_spec, use_topics=True, seed=5, scale=0.5)


@pytest.fixture
def no_dropout() -> TrainConfig:
    """Provide a training config with dropout disabled."""
    return TrainConfig(dropout_rate=0.0, batch_size=3, epochs=2)


@pytest.fixture
def experiment_overrides(dataset_dir: Path, tmp_path: Path) -> list[str]:
    """Provide --set overrides for a fast end-to-end run on the small dataset."""
    return [
        f"data.path={dataset_dir}",
        f"output_dir={tmp_path / 'run'}",
        "data.max_length=16",
        "data.min_count=1",
        "lda.k=2",
        "lda.iterations=20",
        "lda.burn_in=5",
        "lda.eval_every=5",
        "lda.fold_in_sweeps=5",
        "embedding.dimension=6",
        "embedding.keywords=3",
        "cnn.conv.region_sizes=[2, 3]",
        "cnn.conv.filters_per_size=4",
        "cnn.train.epochs=2",
        "cnn.train.batch_size=10",
        "baselines.epochs=5",
    ]


@pytest.fixture(autouse=True)
def clean_env():
    """Clean environment variables before each test."""
    original_env = os.environ.copy()

    for key in ("TBCNN_SEED", "TBCNN_OUTPUT_DIR", "TBCNN_DEBUG"):
        os.environ.pop(key, None)

    yield

    os.environ.clear()
    os.environ.update(original_env)


@pytest.fixture
def imdb_path() -> Path:
    """
    Locate the real IMDB directory for integration tests.

    These tests are skipped unless TBCNN_IMDB_PATH points at an existing directory.
    """
    value = os.environ.get("TBCNN_IMDB_PATH")
    if not value or not Path(value).is_dir():
        pytest.skip("TBCNN_IMDB_PATH is not set to the IMDB dataset")
    return Path(value)


# Pytest configuration


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers",
        "integration: mark test as integration test (requires the IMDB dataset)",
    )
    config.addinivalue_line("markers", "slow: mark test as slow running")


def pytest_collection_modifyitems(config, items):
    """Automatically mark integration tests."""
    for item in items:
        if "test_integration" in str(item.fspath):
            item.add_marker(pytest.mark.integration)
