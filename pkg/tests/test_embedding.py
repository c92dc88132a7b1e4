"""Tests for word vectors, topic vectors and fused inputs."""

from unittest.mock import patch

import numpy as np
import pytest

from tbcnn.corpus import build_vocabulary, encode, encode_corpus
from tbcnn.embedding import (
    EmbeddingMatrix,
    FusedDataset,
    TopicAssigner,
    build_topic_table,
    dump_topic_vectors,
    fuse,
    fuse_corpus,
    keyword_indices,
    load_embeddings,
    random_embeddings,
    save_embeddings,
    topic_vector,
)
from tbcnn.errors import EmbeddingFormatError, TopicResolutionError, ValidationError
from tbcnn.models import LabeledDocument
from tbcnn.topic_model import BagCorpus, dominant_topic, fit_lda, fold_in_theta, initialize_lda
from tbcnn.validation import LdaConfig

A_WORDS = [f"a{i}" for i in range(5)]
B_WORDS = [f"b{i}" for i in range(5)]


@pytest.fixture
def split_docs() -> list[LabeledDocument]:
    """Provide ten documents, the first five using only a-words and the rest only b-words."""
    rng = np.random.default_rng(2)
    docs = []
    for i in range(10):
        words = A_WORDS if i < 5 else B_WORDS
        tokens = tuple(str(w) for w in rng.choice(words, size=20))
        docs.append(LabeledDocument(tokens=tokens, label=int(i < 5), doc_id=i))
    return docs


@pytest.fixture
def split_vocab(split_docs):
    """Provide the vocabulary of the split documents."""
    return build_vocabulary(split_docs, min_count=1)


@pytest.fixture
def split_model(split_docs, split_vocab):
    """Fit a two-topic model on the split documents."""
    corpus = BagCorpus.from_documents(split_docs, split_vocab)
    config = LdaConfig(k=2, alpha=0.5, iterations=100, burn_in=10, eval_every=50)
    return fit_lda(corpus, config)


@pytest.fixture
def handmade_model():
    """Provide a two-topic model over a 4-word space with fixed topic-word counts."""
    corpus = BagCorpus.from_sequences([[0, 1, 2, 3]], vocab_size=4, index_offset=1)
    model = initialize_lda(corpus, LdaConfig(k=2, iterations=2, burn_in=0))
    model.n_tw[:] = np.array([[5, 3, 0, 0], [0, 0, 4, 6]])
    model.n_t[:] = model.n_tw.sum(axis=1)
    return model


@pytest.fixture
def handmade_embedding() -> EmbeddingMatrix:
    """Provide a 5 x 2 embedding aligned with the handmade model."""
    vectors = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 4.0], [-1.0, 0.0], [1.0, 0.0]])
    return EmbeddingMatrix(vectors=vectors, source_coverage=1.0)


class TestRandomEmbeddings:
    """Tests for random_embeddings."""

    def test_padding_row_and_range(self, toy_vocab):
        """Test the zero padding row and the initialization range."""
        emb = random_embeddings(toy_vocab, 5, seed=1)
        assert emb.vectors.shape == (toy_vocab.size, 5)
        assert (emb.vectors[0] == 0).all()
        assert np.abs(emb.vectors).max() <= 0.25

    def test_seeded(self, toy_vocab):
        """Test that the same seed gives the same rows."""
        first = random_embeddings(toy_vocab, 3, seed=9).vectors
        assert np.array_equal(first, random_embeddings(toy_vocab, 3, seed=9).vectors)


class TestLoadEmbeddings:
    """Tests for word2vec readers."""

    def test_text_format(self, toy_vocab, tmp_path):
        """Test that known words are copied and unknown ones ignored."""
        path = tmp_path / "vectors.txt"
        path.write_text("3 2\ngood 0.1 0.2\nunknown 1 1\nmovie 0.5 -0.5\n", encoding="utf-8")
        emb = load_embeddings(path, toy_vocab, seed=0)
        assert emb.y == 2
        assert np.allclose(emb.vectors[toy_vocab.index("good")], [0.1, 0.2])
        assert np.allclose(emb.vectors[toy_vocab.index("movie")], [0.5, -0.5])
        assert (emb.vectors[0] == 0).all()
        assert emb.source_coverage == pytest.approx(2 / (toy_vocab.size - 1))

    def test_missing_words_are_seeded_random(self, toy_vocab, tmp_path):
        """Test that uncovered rows match the seeded random initialization."""
        path = tmp_path / "vectors.txt"
        path.write_text("1 2\ngood 0.1 0.2\n", encoding="utf-8")
        emb = load_embeddings(path, toy_vocab, seed=4)
        reference = random_embeddings(toy_vocab, 2, seed=4).vectors
        bad = toy_vocab.index("bad")
        assert np.array_equal(emb.vectors[bad], reference[bad])

    def test_dimension_mismatch_reports_line(self, toy_vocab, tmp_path):
        """Test that a short vector names its line and dimensions."""
        path = tmp_path / "vectors.txt"
        path.write_text("2 3\ngood 0.1 0.2 0.3\nbad 0.1 0.2\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError) as exc_info:
            load_embeddings(path, toy_vocab)
        assert exc_info.value.details["line"] == 3
        assert exc_info.value.details["expected_dim"] == 3
        assert exc_info.value.details["found_dim"] == 2

    def test_malformed_header(self, toy_vocab, tmp_path):
        """Test that a bad header is rejected on line 1."""
        path = tmp_path / "vectors.txt"
        path.write_text("hello\n", encoding="utf-8")
        with pytest.raises(EmbeddingFormatError) as exc_info:
            load_embeddings(path, toy_vocab)
        assert exc_info.value.details["line"] == 1

    def test_missing_file(self, toy_vocab, tmp_path):
        """Test that an unreadable file raises EmbeddingFormatError."""
        with pytest.raises(EmbeddingFormatError):
            load_embeddings(tmp_path / "absent.txt", toy_vocab)

    def test_binary_format(self, toy_vocab, tmp_path):
        """Test the word2vec binary layout."""
        path = tmp_path / "vectors.bin"
        good = np.array([0.5, -1.0, 2.0], dtype="<f4")
        fun = np.array([1.5, 0.0, -0.25], dtype="<f4")
        path.write_bytes(
            b"2 3\n" + b"good " + good.tobytes() + b"\n" + b"fun " + fun.tobytes() + b"\n"
        )
        emb = load_embeddings(path, toy_vocab)
        assert np.allclose(emb.vectors[toy_vocab.index("good")], good)
        assert np.allclose(emb.vectors[toy_vocab.index("fun")], fun)

    def test_truncated_binary(self, toy_vocab, tmp_path):
        """Test that a record shorter than the announced dimension is rejected."""
        path = tmp_path / "vectors.bin"
        path.write_bytes(b"1 3\ngood " + np.zeros(2, dtype="<f4").tobytes())
        with pytest.raises(EmbeddingFormatError):
            load_embeddings(path, toy_vocab)

    def test_save_and_reload(self, toy_vocab, tmp_path):
        """Test that saved vectors reload exactly."""
        emb = random_embeddings(toy_vocab, 4, seed=2)
        path = tmp_path / "saved.txt"
        save_embeddings(emb, toy_vocab, path)
        loaded = load_embeddings(path, toy_vocab, seed=99)
        assert np.array_equal(loaded.vectors, emb.vectors)
        assert loaded.source_coverage == 1.0


class TestTopicVectors:
    """Tests for topic vectors built from keyword embeddings."""

    def test_keyword_indices_include_offset(self, handmade_model):
        """Test that keywords are mapped back to vocabulary indices."""
        assert keyword_indices(handmade_model, 0, 2).tolist() == [1, 2]
        assert keyword_indices(handmade_model, 1, 2).tolist() == [4, 3]

    def test_topic_vector_is_keyword_mean(self, handmade_model, handmade_embedding):
        """Test that a topic vector averages its keyword rows."""
        vector = topic_vector(handmade_model, 0, handmade_embedding, 2)
        assert np.allclose(vector, [2.0, 3.0])

    def test_single_keyword(self, handmade_model, handmade_embedding):
        """Test that K=1 returns the top keyword's row."""
        assert np.allclose(topic_vector(handmade_model, 1, handmade_embedding, 1), [1.0, 0.0])

    def test_topic_vector_is_linear_in_embeddings(self, handmade_model, handmade_embedding):
        """Test that a combination of embeddings gives the same combination of topic vectors."""
        other = EmbeddingMatrix(vectors=np.arange(10.0).reshape(5, 2))
        combined = EmbeddingMatrix(vectors=2.0 * handmade_embedding.vectors - 3.0 * other.vectors)
        expected = 2.0 * topic_vector(handmade_model, 0, handmade_embedding, 2)
        expected -= 3.0 * topic_vector(handmade_model, 0, other, 2)
        assert np.allclose(topic_vector(handmade_model, 0, combined, 2), expected)

    def test_keyword_order_does_not_matter(self, handmade_model, handmade_embedding):
        """Test that swapping the ranks of two keywords keeps the topic vector."""
        before = topic_vector(handmade_model, 0, handmade_embedding, 2)
        handmade_model.n_tw[0] = [3, 5, 0, 0]
        assert keyword_indices(handmade_model, 0, 2).tolist() == [2, 1]
        assert np.allclose(topic_vector(handmade_model, 0, handmade_embedding, 2), before)

    def test_table(self, handmade_model, handmade_embedding):
        """Test the table of all topic vectors."""
        table = build_topic_table(handmade_model, handmade_embedding, 2)
        assert table.k == 2
        assert table.K == 2
        assert np.allclose(table.vectors, [[2.0, 3.0], [0.0, 0.0]])

    def test_misaligned_vocabulary(self, handmade_model):
        """Test that model and embedding must share a vocabulary."""
        emb = EmbeddingMatrix(vectors=np.zeros((7, 2)))
        with pytest.raises(ValidationError):
            topic_vector(handmade_model, 0, emb, 2)

    def test_dump(self, handmade_model, handmade_embedding, tmp_path):
        """Test the topic vector dump format."""
        vocab = build_vocabulary([["w", "x", "y", "z"]], min_count=1)
        table = build_topic_table(handmade_model, handmade_embedding, 2)
        path = tmp_path / "topic_vectors.tsv"
        dump_topic_vectors(table, vocab, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "topic\tkeywords\tvector"
        assert lines[1] == "0\tw,x\t2.0 3.0"


class TestTopicAssigner:
    """Tests for dominant-topic lookup and fold-in."""

    def test_training_documents_use_their_row(self, split_model):
        """Test that training documents take their fitted dominant topic."""
        assigner = TopicAssigner(split_model, {i: i for i in range(10)})
        assert assigner.topic_for("train", 3) == dominant_topic(split_model, 3)

    def test_unseen_document_needs_words(self, split_model):
        """Test that an unknown document without words cannot be resolved."""
        assigner = TopicAssigner(split_model, {})
        with pytest.raises(TopicResolutionError):
            assigner.topic_for("test", 0)

    def test_fold_in_is_cached(self, split_model, split_vocab):
        """Test that fold-in agrees with the word set and runs once per document."""
        assigner = TopicAssigner(split_model, {i: i for i in range(10)}, fold_in_sweeps=10)
        words = split_vocab.to_indices(["a0", "a1", "a2", "a3"]) - 1
        with patch("tbcnn.embedding.fold_in_theta", wraps=fold_in_theta) as folded:
            topic = assigner.topic_for("test", 7, words)
            assert assigner.topic_for("test", 7, words.copy()) == topic
        assert topic == dominant_topic(split_model, 0)
        assert folded.call_count == 1

    def test_cache_keeps_word_sequences_apart(self, split_model, split_vocab):
        """Test that a truncated view of a document does not decide its full fold-in."""
        full = split_vocab.to_indices(["b0", "b1", "b2", "b3", "a0", "a1", "a2", "a3", "a4"]) - 1
        truncated = full[:4]

        fresh = TopicAssigner(split_model, {}, fold_in_sweeps=20, seed=5)
        expected_full = fresh.topic_for("test", 3, full)

        reused = TopicAssigner(split_model, {}, fold_in_sweeps=20, seed=5)
        truncated_topic = reused.topic_for("test", 3, truncated)
        assert reused.topic_for("test", 3, full) == expected_full
        assert truncated_topic == dominant_topic(split_model, 9)
        assert expected_full == dominant_topic(split_model, 0)


class TestFuse:
    """Tests for the fused word and topic matrix."""

    def test_fused_layout(self, split_docs, split_vocab, split_model):
        """Test that words fill the left half and the topic vector the right half."""
        emb = random_embeddings(split_vocab, 3, seed=0)
        table = build_topic_table(split_model, emb, 2)
        assigner = TopicAssigner(split_model, {i: i for i in range(10)})
        doc = encode(split_docs[0], split_vocab, 24)
        fused = fuse(doc, emb, table, assigner)

        assert fused.matrix.shape == (24, 6)
        assert fused.x == 24
        assert np.array_equal(fused.matrix[:, :3], emb.vectors[doc.indices])
        assert (fused.matrix[20:, :3] == 0).all()
        assert np.allclose(fused.matrix[:, 3:], table.vectors[fused.topic_id])
        assert fused.topic_id == dominant_topic(split_model, 0)

    def test_fuse_corpus(self, split_docs, split_vocab, split_model):
        """Test that every document gets its topic vector."""
        emb = random_embeddings(split_vocab, 3, seed=0)
        table = build_topic_table(split_model, emb, 2)
        assigner = TopicAssigner(split_model, {i: i for i in range(10)})
        encoded = encode_corpus(split_docs, split_vocab, 20)
        dataset, topic_ids = fuse_corpus(encoded, table, assigner)
        assert dataset.has_topics
        assert len(dataset) == 10
        assert np.array_equal(dataset.topic_vectors, table.vectors[topic_ids])
        assert topic_ids[0] != topic_ids[9]

    def test_subset_and_plain(self, split_docs, split_vocab):
        """Test dataset slicing and the word-only form."""
        encoded = encode_corpus(split_docs, split_vocab, 20)
        plain = FusedDataset.plain(encoded)
        assert not plain.has_topics
        part = plain.subset(np.array([1, 3]))
        assert part.labels.tolist() == [1, 1]
        assert part.doc_ids.tolist() == [1, 3]
