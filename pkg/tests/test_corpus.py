"""Tests for tokenization, vocabulary building, encoding and dataset loading."""

import numpy as np
import pytest

from tbcnn.corpus import (
    PAD_INDEX,
    PAD_TOKEN,
    build_vocabulary,
    corpus_statistics,
    encode,
    encode_corpus,
    load_dataset,
    load_vocabulary,
    read_delimited,
    save_vocabulary,
    subsample,
    tokenize,
)
from tbcnn.errors import DatasetError, VocabularyError
from tbcnn.models import LabeledDocument


def doc(*tokens: str, label: int = 1, doc_id: int = 0) -> LabeledDocument:
    return LabeledDocument(tokens=tuple(tokens), label=label, doc_id=doc_id)


class TestTokenize:
    """Tests for tokenize."""

    def test_strips_punctuation_and_lowercases(self):
        """Test that punctuation is removed and case folded."""
        assert tokenize("Good movie!") == ["good", "movie"]

    def test_empty_input(self):
        """Test that empty text gives no tokens."""
        assert tokenize("") == []

    def test_html_line_breaks(self):
        """Test that HTML line breaks separate words."""
        assert tokenize("A <br /> B b") == ["a", "b", "b"]
        assert tokenize("end.<br/>Start") == ["end", "start"]

    def test_underscores_split_words(self):
        """Test that underscores are treated as punctuation."""
        assert tokenize("snake_case") == ["snake", "case"]


class TestBuildVocabulary:
    """Tests for build_vocabulary."""

    def test_min_count_one(self):
        """Test that every word is kept and ranked by frequency."""
        vocab = build_vocabulary([["a", "a", "b"]], min_count=1)
        assert vocab.index_to_word == (PAD_TOKEN, "a", "b")
        assert vocab.word_to_index == {PAD_TOKEN: 0, "a": 1, "b": 2}

    def test_min_count_two(self):
        """Test that rare words are dropped."""
        vocab = build_vocabulary([["a", "a", "b"]], min_count=2)
        assert vocab.index_to_word == (PAD_TOKEN, "a")

    def test_nothing_survives(self):
        """Test that an empty vocabulary is an error."""
        with pytest.raises(VocabularyError):
            build_vocabulary([["a"]], min_count=2)

    def test_ties_broken_lexicographically(self):
        """Test that equal counts are ordered alphabetically."""
        vocab = build_vocabulary([["c", "b", "a", "c"]], min_count=1)
        assert vocab.index_to_word == (PAD_TOKEN, "c", "a", "b")

    def test_max_size_includes_padding(self):
        """Test that max_size counts the padding entry."""
        vocab = build_vocabulary([["a", "a", "a", "b", "b", "c"]], min_count=1, max_size=3)
        assert vocab.size == 3
        assert "c" not in vocab

    def test_inverse_maps_and_counts(self, toy_docs):
        """Test that the maps are inverse and counts sum to the token total."""
        vocab = build_vocabulary(toy_docs, min_count=1, max_size=10**6)
        for index, word in enumerate(vocab.index_to_word):
            assert vocab.word_to_index[word] == index
        assert sum(vocab.counts) == sum(len(d.tokens) for d in toy_docs)
        assert vocab.pad_index == PAD_INDEX == 0
        assert PAD_TOKEN not in vocab


class TestEncode:
    """Tests for encode and encode_corpus."""

    def test_pads_to_length(self):
        """Test right-padding with the pad index."""
        vocab = build_vocabulary([["a", "b"]], min_count=1)
        padded = encode(doc("a", "b"), vocab, 4)
        assert padded.indices.tolist() == [1, 2, 0, 0]
        assert padded.true_length == 2

    def test_truncates_long_documents(self):
        """Test that only the first L indices are kept and no padding appears."""
        tokens = tuple(f"w{i % 50}" for i in range(2361))
        vocab = build_vocabulary([tokens], min_count=1)
        padded = encode(LabeledDocument(tokens=tokens, label=0, doc_id=0), vocab, 200)
        assert padded.length == 200
        assert padded.true_length == 200
        assert PAD_INDEX not in padded.indices
        assert padded.indices.tolist() == vocab.to_indices(tokens[:200]).tolist()

    def test_oov_only_document(self):
        """Test that a document without known words becomes all padding."""
        vocab = build_vocabulary([["a"]], min_count=1)
        padded = encode(doc("zzz"), vocab, 2)
        assert padded.indices.tolist() == [0, 0]
        assert padded.true_length == 0

    def test_output_is_read_only(self):
        """Test that encoded indices cannot be mutated."""
        vocab = build_vocabulary([["a"]], min_count=1)
        padded = encode(doc("a"), vocab, 3)
        with pytest.raises(ValueError):
            padded.indices[0] = 5

    def test_idempotent_on_known_tokens(self, toy_docs, toy_vocab):
        """Test that re-encoding the decoded tokens reproduces the indices."""
        padded = encode(toy_docs[2], toy_vocab, 6)
        words = tuple(toy_vocab.word(i) for i in padded.indices[: padded.true_length])
        again = encode(doc(*words), toy_vocab, 6)
        assert again.indices.tolist() == padded.indices.tolist()

    def test_encode_corpus_flags_empty_documents(self, toy_vocab):
        """Test that all-pad documents are counted."""
        docs = [doc("good", "movie"), doc("unknown", doc_id=1)]
        encoded = encode_corpus(docs, toy_vocab, 5)
        assert encoded.indices.shape == (2, 5)
        assert encoded.empty_documents == 1
        assert encoded.document(0).true_length == 2


class TestLoadDataset:
    """Tests for dataset readers."""

    def test_imdb_tree(self, imdb_dir):
        """Test loading the directory layout with pos before neg and sorted files."""
        train, test = load_dataset(imdb_dir)
        assert len(train) == 4
        assert len(test) == 2
        assert [d.label for d in train] == [1, 1, 0, 0]
        assert train[0].tokens == ("a", "great", "film", "loved", "it")
        assert [d.doc_id for d in train] == [0, 1, 2, 3]
        assert test[0].split == "test"

    def test_delimited_files(self, tmp_path):
        """Test loading train.tsv and test.tsv."""
        (tmp_path / "train.tsv").write_text("pos\tGreat fun\nneg\tAwful\n", encoding="utf-8")
        (tmp_path / "test.tsv").write_text("1\tNice\n", encoding="utf-8")
        train, test = load_dataset(tmp_path)
        assert [d.label for d in train] == [1, 0]
        assert test[0].tokens == ("nice",)

    def test_unknown_label_names_row(self, tmp_path):
        """Test that an unknown label reports the file and line."""
        path = tmp_path / "train.tsv"
        path.write_text("pos\tok\nmaybe\tso so\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="train.tsv:2") as exc_info:
            read_delimited(path)
        assert exc_info.value.details["line"] == 2
        assert exc_info.value.details["label"] == "maybe"

    def test_missing_path(self, tmp_path):
        """Test that a missing dataset path is reported."""
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(tmp_path / "nowhere")

    def test_missing_split_file(self, tmp_path):
        """Test that a missing split file names the split."""
        (tmp_path / "train.tsv").write_text("pos\tok\n", encoding="utf-8")
        with pytest.raises(DatasetError, match="test.tsv"):
            load_dataset(tmp_path)

    def test_empty_documents_are_skipped(self, tmp_path):
        """Test that documents without tokens are dropped."""
        path = tmp_path / "train.tsv"
        path.write_text("pos\t!!!\nneg\tbad\n", encoding="utf-8")
        docs = read_delimited(path)
        assert len(docs) == 1
        assert docs[0].tokens == ("bad",)


class TestCorpusHelpers:
    """Tests for subsampling, statistics and vocabulary persistence."""

    def test_subsample_is_seeded_and_ordered(self, toy_docs):
        """Test that subsampling is deterministic and keeps file order."""
        first = subsample(toy_docs, 2, seed=3)
        second = subsample(toy_docs, 2, seed=3)
        assert [d.doc_id for d in first] == [d.doc_id for d in second]
        assert [d.doc_id for d in first] == sorted(d.doc_id for d in first)

    def test_subsample_larger_than_corpus(self, toy_docs):
        """Test that asking for more documents returns all of them."""
        assert subsample(toy_docs, 10, seed=0) == toy_docs

    def test_statistics(self, toy_docs):
        """Test the corpus summary."""
        stats = corpus_statistics(toy_docs)
        assert stats.documents == 4
        assert stats.max_tokens == 3
        assert stats.min_tokens == 2
        assert stats.positives == 2
        assert np.isclose(stats.mean_tokens, 11 / 4)

    def test_vocabulary_round_trip(self, toy_vocab, tmp_path):
        """Test saving and loading a vocabulary."""
        path = tmp_path / "vocab.tsv"
        save_vocabulary(toy_vocab, path)
        assert load_vocabulary(path) == toy_vocab
