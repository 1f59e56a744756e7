"""Corpus loading, naive annotation, and vocabulary construction."""

import json
import random

import numpy as np
import pytest

from bfamr.corpus import (
    NO_SENSE,
    ROOT_LABEL,
    ROOT_UNIT,
    UNK,
    AnnotatedSentence,
    CorpusError,
    CorpusExample,
    Vocabulary,
    build_vocab,
    load_corpus,
    naive_annotate,
    naive_lemma,
    save_corpus,
)
from bfamr.embedder import FileVectorEmbedder, HashEmbedder
from bfamr.graph import parse_penman


def _record(tokens, amr):
    return {
        "tokens": tokens,
        "lemmas": [naive_lemma(t) for t in tokens],
        "pos": ["X"] * len(tokens),
        "ner": ["O"] * len(tokens),
        "amr": amr,
    }


def _write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as handle:
        for r in records:
            handle.write(json.dumps(r) + "\n")


FIG_TOKENS = ["The", "boy", "really", "wants", "to", "go", "to", "school"]
FIG_AMR = "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b :ARG4 (s / school)) :degree (r / really))"


class TestNaiveAnnotate:
    def test_lemma_examples(self):
        sent = naive_annotate("The boy wants")
        assert sent.lemmas == ("the", "boy", "want")

    def test_numbers_unchanged(self):
        assert naive_lemma("2008") == "2008"

    def test_pos_and_ner_constant(self):
        sent = naive_annotate("The boy wants")
        assert set(sent.pos) == {"X"}
        assert set(sent.ner) == {"O"}

    def test_punctuation_split_off(self):
        sent = naive_annotate("He goes to school.")
        assert sent.tokens == ("He", "goes", "to", "school", ".")
        assert sent.lemmas[1] == "go"
        assert sent.lemmas[-1] == "."

    def test_ing_stripped(self):
        assert naive_lemma("meeting") == "meet"

    def test_short_words_untouched(self):
        assert naive_lemma("is") == "is"
        assert naive_lemma("as") == "as"


class TestAnnotatedSentence:
    def test_length_mismatch_rejected(self):
        with pytest.raises(CorpusError):
            AnnotatedSentence(("a", "b"), ("a",), ("X", "X"), ("O", "O"))

    def test_empty_rejected(self):
        with pytest.raises(CorpusError):
            AnnotatedSentence((), (), (), ())


class TestLoadCorpus:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record(FIG_TOKENS, FIG_AMR), _record(["Boys", "sleep"], "(s / sleep-01 :ARG0 (b / boy))")])
        examples = load_corpus(path)
        assert len(examples) == 2
        assert len(examples[0].sentence) == 8
        assert len(examples[0].graph.vertices) == 5

    def test_empty_file(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("")
        assert load_corpus(path) == []

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(_record(["a"], "(b / boy)")) + "\n{oops\n")
        with pytest.raises(CorpusError, match=":2"):
            load_corpus(path)

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        record = _record(["a"], "(b / boy)")
        del record["lemmas"]
        _write_jsonl(path, [record])
        with pytest.raises(CorpusError, match="lemmas"):
            load_corpus(path)

    def test_length_mismatch_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        record = _record(["a", "b"], "(b / boy)")
        record["pos"] = ["X"]
        _write_jsonl(path, [record])
        with pytest.raises(CorpusError, match=":1"):
            load_corpus(path)

    def test_bad_amr_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        _write_jsonl(path, [_record(["a"], "(b / boy")])
        with pytest.raises(CorpusError, match="bad amr"):
            load_corpus(path)

    def test_save_load_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        examples = [
            CorpusExample(naive_annotate("The boy really wants to go to school"), parse_penman(FIG_AMR))
        ]
        save_corpus(examples, path)
        loaded = load_corpus(path)
        assert loaded[0].sentence == examples[0].sentence
        assert loaded[0].graph == examples[0].graph


def _toy_examples():
    return [
        CorpusExample(
            naive_annotate("The boy really wants to go to school"),
            parse_penman(FIG_AMR),
        ),
        CorpusExample(
            naive_annotate("The meeting ended"),
            parse_penman("(e / end-01 :ARG1 (m / meet-03))"),
        ),
    ]


class TestBuildVocab:
    def test_edge_label_frequency(self):
        examples = [
            CorpusExample(
                naive_annotate("The boy wants to sleep"),
                parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (s / sleep-01 :ARG0 b))"),
            )
        ]
        vocab = build_vocab(examples)
        assert vocab.edge_label_frequency == {"ARG0": 2, "ARG1": 1}

    def test_sense_vocab_contains_no_sense(self):
        vocab = build_vocab(_toy_examples())
        assert vocab.sense[0] == NO_SENSE
        assert {"01", "02", "03"} <= set(vocab.sense)

    def test_reserved_entries(self):
        vocab = build_vocab(_toy_examples())
        assert vocab.content[0] == UNK
        assert vocab.content[1] == ROOT_UNIT
        assert vocab.edge_labels[0] == UNK
        assert vocab.edge_labels[1] == ROOT_LABEL

    def test_content_covers_tokens_lemmas_and_vertices(self):
        vocab = build_vocab(_toy_examples())
        for unit in ["The", "the", "boy", "school", "go", "meet", "date entity" if False else "end"]:
            assert vocab.has_content(unit), unit

    def test_min_freq_drops_hapax(self):
        # "wants" occurs once (as a token; its lemma is "want"), while
        # "want" occurs twice (lemma + vertex content) and survives.
        vocab = build_vocab(_toy_examples(), min_freq=2)
        assert not vocab.has_content("wants")
        assert vocab.content_id("wants") == 0
        assert vocab.has_content("want")

    def test_deterministic_under_shuffling(self):
        examples = _toy_examples()
        shuffled = list(examples)
        random.Random(7).shuffle(shuffled)
        assert build_vocab(examples) == build_vocab(shuffled)

    def test_ids_dense_and_stable(self):
        vocab = build_vocab(_toy_examples())
        for i, unit in enumerate(vocab.content):
            assert vocab.content_id(unit) == i

    def test_unknown_lookups_fall_back(self):
        vocab = build_vocab(_toy_examples())
        assert vocab.content_id("zzz") == 0
        assert vocab.label_id("zzz") == 0
        assert vocab.pos_id("zzz") == 0
        assert vocab.sense_id(None) == 0

    def test_json_round_trip(self, tmp_path):
        vocab = build_vocab(_toy_examples())
        path = tmp_path / "vocab.json"
        vocab.save(path)
        assert Vocabulary.load(path) == vocab

    def test_version_checked(self, tmp_path):
        vocab = build_vocab(_toy_examples())
        data = vocab.to_json_dict()
        data["version"] = 99
        path = tmp_path / "vocab.json"
        path.write_text(json.dumps(data))
        with pytest.raises(CorpusError):
            Vocabulary.load(path)

    def test_subwords_cover_units(self):
        vocab = build_vocab(_toy_examples())
        emb = HashEmbedder()
        for unit in ["boy", "school", ROOT_UNIT]:
            for sub in emb.subtokenize(unit):
                assert sub in vocab.subwords


class TestHashEmbedder:
    def test_deterministic_across_instances(self):
        a = HashEmbedder(dim=16, seed=3)
        b = HashEmbedder(dim=16, seed=3)
        np.testing.assert_array_equal(a.unit_vector("school"), b.unit_vector("school"))

    def test_seed_changes_vectors(self):
        a = HashEmbedder(dim=16, seed=3)
        b = HashEmbedder(dim=16, seed=4)
        assert not np.allclose(a.unit_vector("school"), b.unit_vector("school"))

    def test_two_word_unit_has_three_subtokens(self):
        assert HashEmbedder().subtokenize("go back") == ["go", "bac", "k"]

    def test_unit_vector_is_subtoken_mean(self):
        emb = HashEmbedder(dim=8)
        subs = emb.subtokenize("school")
        np.testing.assert_allclose(emb.unit_vector("school"), emb.encode(subs).mean(axis=0))

    def test_sentence_shape(self):
        emb = HashEmbedder(dim=8)
        out = emb.encode_sentence(["the", "boy"])
        assert out.shape == (2, 8)


class TestFileVectorEmbedder:
    def test_lookup_and_fallback(self, tmp_path):
        path = tmp_path / "vecs.npz"
        np.savez(path, units=np.array(["boy", "school"]), vectors=np.arange(8.0).reshape(2, 4))
        emb = FileVectorEmbedder(str(path))
        assert emb.dim == 4
        np.testing.assert_array_equal(emb.unit_vector("boy"), [0.0, 1.0, 2.0, 3.0])
        np.testing.assert_array_equal(emb.unit_vector("zzz"), np.zeros(4))

    def test_shape_mismatch_rejected(self, tmp_path):
        path = tmp_path / "vecs.npz"
        np.savez(path, units=np.array(["boy"]), vectors=np.arange(8.0).reshape(2, 4))
        with pytest.raises(ValueError):
            FileVectorEmbedder(str(path))
