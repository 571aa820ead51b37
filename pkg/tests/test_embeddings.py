import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from notesum.embeddings import EmbeddingTable, cosine, embed_entity, embed_word, fallback_vector
from notesum.errors import ConfigurationError, DimensionError, ParseError
from notesum.resources import PERSISTENT_ENTITIES, TRANSIENT_ENTITIES
from notesum.synth import default_lexicon, synth_embeddings

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestEmbedWord:
    def test_stored_vector_verbatim(self):
        table = EmbeddingTable({"aspirin": [1.0, 2.0]}, dim=2, fallback_seed=3)
        assert embed_word(table, "aspirin").tolist() == [1.0, 2.0]

    def test_fallback_deterministic_and_unit(self):
        table = EmbeddingTable(dim=16, fallback_seed=3)
        a = embed_word(table, "zzz")
        assert np.array_equal(a, embed_word(table, "zzz"))
        assert np.array_equal(a, fallback_vector("zzz", 3, 16))
        assert np.linalg.norm(a) == pytest.approx(1.0)
        assert not np.array_equal(a, fallback_vector("zzz", 4, 16))

    def test_unknown_without_fallback_is_zero(self):
        table = EmbeddingTable(dim=5)
        assert embed_word(table, "zzz").tolist() == [0.0] * 5

    def test_dimension_checked(self):
        with pytest.raises(DimensionError):
            EmbeddingTable({"a": [1.0, 2.0, 3.0]}, dim=2)


class TestEmbedEntity:
    def test_single_token(self):
        table = EmbeddingTable({"a": [0.3, 0.4]}, dim=2)
        assert embed_entity(table, ("a",)).tolist() == [0.3, 0.4]

    def test_mean_of_two(self):
        table = EmbeddingTable({"a": [1.0, 0.0], "b": [0.0, 1.0]}, dim=2)
        assert embed_entity(table, ("a", "b")).tolist() == [0.5, 0.5]

    def test_unknown_tokens_zero(self):
        table = EmbeddingTable(dim=3)
        assert embed_entity(table, ("x", "y")).tolist() == [0.0, 0.0, 0.0]


class TestCosine:
    @pytest.mark.parametrize("a,b,expected", [
        ([1, 0], [1, 0], 1.0),
        ([1, 0], [0, 1], 0.0),
        ([1, 1], [1, 0], 1 / math.sqrt(2)),
        ([0, 0], [1, 0], 0.0),
    ])
    def test_examples(self, a, b, expected):
        assert cosine(a, b) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            cosine([1, 0], [1, 0, 0])

    @settings(max_examples=100)
    @given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite))
    def test_bounded_and_symmetric(self, a, b):
        c = cosine(a, b)
        assert -1 - 1e-9 <= c <= 1 + 1e-9
        assert c == pytest.approx(cosine(b, a))


class TestLoadSave:
    def test_round_trip(self, tmp_path):
        table = EmbeddingTable({"a": [0.1, -2.0], "b": [3.0, 1e-7]}, dim=2)
        path = tmp_path / "vec.txt"
        table.save(path)
        again = EmbeddingTable.load(path)
        assert again.dim == 2
        assert set(again.vectors) == {"a", "b"}
        for w in "ab":
            assert np.array_equal(again.vectors[w], table.vectors[w])

    @pytest.mark.parametrize("text,line", [
        ("2\na 1 2\n", 1),
        ("1 2\na 1\n", 2),
        ("1 2\na 1 x\n", 2),
    ])
    def test_malformed(self, tmp_path, text, line):
        path = tmp_path / "vec.txt"
        path.write_text(text)
        with pytest.raises(ParseError) as exc:
            EmbeddingTable.load(path)
        assert exc.value.line == line

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("2 2\na 1 2\n")
        with pytest.raises(ParseError):
            EmbeddingTable.load(path)


class TestSynthEmbeddings:
    def table(self, seed=4):
        lex = default_lexicon()
        words = [t for e in lex for t in e] + ["patient", "today", "stable"]
        return synth_embeddings(words, seed, lex), lex

    def test_same_seed_identical(self):
        a, _ = self.table()
        b, _ = self.table()
        assert a.vectors.keys() == b.vectors.keys()
        assert all(np.array_equal(a.vectors[w], b.vectors[w]) for w in a.vectors)

    def test_unit_norm(self):
        table, _ = self.table()
        assert all(abs(np.linalg.norm(v) - 1) < 1e-12 for v in table.vectors.values())

    def test_category_structure(self):
        # with the split fixed, same-category pairs sit closer than cross-category pairs
        table, lex = self.table()
        pers = {t for e in PERSISTENT_ENTITIES for t in e.split()}
        trans = {t for e in TRANSIENT_ENTITIES for t in e.split()} - pers
        p = [table.vectors[w] for w in sorted(pers)[:10]]
        q = [table.vectors[w] for w in sorted(trans)[:10]]
        within = np.mean([cosine(a, b) for i, a in enumerate(p) for b in p[i + 1:]])
        across = np.mean([cosine(a, b) for a in p for b in q])
        assert within > across + 0.1

    def test_unknown_word_uses_hashed_fallback(self):
        table, _ = self.table()
        plain = EmbeddingTable(dim=table.dim, fallback_seed=4)
        assert np.array_equal(table.embed_word("zzzunseen"), plain.embed_word("zzzunseen"))

    def test_weight_range(self):
        with pytest.raises(ConfigurationError):
            synth_embeddings(["a"], 1, category_weight=1.5)
