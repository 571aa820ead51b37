import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from notesum.baselines import most_entity, mmr_select, random_select, tfidf_select, tfidf_weights
from notesum.corpus import Corpus
from notesum.entities import EntityMention, extract_entities
from notesum.synth import synth_generate

from conftest import note


class FixedWeights:
    def __init__(self, values):
        self.values = list(values)

    def sentence_weights(self, _note):
        return self.values


def words(k, w="w"):
    return " ".join(f"{w}{i}" for i in range(k))


def mention(sentence):
    return EntityMention(("x",), sentence, (0, 1))


class TestMostEntity:
    def test_greedy_trace(self):
        n = note("p", "n", "2000-01-01", [words(40, "a"), words(40, "b"), words(40, "c")])
        mentions = [mention(0)] * 3 + [mention(1)] + [mention(2)] * 2
        res = most_entity(n, mentions, 90)
        assert res.selected == (0, 2)
        assert res.total_words == 80
        assert res.method == "most-entity"

    def test_no_mentions_uses_tie_break(self):
        n = note("p", "n", "2000-01-01", [words(5), words(2), words(2), words(9)])
        assert most_entity(n, [], 4).selected == (1, 2)

    def test_zero_budget(self):
        n = note("p", "n", "2000-01-01", ["a b", "c"])
        assert most_entity(n, [mention(0)], 0).selected == ()

    def test_relabeling_invariant(self, synth_corpus, lexicon):
        for n in synth_corpus.notes[:6]:
            mentions = extract_entities(n, lexicon)
            renamed = [EntityMention(("zz",) + m.entity, m.sentence_index, m.token_span) for m in mentions]
            assert most_entity(n, mentions, 40) == most_entity(n, renamed, 40)


class TestTfidf:
    def test_word_everywhere_contributes_nothing(self):
        corpus = Corpus([note("p", "1", "2000-01-01", ["common rare"]),
                         note("p", "2", "2001-01-01", ["common other"])])
        tw = tfidf_weights(corpus)
        assert tw["common"] == 0.0
        assert tw.sentence_weights(corpus.notes[0]) == [pytest.approx(math.log(2))]

    def test_single_note_all_zero(self):
        corpus = Corpus([note("p", "1", "2000-01-01", ["a b", "c"])])
        assert tfidf_weights(corpus).sentence_weights(corpus.notes[0]) == [0.0, 0.0]

    def test_repeated_unique_word(self):
        corpus = Corpus([note("p", "1", "2000-01-01", ["shared unique", "unique again"]),
                         note("p", "2", "2001-01-01", ["shared again"])])
        w = tfidf_weights(corpus).sentence_weights(corpus.notes[0])
        assert w[0] == pytest.approx(2 * math.log(2))

    def test_rank_order(self):
        n = note("p", "n", "2000-01-01", ["a", "b", "c"])
        assert tfidf_select(n, FixedWeights([5.0, 1.0, 3.0]), 2).selected == (0, 2)
        assert tfidf_select(n, FixedWeights([0.0, 0.0, 0.0]), 2).selected == (0, 1)

    @pytest.mark.parametrize("lengths,expected", [((180, 30), (0,)), ((150, 30), (0, 1))])
    def test_budget_trace(self, lengths, expected):
        n = note("p", "n", "2000-01-01", [words(k) for k in lengths])
        assert tfidf_select(n, FixedWeights([5.0, 4.0]), 200).selected == expected


class TestMmr:
    def test_duplicate_penalized(self):
        n = note("p", "n", "2000-01-01", ["a b c", "a b c", "x y z"])
        res = mmr_select(n, FixedWeights([5.0, 5.0, 4.5]), 6)
        # 0 first; then 1 scores 5 - 1 = 4 and 2 scores 4.5, so 2 wins the last slot
        assert res.selected == (0, 2)
        assert res.method == "tfidf-mmr"
        assert tfidf_select(n, FixedWeights([5.0, 5.0, 4.5]), 6).selected == (0, 1)

    def test_single_sentence(self):
        n = note("p", "n", "2000-01-01", ["a b"])
        assert mmr_select(n, FixedWeights([1.0]), 2).selected == (0,)
        assert mmr_select(n, FixedWeights([1.0]), 1).selected == ()

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10_000), budget=st.integers(0, 80))
    def test_penalty_zero_is_tfidf(self, seed, budget):
        corpus = synth_generate(seed, 2, 2)
        tw = tfidf_weights(corpus)
        for n in corpus:
            assert mmr_select(n, tw, budget, penalty=0.0).selected == tfidf_select(n, tw, budget).selected


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), budget=st.integers(0, 120))
def test_every_method_respects_budget(seed, budget):
    corpus = synth_generate(seed, 2, 2)
    tw = tfidf_weights(corpus)
    rng = np.random.default_rng(seed)
    for n in corpus:
        for res in (most_entity(n, [], budget), tfidf_select(n, tw, budget),
                    mmr_select(n, tw, budget), random_select(n, budget, rng)):
            assert res.total_words == sum(n.lengths[i] for i in res.selected) <= budget
            assert list(res.selected) == sorted(set(res.selected))
