import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from notesum.corpus import Corpus, pair_notes
from notesum.coverage import CoverageInstance, build_instance, smoothed_objective
from notesum.embeddings import EmbeddingTable
from notesum.entities import EntityLexicon, compute_idf
from notesum.errors import CapExceededError, ConfigurationError, EmptyTrainingSetError, ParseError
from notesum.pseudolabel import (
    BudgetConstraints, build_training_set, derive_constraints, load_training_set, solve,
    solve_exact, solve_heuristic, solve_oracle, upper_bound,
)
from notesum.synth import default_lexicon, synth_embeddings, synth_generate

from conftest import independent_check, note, random_instance


def inst(sims, lengths, weights=None):
    sims = np.atleast_2d(np.asarray(sims, dtype=float))
    return CoverageInstance(sims, np.ones(sims.shape[0]) if weights is None else weights, lengths)


def random_constraints(rng, got):
    n = got.num_sentences
    lo = int(rng.integers(1, n + 1))
    hi = int(rng.integers(lo, n + 1))
    budget = int(rng.integers(1, int(got.sentence_lengths.sum()) + 10))
    return BudgetConstraints(budget, lo, hi)


def assert_sound(res, got, c):
    if res.feasible:
        assert independent_check(res.alpha, got.sentence_lengths, c)
        assert res.objective == smoothed_objective(got, res.alpha)


class TestDeriveConstraints:
    @pytest.mark.parametrize("n,lo,hi", [(22, 4, 6), (3, 1, 1), (1, 1, 1), (11, 2, 3), (12, 2, 3)])
    def test_examples(self, n, lo, hi):
        assert (lo, hi) == (max(1, math.floor(n / 5.5)), max(lo, math.ceil(n / 4)))
        c = derive_constraints(n, 200)
        assert (c.min_sentences_L1, c.max_sentences_L2, c.word_budget_L) == (lo, hi, 200)

    @given(st.integers(1, 500))
    def test_matches_float_formula(self, n):
        c = derive_constraints(n)
        lo = max(1, math.floor(n / 5.5))
        assert (c.min_sentences_L1, c.max_sentences_L2) == (lo, max(lo, math.ceil(n / 4)))

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            BudgetConstraints(10, 3, 2)
        with pytest.raises(ConfigurationError):
            derive_constraints(5, 0)


class TestSolveExact:
    def test_dominant_sentence(self):
        got = inst([[0.9, 0.1]], [5, 5])
        c = BudgetConstraints(5, 1, 1)
        res = solve_exact(got, c)
        assert res.alpha.tolist() == [1, 0] and res.feasible
        assert_sound(res, got, c)

    def test_everything_too_long(self):
        res = solve_exact(inst([[0.9, 0.1]], [6, 7]), BudgetConstraints(5, 1, 1))
        assert not res.feasible
        assert res.alpha.tolist() == [0, 0]

    def test_symmetric_tie(self):
        res = solve_exact(inst([[0.5, 0.5]], [5, 5]), BudgetConstraints(10, 1, 1))
        assert res.alpha.tolist() == [1, 0]

    def test_tie_prefers_shorter_tuple_prefix(self):
        res = solve_exact(inst([[0.0, 0.0, 0.0]], [1, 1, 1]), BudgetConstraints(10, 1, 2))
        assert res.selected == (0,)

    def test_cap(self):
        with pytest.raises(CapExceededError):
            solve_exact(inst([[0.1] * 5], [1] * 5), BudgetConstraints(10, 1, 2), cap=4)
        assert solve(inst([[0.1] * 5], [1] * 5), BudgetConstraints(10, 1, 2), cap=4).solver == "heuristic"

    def test_matches_oracle_on_seeded_suite(self):
        rng = np.random.default_rng(123)
        for _ in range(60):
            got = random_instance(rng)
            c = random_constraints(rng, got)
            a, b = solve_exact(got, c), solve_oracle(got, c)
            assert a.feasible == b.feasible
            assert a.alpha.tolist() == b.alpha.tolist()
            assert a.objective == pytest.approx(b.objective, abs=1e-9)
            assert_sound(a, got, c)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), temperature=st.sampled_from([0.25, 1.0, 3.0]))
    def test_matches_oracle_with_temperature(self, seed, temperature):
        rng = np.random.default_rng(seed)
        got = random_instance(rng, n_sentences=int(rng.integers(1, 9)))
        c = random_constraints(rng, got)
        a = solve_exact(got, c, temperature=temperature)
        b = solve_oracle(got, c, temperature=temperature)
        assert a.alpha.tolist() == b.alpha.tolist()

    def test_extreme_temperature_rejected(self):
        with pytest.raises(ConfigurationError):
            solve_exact(inst([[0.5]], [1]), BudgetConstraints(5, 1, 1), temperature=1e-4)


class TestUpperBound:
    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_admissible(self, seed):
        rng = np.random.default_rng(seed)
        got = random_instance(rng, n_sentences=int(rng.integers(2, 9)))
        n = got.num_sentences
        nxt = int(rng.integers(0, n + 1))
        prefix = [i for i in range(nxt) if rng.random() < 0.5]
        bound = upper_bound(got, prefix, nxt)
        for k in range(n - nxt + 1):
            for extra in combinations(range(nxt, n), k):
                a = np.zeros(n, dtype=int)
                a[prefix + list(extra)] = 1
                assert smoothed_objective(got, a) <= bound + 1e-12


class TestSolveHeuristic:
    def test_never_beats_exact_and_close(self):
        rng = np.random.default_rng(7)
        good = []
        for _ in range(60):
            got = random_instance(rng)
            c = random_constraints(rng, got)
            h, e = solve_heuristic(got, c), solve_exact(got, c)
            assert h.feasible == e.feasible
            assert_sound(h, got, c)
            if e.feasible:
                assert h.objective <= e.objective + 1e-12
                good.append(h.objective >= 0.95 * e.objective)
        assert np.mean(good) >= 0.95

    def test_greedy_optimal_instance(self):
        # each entity has one dominant sentence; budget and counts are ample
        sims = np.array([[0.9, 0.0, 0.0, 0.1], [0.0, 0.0, 0.95, 0.0]])
        got = inst(sims, [5, 5, 5, 5], weights=np.array([1.0, 2.0]))
        c = BudgetConstraints(100, 1, 2)
        assert solve_heuristic(got, c).alpha.tolist() == solve_exact(got, c).alpha.tolist() == [1, 0, 1, 0]

    def test_all_zero_sims(self):
        weights = np.array([1.5, 0.5])
        got = inst(np.zeros((2, 5)), [9, 3, 7, 3, 4], weights=weights)
        c = BudgetConstraints(50, 2, 3)
        res = solve_heuristic(got, c)
        assert res.selected == (1, 3)
        assert res.objective == pytest.approx(weights.sum() * math.log(5))

    def test_infeasible_minimum(self):
        res = solve_heuristic(inst([[0.5, 0.5]], [4, 4]), BudgetConstraints(7, 2, 2))
        assert not res.feasible

    def test_repair_restarts_from_shortest(self):
        # greedy grabs the long high-gain sentence, which leaves no room for a second one
        got = inst([[1.0, 0.0, 0.0]], [8, 2, 2])
        c = BudgetConstraints(9, 2, 2)
        res = solve_heuristic(got, c)
        assert res.feasible
        assert res.selected == (1, 2)
        assert solve_exact(got, c).selected == (1, 2)


def small_pairs_corpus():
    lex = EntityLexicon(["asthma", "copd"])
    notes = [
        note("p", "1", "2000-01-01", ["Asthma noted.", "Stable today.", "Copd flare."]),
        note("p", "2", "2000-08-01", ["Asthma again.", "Fine today."]),
        note("p", "3", "2001-03-01", ["Nothing notable."]),
    ]
    return Corpus(notes), lex


class TestBuildTrainingSet:
    def test_drops_pairs_without_entities(self, fallback_table):
        corpus, lex = small_pairs_corpus()
        pairs = pair_notes(corpus)
        assert len(pairs) == 3
        ts = build_training_set(corpus, pairs, 200, lex, fallback_table, compute_idf(corpus, lex))
        assert [(e.note.note_id, e.later.note_id) for e in ts] == [("1", "2")]
        assert ts.dropped == {"no_entities": 2, "infeasible": 0}
        for e in ts:
            assert independent_check(e.y, e.note.lengths, derive_constraints(e.note, 200))

    def test_infeasible_dropped_and_empty_error(self, fallback_table):
        corpus, lex = small_pairs_corpus()
        with pytest.raises(EmptyTrainingSetError):
            build_training_set(corpus, pair_notes(corpus), 1, lex, fallback_table,
                               compute_idf(corpus, lex))

    def test_synthetic_examples_sound(self, synth_corpus, lexicon, fallback_table):
        pairs = pair_notes(synth_corpus)
        ts = build_training_set(synth_corpus, pairs, 30, lexicon, fallback_table,
                                compute_idf(synth_corpus, lexicon))
        assert len(ts) + sum(ts.dropped.values()) == len(pairs)
        for e in ts:
            assert independent_check(e.y, e.note.lengths, derive_constraints(e.note, 30))

    def test_save_load_round_trip(self, tmp_path, synth_corpus, lexicon, fallback_table):
        ts = build_training_set(synth_corpus, pair_notes(synth_corpus), 60, lexicon,
                                fallback_table, compute_idf(synth_corpus, lexicon))
        path = tmp_path / "labels.jsonl"
        ts.save(path)
        again = load_training_set(path, synth_corpus)
        assert again.dumps() == ts.dumps()
        sub = again.subset(["p0001"])
        assert sub.examples and all(e.note.patient_id == "p0001" for e in sub)

    def test_load_rejects_bad_alpha(self, tmp_path, synth_corpus):
        n = synth_corpus.notes[0]
        path = tmp_path / "labels.jsonl"
        path.write_text(f'{{"patient_id": "{n.patient_id}", "note_id": "{n.note_id}", '
                        f'"later_note_id": "{n.note_id}", "alpha": [1]}}\n')
        with pytest.raises(ParseError):
            load_training_set(path, synth_corpus)


@pytest.mark.parametrize("structured", [False, True])
def test_labels_favor_planted_sentences(structured):
    # default synthetic configuration, checked against the generator's ground truth
    corpus = synth_generate(seed=1, patients=20, notes_per_patient=3)
    lex = default_lexicon()
    words = {w for n in corpus for s in n.sentences for w in s.tokens}
    table = synth_embeddings(words, 1, lex) if structured else EmbeddingTable(fallback_seed=1)
    idf = compute_idf(corpus, lex)
    pairs = pair_notes(corpus)
    planted_mass, other_mass = [], []
    for p in pairs:
        inst = build_instance(p.earlier, p.later, lex, table, idf)
        mass = inst.entity_weights @ inst.sentence_sims
        marks = set(p.earlier.meta["planted"])
        for t, m in enumerate(mass):
            (planted_mass if t in marks else other_mass).append(m)
    assert np.mean(planted_mass) > np.mean(other_mass)
    ts = build_training_set(corpus, pairs, 30, lex, table, idf)
    chosen = [(ex.note, t) for ex in ts for t in np.flatnonzero(ex.y)]
    share = np.mean([t in n.meta["planted"] for n, t in chosen])
    assert share >= 0.6
