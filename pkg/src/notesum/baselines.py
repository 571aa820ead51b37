"""Unsupervised summarizers under a shared word budget."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from .corpus import Corpus, Note
from .entities import EntityMention
from .errors import ConfigurationError
from .summary import SummaryResult, make_result


def most_entity(note: Note, mentions: list[EntityMention], budget: int) -> SummaryResult:
    """Most mentions first; ties go to the shorter, then the earlier sentence."""
    counts = Counter(m.sentence_index for m in mentions)
    lengths = note.lengths
    order = sorted(range(len(note)), key=lambda t: (-counts[t], lengths[t], t))
    return make_result(note, order, budget, "most-entity")


class TfidfWeights:
    """Note-level IDF over words; tf is the raw count of a word within its note."""

    def __init__(self, corpus: Corpus):
        if len(corpus) == 0:
            raise ConfigurationError("cannot compute TF-IDF on an empty corpus")
        df = Counter()
        for note in corpus:
            df.update({w for s in note.sentences for w in s.tokens})
        n = len(corpus)
        self.idf = {w: math.log(n / c) for w, c in df.items()}

    def __getitem__(self, word: str) -> float:
        return self.idf.get(word, 0.0)

    def sentence_weights(self, note: Note) -> list[float]:
        # each distinct word of a sentence counts once, scaled by its note-level count
        tf = Counter(w for s in note.sentences for w in s.tokens)
        return [sum(tf[w] * self[w] for w in set(s.tokens)) for s in note.sentences]

    def sentence_weight(self, note: Note, index: int) -> float:
        return self.sentence_weights(note)[index]


def tfidf_weights(corpus: Corpus) -> TfidfWeights:
    return TfidfWeights(corpus)


def tfidf_select(note: Note, weights: TfidfWeights, budget: int) -> SummaryResult:
    w = weights.sentence_weights(note)
    order = sorted(range(len(note)), key=lambda t: (-w[t], t))
    return make_result(note, order, budget, "tfidf")


def _bow_cosines(note: Note) -> np.ndarray:
    vocab = sorted({w for s in note.sentences for w in s.tokens})
    index = {w: i for i, w in enumerate(vocab)}
    mat = np.zeros((len(note), len(vocab)))
    for t, s in enumerate(note.sentences):
        for w in s.tokens:
            mat[t, index[w]] += 1.0
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    unit = mat / norms
    return unit @ unit.T


def mmr_select(note: Note, weights: TfidfWeights, budget: int, penalty: float = 1.0) -> SummaryResult:
    """Pick the fitting sentence maximizing weight - penalty * max cosine to the picks so far."""
    w = np.array(weights.sentence_weights(note))
    sims = _bow_cosines(note)
    lengths = note.lengths
    chosen: list[int] = []
    words = 0
    remaining = set(range(len(note)))
    while True:
        best, best_score = None, -math.inf
        for t in sorted(remaining):
            if words + lengths[t] > budget:
                continue
            redundancy = max((sims[t, k] for k in chosen), default=0.0)
            score = w[t] - penalty * redundancy
            if score > best_score:
                best, best_score = t, score
        if best is None:
            break
        chosen.append(best)
        remaining.discard(best)
        words += lengths[best]
    return SummaryResult(note.note_id, tuple(sorted(chosen)), words, "tfidf-mmr", note.patient_id)


def random_select(note: Note, budget: int, rng: np.random.Generator) -> SummaryResult:
    """Uniformly random order, greedily filled to the budget."""
    return make_result(note, [int(i) for i in rng.permutation(len(note))], budget, "random")
