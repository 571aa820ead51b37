"""Entity coverage of an earlier note by a later note's entities.

``cover_score`` is the exact max-based coverage; ``smoothed_objective`` replaces
the inner max by log-sum-exp over every sentence of the earlier note, so an
unselected sentence still contributes exp(0) = 1 to each entity's sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Note, Sentence
from .embeddings import EmbeddingTable
from .entities import EntityLexicon, IdfTable, entity_set, entity_str, extract_entities
from .errors import DataError, DimensionError


class EmptyEntitySet(DataError):
    """The later note mentions no entities; the pair carries no signal."""


@dataclass(frozen=True)
class CoverageInstance:
    sentence_sims: np.ndarray      # (entities, sentences), values in [0, 1]
    entity_weights: np.ndarray     # (entities,)
    sentence_lengths: np.ndarray   # (sentences,)
    entities: tuple = ()

    def __post_init__(self):
        sims = np.asarray(self.sentence_sims, dtype=np.float64)
        w = np.asarray(self.entity_weights, dtype=np.float64)
        lengths = np.asarray(self.sentence_lengths, dtype=np.int64)
        if sims.ndim != 2 or sims.shape != (w.size, lengths.size):
            raise DimensionError(
                f"sims {sims.shape} inconsistent with {w.size} weights and {lengths.size} lengths")
        if np.any(sims < 0) or np.any(sims > 1):
            raise ValueError("similarities must lie in [0, 1]")
        if np.any(w < 0):
            raise ValueError("entity weights must be non-negative")
        if np.any(lengths < 1):
            raise ValueError("sentence lengths must be >= 1")
        for name, arr in (("sentence_sims", sims), ("entity_weights", w),
                          ("sentence_lengths", lengths)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_entities(self) -> int:
        return self.sentence_sims.shape[0]

    @property
    def num_sentences(self) -> int:
        return self.sentence_sims.shape[1]

    def to_record(self) -> dict:
        return {
            "entities": [entity_str(e) for e in self.entities],
            "weights": self.entity_weights.tolist(),
            "lengths": self.sentence_lengths.tolist(),
            "sims": self.sentence_sims.tolist(),
        }


def _alpha(inst: CoverageInstance, alpha) -> np.ndarray:
    a = np.asarray(alpha)
    if a.shape != (inst.num_sentences,):
        raise DimensionError(f"alpha has shape {a.shape}, expected ({inst.num_sentences},)")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError("alpha must be binary")
    return a.astype(np.float64)


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=-1, keepdims=True)
    return np.divide(mat, norms, out=np.zeros_like(mat), where=norms > 0)


def sim_entity_sentence(table: EmbeddingTable, entity, sentence: Sentence) -> float:
    """Best word cosine between the entity vector and the sentence, floored at 0."""
    return float(similarity_matrix(table, [entity], [sentence])[0, 0])


def similarity_matrix(table: EmbeddingTable, entities, sentences) -> np.ndarray:
    if not entities or not sentences:
        return np.zeros((len(entities), len(sentences)))
    ents = _unit_rows(np.array([table.embed_entity(e) for e in entities]))
    out = np.empty((len(entities), len(sentences)))
    for t, sent in enumerate(sentences):
        words = _unit_rows(table.matrix(sent.tokens))
        out[:, t] = (ents @ words.T).max(axis=1)
    return np.clip(out, 0.0, 1.0)


def build_instance(earlier: Note, later: Note, lexicon: EntityLexicon,
                   table: EmbeddingTable, idf: IdfTable, extractor=None) -> CoverageInstance:
    mentions = extractor(later) if extractor else extract_entities(later, lexicon)
    ents = entity_set(mentions)
    if not ents:
        raise EmptyEntitySet(f"note {later.note_id!r} has no entities")
    missing = [entity_str(e) for e in ents if e not in idf]
    if missing:
        raise DataError(f"entities missing from IDF table: {missing}")
    return CoverageInstance(
        similarity_matrix(table, ents, earlier.sentences),
        np.array([idf[e] for e in ents]),
        np.array(earlier.lengths),
        tuple(ents),
    )


def _logsumexp(z: np.ndarray) -> np.ndarray:
    top = z.max(axis=1)
    return top + np.log(np.exp(z - top[:, None]).sum(axis=1))


def cover_score(inst: CoverageInstance, alpha) -> float:
    a = _alpha(inst, alpha)
    if inst.num_sentences == 0:
        return 0.0
    best = (inst.sentence_sims * a).max(axis=1)
    return float(inst.entity_weights @ best)


def smoothed_objective(inst: CoverageInstance, alpha, temperature: float = 1.0,
                       inner: str = "all") -> float:
    """Sum over entities of weight * temperature * log-sum-exp(alpha * sim / temperature).

    ``inner="selected"`` restricts the inner sum to selected sentences; an entity
    then contributes 0 when nothing is selected.
    """
    a = _alpha(inst, alpha)
    z = inst.sentence_sims * a / temperature
    if inner == "all":
        lse = _logsumexp(z)
    elif inner == "selected":
        mask = a.astype(bool)
        if not mask.any():
            return 0.0
        lse = _logsumexp(z[:, mask])
    else:
        raise ValueError(f"unknown inner mode {inner!r}")
    return float(inst.entity_weights @ (temperature * lse))
