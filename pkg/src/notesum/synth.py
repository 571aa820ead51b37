"""Seeded synthetic patient corpora with planted entity recurrence.

Each patient gets a small profile of persistent entities. A sentence is a
planted sentence with probability 0.3 and carries one persistent entity; in
every note after the first, planted sentences restate only entities already
planted in earlier notes of that patient. Other sentences either list routine
transient entities or are filler. Each note's ``meta`` records:

* ``planted``: indices of its planted sentences
* ``planted_entities``: the persistent entities those sentences carry
"""

from __future__ import annotations

import datetime as dt
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, make_note
from .embeddings import DEFAULT_DIM, EmbeddingTable, fallback_vector
from .entities import EntityLexicon, entity_str
from .errors import ConfigurationError, UsageError
from .resources import FILLER_WORDS, PERSISTENT_ENTITIES, TRANSIENT_ENTITIES

PLANT_PROB = 0.3
TRANSIENT_PROB = 0.4
PROFILE_SIZE = 4
SENTENCES_RANGE = (8, 15)
FILLER_RANGE = (4, 9)
GAP_DAYS_RANGE = (190, 420)
CATEGORY_WEIGHT = 0.5


def default_lexicon() -> EntityLexicon:
    return EntityLexicon(PERSISTENT_ENTITIES + TRANSIENT_ENTITIES)


def _split_lexicon(lexicon: EntityLexicon, persistent, rng) -> tuple[list, list]:
    entries = sorted(lexicon.entries)
    if persistent is not None:
        keep = {e if isinstance(e, tuple) else tuple(e.split()) for e in persistent}
        pers = [e for e in entries if e in keep]
    else:
        builtin = {tuple(e.split()) for e in PERSISTENT_ENTITIES}
        pers = [e for e in entries if e in builtin]
        if not pers or len(pers) == len(entries):
            order = rng.permutation(len(entries))
            cut = max(1, int(round(0.7 * len(entries))))
            pers = sorted(entries[i] for i in order[:cut])
    trans = [e for e in entries if e not in set(pers)]
    if not pers:
        raise ConfigurationError("no persistent entities available for planting")
    return pers, trans


def synth_generate(seed: int, patients: int, notes_per_patient: int,
                   vocab: Sequence[str] | None = None,
                   entity_lexicon: EntityLexicon | None = None,
                   persistent: Iterable | None = None) -> Corpus:
    if patients < 1:
        raise UsageError("patients must be >= 1")
    if notes_per_patient < 2:
        raise UsageError("notes_per_patient must be >= 2")
    vocab = list(FILLER_WORDS if vocab is None else vocab)
    lexicon = default_lexicon() if entity_lexicon is None else entity_lexicon
    if not vocab or len(lexicon) == 0:
        raise ConfigurationError("vocabulary and entity lexicon must be non-empty")
    entity_tokens = {t for e in lexicon.entries for t in e}
    filler = sorted({w.lower() for w in vocab} - entity_tokens)
    if not filler:
        raise ConfigurationError("vocabulary has no words outside the entity lexicon")

    rng = np.random.default_rng(seed)
    pers, trans = _split_lexicon(lexicon, persistent, rng)
    notes = []
    for p in range(patients):
        pid = f"p{p + 1:04d}"
        k = min(PROFILE_SIZE, len(pers))
        profile = [pers[i] for i in sorted(rng.choice(len(pers), size=k, replace=False))]
        date = dt.date(2000, 1, 1) + dt.timedelta(days=int(rng.integers(0, 3650)))
        planted_so_far: list = []
        for j in range(notes_per_patient):
            pool = profile if j == 0 else planted_so_far
            n_sent = int(rng.integers(*SENTENCES_RANGE, endpoint=True))
            kinds = []
            for _ in range(n_sent):
                u = rng.random()
                if u < PLANT_PROB:
                    kinds.append("planted")
                elif trans and u < PLANT_PROB + (1 - PLANT_PROB) * TRANSIENT_PROB:
                    kinds.append("transient")
                else:
                    kinds.append("filler")
            if "planted" not in kinds:
                kinds[int(rng.integers(n_sent))] = "planted"
            texts, planted_idx, planted_ents = [], [], []
            for t, kind in enumerate(kinds):
                words = [filler[i] for i in rng.integers(len(filler), size=int(
                    rng.integers(*FILLER_RANGE, endpoint=True)))]
                if kind == "planted":
                    ent = pool[int(rng.integers(len(pool)))]
                    pos = int(rng.integers(len(words) + 1))
                    words[pos:pos] = list(ent)
                    planted_idx.append(t)
                    planted_ents.append(entity_str(ent))
                elif kind == "transient":
                    count = min(len(trans), int(rng.integers(2, 4)))
                    for i in rng.choice(len(trans), size=count, replace=False):
                        pos = int(rng.integers(len(words) + 1))
                        words[pos:pos] = list(trans[i])
                text = " ".join(words)
                texts.append(text[0].upper() + text[1:] + ".")
            for ent in planted_ents:
                tup = tuple(ent.split())
                if tup not in planted_so_far:
                    planted_so_far.append(tup)
            meta = {"planted": planted_idx, "planted_entities": sorted(set(planted_ents))}
            notes.append(make_note(pid, f"{pid}-n{j + 1:02d}", date, texts, meta))
            date += dt.timedelta(days=int(rng.integers(*GAP_DAYS_RANGE, endpoint=True)))
    return Corpus(notes)


def synth_embeddings(words: Iterable[str], seed: int, lexicon: EntityLexicon | None = None,
                     persistent: Iterable | None = None, dim: int = DEFAULT_DIM,
                     category_weight: float = CATEGORY_WEIGHT) -> EmbeddingTable:
    """Stand-in for pretrained vectors over a synthetic corpus.

    Persistent entity tokens and filler words each mix a direction shared by
    their group with a word-specific hashed direction, so chronic conditions
    sit closer to each other than to unrelated words, as they would in
    embeddings trained on clinical text. Transient entity tokens keep only
    their own direction: one-off findings should not cover each other. Unknown
    words fall back to plain hashed vectors.
    """
    if not 0.0 <= category_weight <= 1.0:
        raise ConfigurationError("category_weight must lie in [0, 1]")
    lexicon = default_lexicon() if lexicon is None else lexicon
    pers, trans = _split_lexicon(lexicon, persistent, np.random.default_rng(seed))
    category = {tok: "transient" for ent in trans for tok in ent}
    category.update({tok: "persistent" for ent in pers for tok in ent})
    centers = {name: fallback_vector(f"\x00category:{name}", seed, dim)
               for name in ("persistent", "filler")}
    own = np.sqrt(1.0 - category_weight ** 2)
    vectors = {}
    for w in sorted(set(words)):
        group = category.get(w, "filler")
        v = fallback_vector(w, seed, dim)
        if group in centers:
            v = category_weight * centers[group] + own * v
        vectors[w] = v / np.linalg.norm(v)
    return EmbeddingTable(vectors, dim, fallback_seed=seed)
