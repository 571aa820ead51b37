"""Lexicon-based medical entity extraction and corpus IDF weights."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

from .corpus import Corpus, Note, tokenize
from .errors import ConfigurationError

MAX_ENTITY_TOKENS = 6

Entity = tuple[str, ...]


def entity_str(entity: Entity) -> str:
    return " ".join(entity)


class EntityLexicon:
    """Set of entity surface forms, each 1..6 lowercase tokens."""

    def __init__(self, entries: Iterable[str | Entity]):
        forms = set()
        for entry in entries:
            toks = tuple(tokenize(entry)) if isinstance(entry, str) else tuple(entry)
            if not toks:
                raise ConfigurationError(f"empty lexicon entry {entry!r}")
            if len(toks) > MAX_ENTITY_TOKENS:
                raise ConfigurationError(
                    f"lexicon entry {entry!r} longer than {MAX_ENTITY_TOKENS} tokens")
            forms.add(toks)
        self.entries: frozenset[Entity] = frozenset(forms)
        self.max_len = max((len(e) for e in forms), default=0)

    def __contains__(self, entity) -> bool:
        return tuple(entity) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries))

    @classmethod
    def load(cls, path) -> "EntityLexicon":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(line for line in lines if line.strip())

    def dump(self) -> str:
        return "".join(entity_str(e) + "\n" for e in self)


@dataclass(frozen=True)
class EntityMention:
    entity: Entity
    sentence_index: int
    token_span: tuple[int, int]


class EntityExtractor(Protocol):
    def __call__(self, note: Note) -> list[EntityMention]: ...


def match_tokens(tokens, lexicon: EntityLexicon) -> list[tuple[int, int]]:
    """Greedy left-to-right longest match; returns non-overlapping spans."""
    spans = []
    i, n = 0, len(tokens)
    while i < n:
        for k in range(min(lexicon.max_len, n - i), 0, -1):
            if tuple(tokens[i:i + k]) in lexicon.entries:
                spans.append((i, i + k))
                i += k
                break
        else:
            i += 1
    return spans


def extract_entities(note: Note, lexicon: EntityLexicon) -> list[EntityMention]:
    mentions = []
    for sent in note.sentences:
        for start, end in match_tokens(sent.tokens, lexicon):
            mentions.append(EntityMention(sent.tokens[start:end], sent.index, (start, end)))
    return mentions


class LexiconExtractor:
    """Extractor interface backed by an EntityLexicon."""

    def __init__(self, lexicon: EntityLexicon):
        self.lexicon = lexicon

    def __call__(self, note: Note) -> list[EntityMention]:
        return extract_entities(note, self.lexicon)


def entity_set(mentions: Iterable[EntityMention]) -> list[Entity]:
    return sorted({m.entity for m in mentions})


@dataclass(frozen=True)
class IdfTable:
    weights: dict
    note_count: int

    def __getitem__(self, entity: Entity) -> float:
        return self.weights[tuple(entity)]

    def __contains__(self, entity) -> bool:
        return tuple(entity) in self.weights

    def get(self, entity, default=None):
        return self.weights.get(tuple(entity), default)


def compute_idf(corpus: Corpus, lexicon: EntityLexicon, extractor=None) -> IdfTable:
    """lambda(e) = ln(N / df(e)) with notes as the document unit."""
    if len(corpus) == 0:
        raise ConfigurationError("cannot compute IDF on an empty corpus")
    extractor = extractor or LexiconExtractor(lexicon)
    df = Counter()
    for note in corpus:
        df.update({m.entity for m in extractor(note)})
    n = len(corpus)
    return IdfTable({e: math.log(n / c) for e, c in df.items()}, n)


def mention_record(m: EntityMention) -> dict:
    return {"entity": entity_str(m.entity), "sentence": m.sentence_index,
            "span": list(m.token_span)}
