"""Corpus data model, line-format ingestion and note pairing."""

from __future__ import annotations

import datetime as dt
import json
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import DateFormatError, DuplicateKeyError, ParseError

SIX_MONTHS_DAYS = 183

_STRIP_RE = re.compile(r"^[^0-9a-z]+|[^0-9a-z]+$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, drop empties."""
    tokens = []
    for raw in text.lower().split():
        tok = _STRIP_RE.sub("", raw)
        if tok:
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[str, ...]
    char_span: tuple[int, int]
    text: str

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class Note:
    note_id: str
    patient_id: str
    timestamp: dt.date
    sentences: tuple[Sentence, ...]
    meta: Mapping = field(default_factory=dict, compare=True, hash=False)

    @property
    def key(self) -> tuple[str, str]:
        return (self.patient_id, self.note_id)

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)

    @property
    def lengths(self) -> list[int]:
        return [len(s.tokens) for s in self.sentences]

    def __len__(self) -> int:
        return len(self.sentences)


def make_note(patient_id: str, note_id: str, timestamp: dt.date,
              sentences: Iterable[str], meta: Mapping | None = None) -> Note:
    """Build a Note from raw sentence strings.

    Character spans index into the note text, which is the sentences joined
    by single spaces. Raises ValueError if a sentence has no tokens.
    """
    built = []
    offset = 0
    for i, raw in enumerate(sentences):
        if not isinstance(raw, str):
            raise ValueError(f"sentence {i} is not a string")
        toks = tokenize(raw)
        if not toks:
            raise ValueError(f"sentence {i} has no tokens")
        built.append(Sentence(i, tuple(toks), (offset, offset + len(raw)), raw))
        offset += len(raw) + 1
    if not built:
        raise ValueError("note has no sentences")
    return Note(note_id, patient_id, timestamp, tuple(built), dict(meta or {}))


@dataclass(frozen=True)
class NotePair:
    earlier: Note
    later: Note
    gap_days: int


class Corpus:
    """Notes grouped by patient and ordered by date within each patient.

    Patients are ordered by id. Ties in date keep their input order.
    """

    def __init__(self, notes: Iterable[Note] = ()):
        groups: dict[str, list[Note]] = {}
        seen = set()
        for note in notes:
            if note.key in seen:
                raise DuplicateKeyError(
                    f"duplicate note {note.note_id!r} for patient {note.patient_id!r}")
            seen.add(note.key)
            groups.setdefault(note.patient_id, []).append(note)
        self._groups: OrderedDict[str, tuple[Note, ...]] = OrderedDict(
            (pid, tuple(sorted(groups[pid], key=lambda n: n.timestamp)))
            for pid in sorted(groups)
        )
        self._index = {n.key: n for g in self._groups.values() for n in g}

    @property
    def notes(self) -> tuple[Note, ...]:
        return tuple(n for g in self._groups.values() for n in g)

    @property
    def patients(self) -> Mapping[str, tuple[Note, ...]]:
        return self._groups

    def get(self, patient_id: str, note_id: str) -> Note:
        return self._index[(patient_id, note_id)]

    def subset(self, patient_ids: Iterable[str]) -> "Corpus":
        keep = set(patient_ids)
        return Corpus(n for n in self.notes if n.patient_id in keep)

    def __len__(self) -> int:
        return len(self._index)

    def __iter__(self) -> Iterator[Note]:
        return iter(self.notes)

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self.notes == other.notes


def note_record(note: Note) -> dict:
    rec = {
        "patient_id": note.patient_id,
        "note_id": note.note_id,
        "date": note.timestamp.isoformat(),
        "sentences": [s.text for s in note.sentences],
    }
    if note.meta:
        rec["meta"] = note.meta
    return rec


def dumps_line(record: Mapping) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(", ", ": "))


def serialize(corpus: Corpus) -> str:
    return "".join(dumps_line(note_record(n)) + "\n" for n in corpus.notes)


def write_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(serialize(corpus), encoding="utf-8")


def parse_date(value, line=None) -> dt.date:
    if not isinstance(value, str) or not _DATE_RE.match(value):
        raise DateFormatError(f"date {value!r} is not YYYY-MM-DD", line)
    try:
        return dt.date.fromisoformat(value)
    except ValueError as exc:
        raise DateFormatError(f"invalid date {value!r}: {exc}", line) from None


def parse_record(rec, line=None) -> Note:
    if not isinstance(rec, dict):
        raise ParseError("record is not an object", line)
    for key in ("patient_id", "note_id", "date", "sentences"):
        if key not in rec:
            raise ParseError(f"missing field {key!r}", line)
    pid, nid, sents = rec["patient_id"], rec["note_id"], rec["sentences"]
    if not isinstance(pid, str) or not isinstance(nid, str):
        raise ParseError("patient_id and note_id must be strings", line)
    if not isinstance(sents, list):
        raise ParseError("sentences must be an array", line)
    date = parse_date(rec["date"], line)
    meta = rec.get("meta") or {}
    try:
        return make_note(pid, nid, date, sents, meta)
    except ValueError as exc:
        raise ParseError(str(exc), line) from None


def parse_lines(lines: Iterable[str]) -> Corpus:
    notes = []
    for lineno, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            rec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed record: {exc.msg}", lineno) from None
        notes.append(parse_record(rec, lineno))
    return Corpus(notes)


def ingest(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh)


def pair_notes(corpus: Corpus, min_gap_days: int = SIX_MONTHS_DAYS) -> list[NotePair]:
    """All (earlier, later) same-patient pairs at least ``min_gap_days`` apart."""
    pairs = []
    for notes in corpus.patients.values():
        for a, b in combinations(notes, 2):
            gap = (b.timestamp - a.timestamp).days
            if gap >= min_gap_days and gap > 0:
                pairs.append(NotePair(a, b, gap))
    return pairs


def pair_record(pair: NotePair) -> dict:
    return {
        "patient_id": pair.earlier.patient_id,
        "note_id": pair.earlier.note_id,
        "later_note_id": pair.later.note_id,
        "gap_days": pair.gap_days,
    }
