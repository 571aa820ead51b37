"""Budgeted selection result shared by every summarizer."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import dumps_line
from .errors import ParseError


@dataclass(frozen=True)
class SummaryResult:
    note_id: str
    selected: tuple[int, ...]
    total_words: int
    method: str
    patient_id: str = ""

    @property
    def key(self) -> tuple[str, str]:
        return (self.patient_id, self.note_id)

    def to_record(self) -> dict:
        return {"patient_id": self.patient_id, "note_id": self.note_id,
                "method": self.method, "selected": list(self.selected),
                "total_words": self.total_words}


def greedy_fill(order: Iterable[int], lengths: Sequence[int], budget: int) -> tuple[list[int], int]:
    """Walk ``order``, keeping each sentence that still fits; skipped ones stay skipped."""
    chosen, words = [], 0
    for i in order:
        if words + lengths[i] <= budget:
            chosen.append(i)
            words += lengths[i]
    return sorted(chosen), words


def make_result(note, order, budget: int, method: str) -> SummaryResult:
    chosen, words = greedy_fill(order, note.lengths, budget)
    return SummaryResult(note.note_id, tuple(chosen), words, method, note.patient_id)


def write_summaries(results: Iterable[SummaryResult], path) -> None:
    Path(path).write_text("".join(dumps_line(r.to_record()) + "\n" for r in results),
                          encoding="utf-8")


def read_summaries(path) -> list[SummaryResult]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if "alpha" in rec:
                    # label records double as references
                    selected = tuple(i for i, a in enumerate(rec["alpha"]) if a)
                    method = rec.get("solver", "pseudolabel")
                    words = int(rec.get("total_words", -1))
                else:
                    selected = tuple(int(i) for i in rec["selected"])
                    method = rec.get("method", "")
                    words = int(rec.get("total_words", -1))
                out.append(SummaryResult(rec["note_id"], selected, words, method,
                                         rec.get("patient_id", "")))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad summary record: {exc!r}", lineno) from None
    return out
