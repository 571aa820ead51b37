"""Recall-oriented ROUGE-1, ROUGE-2 and ROUGE-L on raw tokens."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import Corpus
from .errors import CoverageError, UndefinedReferenceError
from .summary import SummaryResult

METRICS = ("rouge1", "rouge2", "rougeL")


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    if len(reference) < n:
        raise UndefinedReferenceError(f"reference has {len(reference)} tokens, ROUGE-{n} needs {n}")
    ref = ngrams(reference, n)
    cand = ngrams(candidate, n)
    overlap = sum(min(c, cand[g]) for g, c in ref.items())
    return overlap / sum(ref.values())


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    if not reference:
        raise UndefinedReferenceError("empty reference")
    return lcs_length(candidate, reference) / len(reference)


@dataclass
class RougeReport:
    method: str
    per_note: list[dict] = field(default_factory=list)
    rouge1: float = 0.0
    rouge2: float = 0.0
    rougeL: float = 0.0

    @property
    def note_count(self) -> int:
        return len(self.per_note)

    def row(self) -> dict:
        return {"method": self.method, "rouge1": self.rouge1, "rouge2": self.rouge2,
                "rougeL": self.rougeL, "notes": self.note_count}


def selection_tokens(note, selected) -> list[str]:
    return [w for i in sorted(selected) for w in note.sentences[i].tokens]


def evaluate(summaries: list[SummaryResult], references: list[SummaryResult], corpus: Corpus,
             method: str | None = None) -> RougeReport:
    """Macro-average over reference records; each is scored against its note's summary.

    A note may carry several references (one per later note it was paired
    with); each counts as its own unit.
    """
    by_note = {}
    for s in summaries:
        if s.key in by_note:
            raise CoverageError(f"two summaries for note {s.note_id!r}")
        by_note[s.key] = s
    ref_keys = {r.key for r in references}
    missing_ref = sorted(set(by_note) - ref_keys)
    if missing_ref:
        raise CoverageError(f"no reference for notes {missing_ref[:5]}")
    missing_sum = sorted(ref_keys - set(by_note))
    if missing_sum:
        raise CoverageError(f"no summary for notes {missing_sum[:5]}")
    if method is None:
        method = summaries[0].method if summaries else ""
    report = RougeReport(method)
    for ref in references:
        note = corpus.get(*ref.key)
        cand = selection_tokens(note, by_note[ref.key].selected)
        gold = selection_tokens(note, ref.selected)
        report.per_note.append({
            "patient_id": ref.patient_id, "note_id": ref.note_id,
            "rouge1": rouge_n(cand, gold, 1), "rouge2": rouge_n(cand, gold, 2),
            "rougeL": rouge_l(cand, gold),
        })
    if report.per_note:
        for m in METRICS:
            setattr(report, m, sum(r[m] for r in report.per_note) / len(report.per_note))
    return report


def format_table(reports: list[RougeReport]) -> str:
    lines = [f"{'Method':<24}{'ROUGE-1':>9}{'ROUGE-2':>9}{'ROUGE-L':>9}"]
    for r in reports:
        lines.append(f"{r.method:<24}{r.rouge1:>9.4f}{r.rouge2:>9.4f}{r.rougeL:>9.4f}")
    return "\n".join(lines)
