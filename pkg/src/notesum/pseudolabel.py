"""Budgeted maximization of the smoothed coverage objective.

Three solvers share one tie rule: among assignments whose objective is within a
relative 1e-12 of the best, prefer the lexicographically smallest tuple of
selected sentence indices (so ``(0,)`` beats ``(1,)`` and ``(0,)`` beats
``(0, 1)``).

* ``solve_exact``: depth-first branch-and-bound over the subset tree, visiting
  index tuples in lexicographic order and pruning a subtree when the objective
  of the current selection plus every remaining sentence cannot beat the
  incumbent.
* ``solve_heuristic``: greedy gain, count repair, then best-improvement swaps.
* ``solve_oracle``: exhaustive enumeration for tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Note, NotePair, dumps_line
from .coverage import CoverageInstance, EmptyEntitySet, build_instance, smoothed_objective
from .errors import CapExceededError, ConfigurationError, EmptyTrainingSetError, ParseError

DEFAULT_BUDGET = 200
EXACT_CAP = 22
MAX_SWAPS = 1000
REL_TOL = 1e-12


@dataclass(frozen=True)
class BudgetConstraints:
    word_budget_L: int
    min_sentences_L1: int
    max_sentences_L2: int

    def __post_init__(self):
        if not 1 <= self.min_sentences_L1 <= self.max_sentences_L2:
            raise ConfigurationError(
                f"need 1 <= L1 <= L2, got L1={self.min_sentences_L1} L2={self.max_sentences_L2}")
        if self.word_budget_L < 0:
            raise ConfigurationError("word budget must be non-negative")


@dataclass(frozen=True)
class LabelAssignment:
    alpha: np.ndarray
    objective: float
    feasible: bool
    solver: str

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.alpha))


def derive_constraints(note: Note | int, word_budget_L: int = DEFAULT_BUDGET) -> BudgetConstraints:
    """L1 = max(1, floor(n / 5.5)), L2 = max(L1, ceil(n / 4)) for an n-sentence note."""
    if word_budget_L < 1:
        raise ConfigurationError("word budget must be >= 1")
    n = note if isinstance(note, int) else len(note)
    lo = max(1, (2 * n) // 11)
    hi = max(lo, -(-n // 4))
    return BudgetConstraints(word_budget_L, lo, hi)


def satisfies_constraints(alpha, lengths, c: BudgetConstraints) -> bool:
    a = np.asarray(alpha)
    k = int(a.sum())
    return (int(np.dot(a, lengths)) <= c.word_budget_L
            and c.min_sentences_L1 <= k <= c.max_sentences_L2)


def _tol(best: float) -> float:
    return REL_TOL * max(1.0, abs(best)) if math.isfinite(best) else 0.0


def _alpha_from(selected: Iterable[int], n: int) -> np.ndarray:
    a = np.zeros(n, dtype=np.int8)
    a[list(selected)] = 1
    return a


def _infeasible(inst: CoverageInstance, solver: str, temperature: float) -> LabelAssignment:
    a = np.zeros(inst.num_sentences, dtype=np.int8)
    return LabelAssignment(a, smoothed_objective(inst, a, temperature), False, solver)


class _Scorer:
    """Objective in terms of per-entity sums S_e = n + sum over selected (exp(sim/T) - 1)."""

    def __init__(self, inst: CoverageInstance, temperature: float):
        # sums are kept in linear space, so exp(1 / T) must stay finite
        if not 1.0 / 700.0 <= temperature:
            raise ConfigurationError(f"temperature {temperature} outside the solvable range [1/700, inf)")
        self.n = inst.num_sentences
        self.w = inst.entity_weights
        self.T = temperature
        self.gain = np.expm1(inst.sentence_sims / temperature)
        # suffix[j] = sum of gain columns j..n-1
        self.suffix = np.zeros((inst.num_entities, self.n + 1))
        self.suffix[:, :self.n] = np.cumsum(self.gain[:, ::-1], axis=1)[:, ::-1]
        self.base = np.full(inst.num_entities, float(self.n))

    def value(self, sums) -> float | np.ndarray:
        return self.T * (np.log(sums).T @ self.w)

    def sums(self, selected) -> np.ndarray:
        s = self.base.copy()
        for j in selected:
            s += self.gain[:, j]
        return s


def upper_bound(inst: CoverageInstance, selected: Sequence[int], next_index: int,
                temperature: float = 1.0) -> float:
    """Objective of ``selected`` plus every sentence at index >= ``next_index``."""
    sc = _Scorer(inst, temperature)
    return float(sc.value(sc.sums(selected) + sc.suffix[:, next_index]))


def solve_exact(inst: CoverageInstance, c: BudgetConstraints, cap: int = EXACT_CAP,
                temperature: float = 1.0) -> LabelAssignment:
    n = inst.num_sentences
    if n > cap:
        raise CapExceededError(f"{n} sentences exceeds exact-solver cap {cap}")
    sc = _Scorer(inst, temperature)
    lengths = inst.sentence_lengths.tolist()
    L, L1, L2 = c.word_budget_L, c.min_sentences_L1, c.max_sentences_L2
    best_val = -math.inf
    best_sel: tuple[int, ...] | None = None
    chosen: list[int] = []

    def visit(start: int, sums: np.ndarray, words: int) -> None:
        nonlocal best_val, best_sel
        k = len(chosen)
        if k >= L1:
            v = float(sc.value(sums))
            if v > best_val + _tol(best_val):
                best_val, best_sel = v, tuple(chosen)
        if k == L2:
            return
        for j in range(start, n):
            if k + (n - j) < L1:
                break
            # bounds shrink as j grows, so the first failure ends the loop
            if best_sel is not None and float(sc.value(sums + sc.suffix[:, j])) <= best_val + _tol(best_val):
                break
            if words + lengths[j] > L:
                continue
            chosen.append(j)
            visit(j + 1, sums + sc.gain[:, j], words + lengths[j])
            chosen.pop()

    visit(0, sc.base.copy(), 0)
    if best_sel is None:
        return _infeasible(inst, "exact", temperature)
    a = _alpha_from(best_sel, n)
    return LabelAssignment(a, smoothed_objective(inst, a, temperature), True, "exact")


def solve_oracle(inst: CoverageInstance, c: BudgetConstraints,
                 temperature: float = 1.0) -> LabelAssignment:
    """Exhaustive search over all 2^n selections."""
    n = inst.num_sentences
    lengths = inst.sentence_lengths
    feasible = []
    for k in range(c.min_sentences_L1, min(c.max_sentences_L2, n) + 1):
        for combo in combinations(range(n), k):
            if sum(int(lengths[i]) for i in combo) <= c.word_budget_L:
                feasible.append(combo)
    if not feasible:
        return _infeasible(inst, "oracle", temperature)
    values = [smoothed_objective(inst, _alpha_from(s, n), temperature) for s in feasible]
    top = max(values)
    winner = min(s for s, v in zip(feasible, values) if v >= top - _tol(top))
    a = _alpha_from(winner, n)
    return LabelAssignment(a, smoothed_objective(inst, a, temperature), True, "oracle")


def solve_heuristic(inst: CoverageInstance, c: BudgetConstraints,
                    temperature: float = 1.0, max_swaps: int = MAX_SWAPS) -> LabelAssignment:
    n = inst.num_sentences
    sc = _Scorer(inst, temperature)
    lengths = inst.sentence_lengths
    L, L1, L2 = c.word_budget_L, c.min_sentences_L1, c.max_sentences_L2
    selected = np.zeros(n, dtype=bool)
    sums = sc.base.copy()
    words = 0

    # greedy by objective gain
    while selected.sum() < L2:
        cand = np.flatnonzero(~selected & (lengths + words <= L))
        if cand.size == 0:
            break
        gains = sc.value(sums[:, None] + sc.gain[:, cand]) - sc.value(sums)
        i = int(np.argmax(gains))
        if gains[i] <= 0:
            break
        j = int(cand[i])
        selected[j] = True
        sums += sc.gain[:, j]
        words += int(lengths[j])

    # repair the minimum count with the shortest sentences that still fit
    by_length = sorted(range(n), key=lambda t: (int(lengths[t]), t))
    for j in by_length:
        if selected.sum() >= L1:
            break
        if not selected[j] and words + lengths[j] <= L:
            selected[j] = True
            sums += sc.gain[:, j]
            words += int(lengths[j])
    if selected.sum() < L1:
        if L1 > n or sum(int(lengths[t]) for t in by_length[:L1]) > L:
            return _infeasible(inst, "heuristic", temperature)
        selected[:] = False
        selected[by_length[:L1]] = True
        sums = sc.sums(np.flatnonzero(selected))
        words = int(lengths[selected].sum())

    # best-improvement 1-swap local search
    for _ in range(max_swaps):
        current = float(sc.value(sums))
        best_gain, best_move = _tol(current), None
        ins = np.flatnonzero(~selected)
        for out in np.flatnonzero(selected):
            ok = ins[words - lengths[out] + lengths[ins] <= L]
            if ok.size == 0:
                continue
            base = sums - sc.gain[:, out]
            vals = sc.value(base[:, None] + sc.gain[:, ok]) - current
            i = int(np.argmax(vals))
            if vals[i] > best_gain:
                best_gain, best_move = vals[i], (int(out), int(ok[i]))
        if best_move is None:
            break
        out, j = best_move
        selected[out], selected[j] = False, True
        sums += sc.gain[:, j] - sc.gain[:, out]
        words += int(lengths[j] - lengths[out])

    a = selected.astype(np.int8)
    return LabelAssignment(a, smoothed_objective(inst, a, temperature), True, "heuristic")


def solve(inst: CoverageInstance, c: BudgetConstraints, cap: int = EXACT_CAP,
          temperature: float = 1.0) -> LabelAssignment:
    """Exact below the cap, heuristic above it."""
    if inst.num_sentences <= cap:
        return solve_exact(inst, c, cap, temperature)
    return solve_heuristic(inst, c, temperature)


@dataclass(frozen=True)
class TrainingExample:
    note: Note
    later: Note
    y: np.ndarray
    objective: float
    solver: str

    def to_record(self) -> dict:
        return {
            "patient_id": self.note.patient_id,
            "note_id": self.note.note_id,
            "later_note_id": self.later.note_id,
            "alpha": [int(v) for v in self.y],
            "objective": self.objective,
            "solver": self.solver,
        }


@dataclass
class TrainingSet:
    examples: list[TrainingExample]
    provenance: list[NotePair] = field(default_factory=list)
    dropped: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def dumps(self) -> str:
        return "".join(dumps_line(ex.to_record()) + "\n" for ex in self.examples)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    def subset(self, patient_ids) -> "TrainingSet":
        keep = set(patient_ids)
        return TrainingSet([e for e in self.examples if e.note.patient_id in keep],
                           [p for p in self.provenance if p.earlier.patient_id in keep])


def load_training_set(path, corpus: Corpus) -> TrainingSet:
    examples, pairs = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                note = corpus.get(rec["patient_id"], rec["note_id"])
                later = corpus.get(rec["patient_id"], rec["later_note_id"])
                y = np.array(rec["alpha"], dtype=np.int8)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad label record: {exc!r}", lineno) from None
            if y.shape != (len(note),):
                raise ParseError(f"alpha length {y.size} != {len(note)} sentences", lineno)
            examples.append(TrainingExample(note, later, y, float(rec.get("objective", 0.0)),
                                            rec.get("solver", "")))
            pairs.append(NotePair(note, later, (later.timestamp - note.timestamp).days))
    if not examples:
        raise EmptyTrainingSetError(f"no label records in {path}")
    return TrainingSet(examples, pairs)


def build_training_set(corpus: Corpus, pairs: list[NotePair], word_budget_L: int,
                       lexicon, table, idf, cap: int = EXACT_CAP,
                       extractor=None) -> TrainingSet:
    """One labeled example per usable pair, in pair order."""
    examples, used = [], []
    dropped = {"no_entities": 0, "infeasible": 0}
    for pair in pairs:
        try:
            inst = build_instance(pair.earlier, pair.later, lexicon, table, idf, extractor)
        except EmptyEntitySet:
            dropped["no_entities"] += 1
            continue
        res = solve(inst, derive_constraints(pair.earlier, word_budget_L), cap)
        if not res.feasible:
            dropped["infeasible"] += 1
            continue
        examples.append(TrainingExample(pair.earlier, pair.later, res.alpha, res.objective, res.solver))
        used.append(pair)
    if not examples:
        raise EmptyTrainingSetError(
            f"no usable pairs out of {len(pairs)} (dropped: {dropped})")
    return TrainingSet(examples, used, dropped)
