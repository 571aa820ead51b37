from __future__ import annotations

import numpy as np

from ..corpus import Note
from ..summary import SummaryResult, make_result
from .model import ModelParams, forward


def sentence_probs(params: ModelParams, note: Note) -> np.ndarray:
    return forward(params, note).probs


def select_by_probs(note: Note, probs, budget: int, method: str = "model") -> SummaryResult:
    """Highest probability first (earlier index on ties), skipping what does not fit."""
    order = sorted(range(len(note)), key=lambda t: (-probs[t], t))
    return make_result(note, order, budget, method)


def infer_summary(params: ModelParams, note: Note, word_budget_L: int,
                  method: str = "model") -> SummaryResult:
    return select_by_probs(note, sentence_probs(params, note), word_budget_L, method)
