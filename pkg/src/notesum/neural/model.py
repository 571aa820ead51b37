"""Hierarchical Bi-GRU sentence scorer.

Word-level Bi-GRU -> sentence vector [final fwd, final bwd]; sentence-level
Bi-GRU -> h_t = [h_t^f, h_t^b]; note vector d = tanh(W_d mean(h) + b_2). Sentences
are scored left to right:

    logit_t = W_c.h_t + h_t.W_s.d - h_t.W_r.tanh(s_t) + W_p.p_t + b_1
    P_t     = sigmoid(logit_t)
    s_{t+1} = s_t + P_t * h_t,   s_1 = 0

and trained with summed binary cross-entropy over the note's sentences.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Iterable

import numpy as np

from ..corpus import Note
from ..embeddings import EmbeddingTable
from ..errors import CapacityError, DimensionError
from .gru import GruCellParams, gate_shapes, gru_backward, gru_forward, sigmoid

CELLS = ("word_fwd", "word_bwd", "sent_fwd", "sent_bwd")


@dataclass(frozen=True)
class ModelConfig:
    emb_dim: int = 200
    hidden_dim: int = 200
    pos_dim: int = 50
    max_positions: int = 64
    use_novelty: bool = True
    use_position: bool = True
    trainable_embeddings: bool = False
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def tensor_shapes(config: ModelConfig, vocab_size: int) -> dict[str, tuple[int, ...]]:
    E, H, P = config.emb_dim, config.hidden_dim, config.pos_dim
    shapes = {"embedding": (vocab_size, E)}
    for cell, in_dim in zip(CELLS, (E, E, 2 * H, 2 * H)):
        for name, shape in gate_shapes(in_dim, H).items():
            shapes[f"{cell}.{name}"] = shape
    shapes.update({
        "W_c": (2 * H,), "W_s": (2 * H, 2 * H), "W_r": (2 * H, 2 * H),
        "W_d": (2 * H, 2 * H), "b_2": (2 * H,), "b_1": (1,),
        "W_p": (P,), "position_table": (config.max_positions, P),
    })
    return shapes


class ModelParams:
    """All model tensors plus the vocabulary that indexes the embedding rows."""

    def __init__(self, config: ModelConfig, vocab: list[str], tensors: dict[str, np.ndarray],
                 table: EmbeddingTable | None = None):
        self.config = config
        self.vocab = list(vocab)
        self.word_index = {w: i for i, w in enumerate(self.vocab)}
        expected = tensor_shapes(config, len(self.vocab))
        if set(tensors) != set(expected):
            raise DimensionError(f"tensor names mismatch: {sorted(set(tensors) ^ set(expected))}")
        for name, shape in expected.items():
            if tensors[name].shape != shape:
                raise DimensionError(f"{name} has shape {tensors[name].shape}, expected {shape}")
        self.tensors = {k: np.asarray(tensors[k], dtype=np.float64) for k in expected}
        self.table = table
        self.cells = {c: GruCellParams.from_tensors(self.tensors, c) for c in CELLS}

    @property
    def trainable_names(self) -> list[str]:
        names = [n for n in self.tensors if n != "embedding"]
        if self.config.trainable_embeddings:
            names.insert(0, "embedding")
        return names

    def with_flags(self, **flags) -> "ModelParams":
        return ModelParams(replace(self.config, **flags), self.vocab, self.tensors, self.table)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, self.vocab,
                           {k: v.copy() for k, v in self.tensors.items()}, self.table)

    def lookup(self, tokens) -> tuple[np.ndarray, np.ndarray]:
        """Vectors for ``tokens`` and their embedding rows (-1 when out of vocabulary)."""
        ids = np.array([self.word_index.get(w, -1) for w in tokens], dtype=np.int64)
        vecs = np.zeros((len(tokens), self.config.emb_dim))
        known = ids >= 0
        vecs[known] = self.tensors["embedding"][ids[known]]
        if self.table is not None:
            for i in np.flatnonzero(~known):
                vecs[i] = self.table.embed_word(tokens[i])
        return vecs, ids


def init_params(config: ModelConfig, words: Iterable[str],
                table: EmbeddingTable | None = None) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, seeded."""
    vocab = sorted(set(words))
    if table is not None and table.dim != config.emb_dim:
        raise DimensionError(f"embedding table dim {table.dim} != model emb_dim {config.emb_dim}")
    rng = np.random.default_rng(config.seed)
    tensors = {}
    for name, shape in tensor_shapes(config, len(vocab)).items():
        leaf = name.rsplit(".", 1)[-1]
        if name == "embedding":
            tensors[name] = (table.matrix(vocab) if table is not None
                             else np.zeros(shape)).reshape(shape).astype(np.float64)
        elif leaf.startswith("b_"):
            tensors[name] = np.zeros(shape)
        else:
            fan_in = shape[-1] if name == "position_table" else shape[0]
            bound = 1.0 / np.sqrt(fan_in)
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return ModelParams(config, vocab, tensors, table)


@dataclass
class ForwardTrace:
    word_fwd_states: np.ndarray
    word_bwd_states: np.ndarray
    sentence_embeddings: np.ndarray
    h: np.ndarray
    d: np.ndarray
    novelty: np.ndarray | None = None
    logits: np.ndarray | None = None
    probs: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)


def _check_capacity(params: ModelParams, note: Note) -> None:
    cfg = params.config
    if len(note) == 0:
        raise ValueError("note has no sentences")
    if cfg.use_position and len(note) > cfg.max_positions:
        raise CapacityError(
            f"note {note.note_id!r} has {len(note)} sentences; position table holds {cfg.max_positions}")


def _encode_words(params: ModelParams, notes: list[Note]):
    """Word-level Bi-GRU over every sentence of ``notes`` as one padded batch."""
    sents = [s for note in notes for s in note.sentences]
    lengths = [len(s.tokens) for s in sents]
    T, S, E = max(lengths), len(sents), params.config.emb_dim
    Xf, Xb = np.zeros((T, S, E)), np.zeros((T, S, E))
    mask = np.zeros((T, S))
    ids_f = np.full((T, S), -1, dtype=np.int64)
    ids_b = np.full((T, S), -1, dtype=np.int64)
    for j, sent in enumerate(sents):
        n = lengths[j]
        vecs, ids = params.lookup(sent.tokens)
        Xf[:n, j], Xb[:n, j] = vecs, vecs[::-1]
        ids_f[:n, j], ids_b[:n, j] = ids, ids[::-1]
        mask[:n, j] = 1.0
    wf, cache_f = gru_forward(params.cells["word_fwd"], Xf, mask)
    wb, cache_b = gru_forward(params.cells["word_bwd"], Xb, mask)
    emb = np.concatenate([wf[-1], wb[-1]], axis=1)
    cache = dict(cache_f=cache_f, cache_b=cache_b, ids_f=ids_f, ids_b=ids_b, wf=wf, wb=wb)
    return emb, cache


def _encode_sentences(params: ModelParams, sent: np.ndarray, wf, wb) -> ForwardTrace:
    H = params.config.hidden_dim
    sf, cache_sf = gru_forward(params.cells["sent_fwd"], sent[:, None, :])
    sb, cache_sb = gru_forward(params.cells["sent_bwd"], sent[::-1, None, :])
    h = np.concatenate([sf[:, 0], sb[::-1, 0]], axis=1)
    hbar = h.mean(axis=0)
    d = np.tanh(params.tensors["W_d"] @ hbar + params.tensors["b_2"])
    trace = ForwardTrace(wf, wb, sent, h, d)
    trace._cache = dict(cache_sf=cache_sf, cache_sb=cache_sb, hbar=hbar, H=H)
    return trace


def _encode_batch(params: ModelParams, notes: list[Note]):
    for note in notes:
        _check_capacity(params, note)
    emb, word_cache = _encode_words(params, notes)
    traces, offset = [], 0
    for note in notes:
        n = len(note)
        sl = slice(offset, offset + n)
        traces.append(_encode_sentences(params, emb[sl], word_cache["wf"][:, sl],
                                        word_cache["wb"][:, sl]))
        offset += n
    return traces, word_cache


def encode_note(params: ModelParams, note: Note) -> ForwardTrace:
    """Sentence states h_t and note vector d (probabilities not yet computed)."""
    traces, _ = _encode_batch(params, [note])
    return traces[0]


def predict_probs(params: ModelParams, trace: ForwardTrace) -> np.ndarray:
    """Score sentences in order; the novelty state accumulates predicted probabilities."""
    cfg, P = params.config, params.tensors
    h, N = trace.h, trace.h.shape[0]
    static = h @ P["W_c"] + h @ (P["W_s"] @ trace.d) + P["b_1"][0]
    if cfg.use_position:
        static = static + P["position_table"][:N] @ P["W_p"]
    s = np.zeros(h.shape[1])
    novelty = np.zeros_like(h)
    logits = np.empty(N)
    probs = np.empty(N)
    for t in range(N):
        novelty[t] = s
        logit = static[t]
        if cfg.use_novelty:
            logit -= h[t] @ (P["W_r"] @ np.tanh(s))
        logits[t] = logit
        probs[t] = sigmoid(np.array([logit]))[0]
        s = s + probs[t] * h[t]
    trace.novelty, trace.logits, trace.probs = novelty, logits, probs
    return probs


def forward(params: ModelParams, note: Note) -> ForwardTrace:
    trace = encode_note(params, note)
    predict_probs(params, trace)
    return trace


def bce_from_logits(logits: np.ndarray, y: np.ndarray) -> float:
    # -[y log p + (1-y) log(1-p)] = softplus(logit) - y * logit
    return float(np.sum(np.logaddexp(0.0, logits) - y * logits))


def loss(params: ModelParams, note: Note, y) -> float:
    trace = forward(params, note)
    return bce_from_logits(trace.logits, np.asarray(y, dtype=np.float64))


def _backward_note(params: ModelParams, trace: ForwardTrace, y: np.ndarray, grads) -> np.ndarray:
    """Gradients of one note's loss down to its sentence vectors."""
    cfg, P, c = params.config, params.tensors, trace._cache
    h, d, probs, H = trace.h, trace.d, trace.probs, c["H"]
    N = h.shape[0]

    # scoring layer, right to left through the novelty recurrence
    content = P["W_c"] + P["W_s"] @ d
    dh = np.zeros_like(h)
    dlog = np.empty(N)
    gs = np.zeros(h.shape[1])
    tanh_s = np.tanh(trace.novelty) if cfg.use_novelty else None
    for t in range(N - 1, -1, -1):
        p = probs[t]
        dp = gs @ h[t]
        dh[t] += gs * p
        dl = (p - y[t]) + dp * p * (1.0 - p)
        dlog[t] = dl
        dh[t] += dl * content
        if cfg.use_novelty:
            u = tanh_s[t]
            dh[t] -= dl * (P["W_r"] @ u)
            du = -dl * (P["W_r"].T @ h[t])
            gs = gs + du * (1.0 - u * u)
    hw = dlog @ h
    grads["W_c"] += hw
    grads["W_s"] += np.outer(hw, d)
    grads["b_1"][0] += dlog.sum()
    dd = P["W_s"].T @ hw
    if cfg.use_novelty:
        grads["W_r"] -= (h * dlog[:, None]).T @ tanh_s
    if cfg.use_position:
        grads["W_p"] += dlog @ P["position_table"][:N]
        grads["position_table"][:N] += np.outer(dlog, P["W_p"])

    # note vector
    dz = dd * (1.0 - d * d)
    grads["W_d"] += np.outer(dz, c["hbar"])
    grads["b_2"] += dz
    dh += (P["W_d"].T @ dz) / N

    # sentence-level Bi-GRU
    dxf, g = gru_backward(params.cells["sent_fwd"], c["cache_sf"], dh[:, None, :H])
    _accumulate(grads, "sent_fwd", g)
    dxb, g = gru_backward(params.cells["sent_bwd"], c["cache_sb"],
                          np.ascontiguousarray(dh[::-1, None, H:]))
    _accumulate(grads, "sent_bwd", g)
    return dxf[:, 0] + dxb[::-1, 0]


def _backward_words(params: ModelParams, cache, dsent: np.ndarray, grads) -> None:
    H = params.config.hidden_dim
    # only the final word states feed the sentence vectors
    dwf = np.zeros_like(cache["wf"])
    dwb = np.zeros_like(cache["wb"])
    dwf[-1] = dsent[:, :H]
    dwb[-1] = dsent[:, H:]
    dXf, g = gru_backward(params.cells["word_fwd"], cache["cache_f"], dwf)
    _accumulate(grads, "word_fwd", g)
    dXb, g = gru_backward(params.cells["word_bwd"], cache["cache_b"], dwb)
    _accumulate(grads, "word_bwd", g)
    if params.config.trainable_embeddings:
        for dX, ids in ((dXf, cache["ids_f"]), (dXb, cache["ids_b"])):
            known = ids >= 0
            np.add.at(grads["embedding"], ids[known], dX[known])


def batch_loss_and_gradients(params: ModelParams, notes: list[Note], ys) -> tuple[list[float], dict]:
    """Per-note losses and the gradient of their sum."""
    ys = [np.asarray(y, dtype=np.float64) for y in ys]
    for note, y in zip(notes, ys):
        if y.shape != (len(note),):
            raise DimensionError(f"labels have shape {y.shape}, note has {len(note)} sentences")
    traces, word_cache = _encode_batch(params, notes)
    grads = {name: np.zeros_like(params.tensors[name]) for name in params.trainable_names}
    losses, dsent = [], []
    for trace, y in zip(traces, ys):
        predict_probs(params, trace)
        losses.append(bce_from_logits(trace.logits, y))
        dsent.append(_backward_note(params, trace, y, grads))
    _backward_words(params, word_cache, np.concatenate(dsent), grads)
    return losses, grads


def loss_and_gradients(params: ModelParams, note: Note, y) -> tuple[float, dict[str, np.ndarray]]:
    losses, grads = batch_loss_and_gradients(params, [note], [y])
    return losses[0], grads


def _accumulate(grads, prefix, cell_grads):
    for name, g in cell_grads.items():
        grads[f"{prefix}.{name}"] += g
