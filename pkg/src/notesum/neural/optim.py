from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyTrainingSetError, TrainingDivergenceError
from .model import ModelParams, batch_loss_and_gradients

log = logging.getLogger(__name__)

CLIP_NORM = 5.0


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState,
              lr: float | None = None) -> dict[str, np.ndarray]:
    """Bias-corrected Adam, applied in place to ``params`` for every key in ``grads``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergenceError(name)
    lr = state.lr if lr is None else lr
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name in sorted(grads):
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float = CLIP_NORM) -> float:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def train(params: ModelParams, training_set, epochs: int, batch_size: int = 16,
          seed: int = 0, lr: float = 1e-3, clip: float | None = CLIP_NORM):
    """Mini-batch training; returns (params, mean per-note loss for each epoch).

    Per-note losses are sums over sentences; a batch gradient is the mean over
    its notes. ``params`` is updated in place.
    """
    examples = list(training_set)
    if not examples:
        raise EmptyTrainingSetError("cannot train on an empty training set")
    rng = np.random.default_rng(seed)
    state = AdamState(lr=lr)
    names = params.trainable_names
    curve = []
    for epoch in range(epochs):
        order = rng.permutation(len(examples))
        total = 0.0
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            losses, acc = batch_loss_and_gradients(
                params, [examples[i].note for i in batch], [examples[i].y for i in batch])
            total += sum(losses)
            for n in names:
                acc[n] /= len(batch)
                if not np.all(np.isfinite(acc[n])):
                    raise TrainingDivergenceError(n)
            if clip is not None:
                clip_global_norm(acc, clip)
            adam_step(params.tensors, acc, state)
        curve.append(total / len(examples))
        log.info("epoch %d loss %.6f", epoch + 1, curve[-1])
    return params, curve
