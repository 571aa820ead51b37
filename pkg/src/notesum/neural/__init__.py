"""Hierarchical Bi-GRU extractive scorer with hand-derived gradients."""

from .checkpoint import load_checkpoint, save_checkpoint
from .gru import GruCellParams, gru_step
from .inference import infer_summary, select_by_probs, sentence_probs
from .model import (
    ForwardTrace, ModelConfig, ModelParams, encode_note, forward, init_params,
    loss, loss_and_gradients, predict_probs,
)
from .optim import AdamState, adam_step, clip_global_norm, train

__all__ = [
    "AdamState", "ForwardTrace", "GruCellParams", "ModelConfig", "ModelParams",
    "adam_step", "clip_global_norm", "encode_note", "forward", "gru_step",
    "infer_summary", "init_params", "load_checkpoint", "loss", "loss_and_gradients",
    "predict_probs", "save_checkpoint", "select_by_probs", "sentence_probs", "train",
]
