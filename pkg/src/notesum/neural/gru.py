"""GRU cell with masked batched sequences and exact reverse-mode gradients.

    z  = sigmoid(x W_z + h U_z + b_z)
    r  = sigmoid(x W_r + h U_r + b_r)
    h~ = tanh(x W_h + (r * h) U_h + b_h)
    h' = (1 - z) * h + z * h~

Where the mask is 0 the state is carried through unchanged, so sequences of
different lengths can share a left-aligned padded batch and the last row of the
output holds each sequence's final state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError

GATE_NAMES = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")


def sigmoid(x):
    # numerically safe for large |x|
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gate_shapes(input_dim: int, hidden_dim: int) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for g in "zrh":
        shapes[f"W_{g}"] = (input_dim, hidden_dim)
        shapes[f"U_{g}"] = (hidden_dim, hidden_dim)
        shapes[f"b_{g}"] = (hidden_dim,)
    return shapes


@dataclass
class GruCellParams:
    """Views onto the gate tensors of one cell (arrays are shared, not copied)."""

    input_dim: int
    hidden_dim: int
    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W_h: np.ndarray
    U_h: np.ndarray
    b_h: np.ndarray

    @classmethod
    def from_tensors(cls, tensors, prefix: str) -> "GruCellParams":
        arrays = {g: tensors[f"{prefix}.{g}"] for g in GATE_NAMES}
        input_dim, hidden_dim = arrays["W_z"].shape
        cell = cls(input_dim, hidden_dim, **arrays)
        for name, shape in gate_shapes(input_dim, hidden_dim).items():
            if getattr(cell, name).shape != shape:
                raise DimensionError(f"{prefix}.{name} has shape {getattr(cell, name).shape}, expected {shape}")
        return cell

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "GruCellParams":
        return cls(input_dim, hidden_dim,
                   **{k: np.zeros(s) for k, s in gate_shapes(input_dim, hidden_dim).items()})


def gru_step(cell: GruCellParams, x, h_prev):
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape[-1] != cell.input_dim or h_prev.shape[-1] != cell.hidden_dim:
        raise DimensionError(
            f"gru_step got x{x.shape}, h{h_prev.shape} for cell ({cell.input_dim}->{cell.hidden_dim})")
    z = sigmoid(x @ cell.W_z + h_prev @ cell.U_z + cell.b_z)
    r = sigmoid(x @ cell.W_r + h_prev @ cell.U_r + cell.b_r)
    hh = np.tanh(x @ cell.W_h + (r * h_prev) @ cell.U_h + cell.b_h)
    return (1.0 - z) * h_prev + z * hh


def gru_forward(cell: GruCellParams, X: np.ndarray, mask: np.ndarray | None = None):
    """Run over X of shape (T, B, input_dim). Returns states (T, B, H) and a cache."""
    T, B, _ = X.shape
    H = cell.hidden_dim
    if mask is None:
        mask = np.ones((T, B))
    # input projections for every step at once: columns are [z | r | h]
    W = np.concatenate([cell.W_z, cell.W_r, cell.W_h], axis=1)
    b = np.concatenate([cell.b_z, cell.b_r, cell.b_h])
    XW = (X.reshape(T * B, -1) @ W + b).reshape(T, B, 3 * H)
    U_zr = np.concatenate([cell.U_z, cell.U_r], axis=1)
    h = np.zeros((B, H))
    states = np.empty((T, B, H))
    prev = np.empty((T, B, H))
    Z, R, HH = np.empty((T, B, H)), np.empty((T, B, H)), np.empty((T, B, H))
    for t in range(T):
        prev[t] = h
        zr = sigmoid(XW[t, :, :2 * H] + h @ U_zr)
        z, r = zr[:, :H], zr[:, H:]
        hh = np.tanh(XW[t, :, 2 * H:] + (r * h) @ cell.U_h)
        m = mask[t][:, None]
        h = h + m * z * (hh - h)
        Z[t], R[t], HH[t] = z, r, hh
        states[t] = h
    return states, (X, mask, prev, Z, R, HH)


def gru_backward(cell: GruCellParams, cache, dstates: np.ndarray):
    """Backpropagate dL/dstates (T, B, H). Returns (dX, grads by gate name)."""
    X, mask, prev, Z, R, HH = cache
    T, B, H = prev.shape
    U_zr_T = np.concatenate([cell.U_z, cell.U_r], axis=1).T
    U_h_T = cell.U_h.T
    # pre-activation gradients for [z | r | h] at every step
    DA = np.empty((T, B, 3 * H))
    dh = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        hp, z, r, hh = prev[t], Z[t], R[t], HH[t]
        m = mask[t][:, None]
        dh_t = dstates[t] + dh
        dg = dh_t * m
        dah = dg * z * (1.0 - hh * hh)
        drh = dah @ U_h_T
        DA[t, :, :H] = dg * (hh - hp) * z * (1.0 - z)
        DA[t, :, H:2 * H] = drh * hp * r * (1.0 - r)
        DA[t, :, 2 * H:] = dah
        dh = dh_t - dg * z + drh * r + DA[t, :, :2 * H] @ U_zr_T
    flat_x = X.reshape(T * B, -1)
    flat_da = DA.reshape(T * B, 3 * H)
    flat_h = prev.reshape(T * B, H)
    gW = flat_x.T @ flat_da
    gU_zr = flat_h.T @ flat_da[:, :2 * H]
    gU_h = (R * prev).reshape(T * B, H).T @ flat_da[:, 2 * H:]
    gb = flat_da.sum(axis=0)
    grads = {
        "W_z": gW[:, :H], "W_r": gW[:, H:2 * H], "W_h": gW[:, 2 * H:],
        "U_z": gU_zr[:, :H], "U_r": gU_zr[:, H:], "U_h": gU_h,
        "b_z": gb[:H], "b_r": gb[H:2 * H], "b_h": gb[2 * H:],
    }
    W_T = np.concatenate([cell.W_z, cell.W_r, cell.W_h], axis=1).T
    dX = (flat_da @ W_T).reshape(X.shape)
    return dX, grads
