"""Small frame encoder: spliced context window -> affine -> tanh -> dropout -> average pooling."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = ["EncoderParams", "init_encoder", "encode", "encode_backward", "encode_padded", "encode_padded_backward", "output_length"]


@dataclass(frozen=True)
class EncoderParams:
    W: np.ndarray  # [F, (2 * context + 1) * F_in]
    b: np.ndarray  # [F]
    context: int = 1
    stride: int = 1
    dropout: float = 0.0

    def __post_init__(self):
        F, width = np.shape(self.W)
        if np.shape(self.b) != (F,):
            raise ValueError(f"encoder bias shape {np.shape(self.b)} != ({F},)")
        if width % (2 * self.context + 1):
            raise ValueError("encoder weight width is not a multiple of the context window")
        if self.stride < 1 or not 0.0 <= self.dropout < 1.0:
            raise ValueError("stride must be >= 1 and dropout in [0, 1)")

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] // (2 * self.context + 1)

    @property
    def output_dim(self) -> int:
        return self.W.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}

    def with_arrays(self, **arrays) -> "EncoderParams":
        return replace(self, **arrays)


def init_encoder(
    F_in: int, F: int, context: int = 1, stride: int = 1, dropout: float = 0.0, rng=None
) -> EncoderParams:
    rng = np.random.default_rng(rng)
    width = (2 * context + 1) * F_in
    lim = np.sqrt(6.0 / (width + F))
    return EncoderParams(rng.uniform(-lim, lim, size=(F, width)), np.zeros(F), context, stride, dropout)


def output_length(T_in: int, stride: int) -> int:
    return -(-T_in // stride)


def _splice(X: np.ndarray, c: int) -> np.ndarray:
    T, F0 = X.shape
    padded = np.zeros((T + 2 * c, F0))
    padded[c : c + T] = X
    return np.concatenate([padded[k : k + T] for k in range(2 * c + 1)], axis=1)


def encode(X: np.ndarray, enc: EncoderParams, train: bool = False, rng: Optional[np.random.Generator] = None):
    """Encode ``[T_in, F_in]`` frames to ``[ceil(T_in / stride), F]``.

    Returns ``(H, cache)``; ``cache`` feeds :func:`encode_backward`.
    Dropout is active only when ``train`` is true.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != enc.input_dim:
        raise ValueError(f"encoder expects [T, {enc.input_dim}] input, got {X.shape}")
    spliced = _splice(X, enc.context)
    act = np.tanh(spliced @ enc.W.T + enc.b)
    mask = None
    if train and enc.dropout > 0:
        rng = np.random.default_rng(rng)
        mask = (rng.random(act.shape) >= enc.dropout) / (1.0 - enc.dropout)
    H = _avg_pool(act if mask is None else act * mask, enc.stride)
    return H, (spliced, act, mask, enc)


def _avg_pool(Z: np.ndarray, r: int) -> np.ndarray:
    if r == 1:
        return Z
    T, F = Z.shape
    n = output_length(T, r)
    padded = np.zeros((n * r, F))
    padded[:T] = Z
    counts = np.minimum(r, T - np.arange(n) * r)[:, None]
    return padded.reshape(n, r, F).sum(axis=1) / counts


def encode_backward(cache, dH: np.ndarray):
    """Gradients ``(dX, {"W": dW, "b": db})`` given ``dL/dH``."""
    spliced, act, mask, enc = cache
    T, F = act.shape
    r = enc.stride
    if r == 1:
        dZ = np.array(dH, dtype=np.float64)
    else:
        n = output_length(T, r)
        counts = np.minimum(r, T - np.arange(n) * r)[:, None]
        dZ = np.repeat(dH / counts, r, axis=0)[:T]
    if mask is not None:
        dZ = dZ * mask
    dpre = dZ * (1.0 - act**2)
    dW = dpre.T @ spliced
    db = dpre.sum(axis=0)
    dsp = dpre @ enc.W
    c = enc.context
    F0 = enc.input_dim
    dX = np.zeros((T + 2 * c, F0))
    for k in range(2 * c + 1):
        dX[k : k + T] += dsp[:, k * F0 : (k + 1) * F0]
    return dX[c : c + T], {"W": dW, "b": db}


def encode_padded(
    X: np.ndarray, lengths: np.ndarray, enc: EncoderParams, train: bool = False, rng=None
):
    """Batched :func:`encode` over zero-padded segments ``[N, L, F_in]``.

    Each segment is encoded as if on its own (context splicing sees zeros
    past its edges). Returns ``(H, out_lengths, cache)``; rows of ``H`` past
    ``out_lengths`` are zero.
    """
    X = np.asarray(X, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.int64)
    N, L, F0 = X.shape
    if F0 != enc.input_dim:
        raise ValueError(f"encoder expects {enc.input_dim} input features, got {F0}")
    valid = np.arange(L)[None, :] < lengths[:, None]
    c = enc.context
    padded = np.zeros((N, L + 2 * c, F0))
    padded[:, c : c + L] = X * valid[:, :, None]
    spliced = np.concatenate([padded[:, k : k + L] for k in range(2 * c + 1)], axis=2)
    act = np.tanh(spliced @ enc.W.T + enc.b)
    keep = valid[:, :, None].astype(np.float64)
    if train and enc.dropout > 0:
        rng = np.random.default_rng(rng)
        keep = keep * (rng.random(act.shape) >= enc.dropout) / (1.0 - enc.dropout)
    r = enc.stride
    out_lengths = -(-lengths // r)
    if r == 1:
        H = act * keep
        counts = None
    else:
        n = output_length(L, r)
        Z = np.zeros((N, n * r, act.shape[2]))
        Z[:, :L] = act * keep
        counts = np.clip(lengths[:, None] - np.arange(n)[None, :] * r, 0, r).astype(np.float64)
        H = Z.reshape(N, n, r, -1).sum(axis=2) / np.maximum(counts, 1)[:, :, None]
    return H, out_lengths, (spliced, act, keep, counts, enc, L)


def encode_padded_backward(cache, dH: np.ndarray) -> dict[str, np.ndarray]:
    spliced, act, keep, counts, enc, L = cache
    r = enc.stride
    if r == 1:
        dZ = dH
    else:
        dZ = np.repeat(dH / np.maximum(counts, 1)[:, :, None], r, axis=1)[:, :L]
    dpre = dZ * keep * (1.0 - act**2)
    flat = dpre.reshape(-1, dpre.shape[2])
    return {"W": flat.T @ spliced.reshape(-1, spliced.shape[2]), "b": flat.sum(axis=0)}
