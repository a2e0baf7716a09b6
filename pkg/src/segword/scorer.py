"""Factored segment scoring.

``w[t, s, v] = A2[v] . relu(A1 @ pool(H[t:t+s]) + b1) + b2[v]``

Scoring runs one duration at a time: all starts for a fixed ``s`` are pooled
into a ``[T - s + 1, P]`` tile, embedded, and multiplied by ``A2`` straight
into the output buffer. Nothing of size ``T * S * V`` is allocated apart
from the lattice itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

POOLING_MODES = ("concat", "mean", "attention")

__all__ = [
    "POOLING_MODES",
    "AcousticParams",
    "ScorerParams",
    "init_scorer_params",
    "pool",
    "embed_segments",
    "score_lattice",
    "score_backprop",
    "embed_backprop",
]


@dataclass(frozen=True)
class AcousticParams:
    """The acoustic half of the scorer: ``relu(A1 @ pool(H_seg) + b1)``."""

    A1: np.ndarray
    b1: np.ndarray
    pooling: str = "concat"
    g: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        _check_acoustic(self)

    @property
    def feature_dim(self) -> int:
        P = self.A1.shape[1]
        return P // 2 if self.pooling == "concat" else P

    @property
    def embed_dim(self) -> int:
        return self.A1.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"A1": self.A1, "b1": self.b1}
        if self.g is not None:
            out["g"] = self.g
        return out

    def with_arrays(self, **arrays) -> "AcousticParams":
        return replace(self, **arrays)


def _check_acoustic(p) -> None:
    if p.pooling not in POOLING_MODES:
        raise ValueError(f"unknown pooling mode {p.pooling!r}")
    if np.ndim(p.A1) != 2:
        raise ValueError("A1 must be a matrix")
    D, P = np.shape(p.A1)
    if D < 1:
        raise ValueError("embedding dimension must be >= 1")
    if np.shape(p.b1) != (D,):
        raise ValueError(f"b1 shape {np.shape(p.b1)} != ({D},)")
    if p.pooling == "concat" and P % 2:
        raise ValueError("concat pooling needs an even input dimension for A1")
    if p.pooling == "attention":
        if p.g is None or np.shape(p.g) != (P,):
            raise ValueError("attention pooling needs g with one entry per feature")
    elif p.g is not None:
        raise ValueError("g is only used by attention pooling")


@dataclass(frozen=True)
class ScorerParams:
    A1: np.ndarray
    b1: np.ndarray
    A2: np.ndarray
    b2: np.ndarray
    pooling: str = "concat"
    g: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        _check_acoustic(self)
        D = np.shape(self.A1)[0]
        if np.ndim(self.A2) != 2 or np.shape(self.A2)[1] != D or np.shape(self.b2) != (np.shape(self.A2)[0],):
            raise ValueError(
                f"inconsistent scorer shapes A1={np.shape(self.A1)} "
                f"A2={np.shape(self.A2)} b2={np.shape(self.b2)}"
            )

    @property
    def acoustic(self) -> AcousticParams:
        return AcousticParams(self.A1, self.b1, self.pooling, self.g)

    @property
    def feature_dim(self) -> int:
        P = self.A1.shape[1]
        return P // 2 if self.pooling == "concat" else P

    @property
    def embed_dim(self) -> int:
        return self.A1.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.A2.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"A1": self.A1, "b1": self.b1, "A2": self.A2, "b2": self.b2}
        if self.g is not None:
            out["g"] = self.g
        return out

    def with_arrays(self, **arrays) -> "ScorerParams":
        return replace(self, **arrays)


def init_scorer_params(
    F: int,
    D: int,
    V: int,
    pooling: str = "concat",
    rng: Optional[np.random.Generator] = None,
    b2: Optional[np.ndarray] = None,
) -> ScorerParams:
    """Glorot-uniform ``A1``/``A2``, zero biases (or a log-unigram ``b2``)."""
    rng = np.random.default_rng(rng)
    P = 2 * F if pooling == "concat" else F

    def glorot(n_out, n_in):
        lim = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-lim, lim, size=(n_out, n_in))

    return ScorerParams(
        A1=glorot(D, P),
        b1=np.zeros(D),
        A2=glorot(V, D),
        b2=np.zeros(V) if b2 is None else np.asarray(b2, dtype=np.float64),
        pooling=pooling,
        g=np.zeros(F) if pooling == "attention" else None,
    )


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def pool(H: np.ndarray, t: int, s: int, mode: str, g: Optional[np.ndarray] = None) -> np.ndarray:
    """Pool the frames of segment ``(t, s)``, i.e. rows ``t .. t+s-1`` of ``H``."""
    H = np.asarray(H, dtype=np.float64)
    if s < 1 or t < 0 or t + s > H.shape[0]:
        raise ValueError(f"segment (t={t}, s={s}) outside [0, {H.shape[0]})")
    seg = H[t : t + s]
    if mode == "concat":
        return np.concatenate([seg[0], seg[-1]])
    if mode == "mean":
        return seg.mean(axis=0)
    if mode == "attention":
        if g is None:
            raise ValueError("attention pooling needs g")
        return _softmax_rows(seg @ g) @ seg
    raise ValueError(f"unknown pooling mode {mode!r}")


def _pool_tile(H: np.ndarray, s: int, mode: str, g, csum=None):
    """Pooled features for every start with duration ``s``: ``[T - s + 1, P]``."""
    n = H.shape[0] - s + 1
    if mode == "concat":
        return np.concatenate([H[:n], H[s - 1 : s - 1 + n]], axis=1), None
    if mode == "mean":
        return (csum[s : s + n] - csum[:n]) / s, None
    z = H @ g
    weights = _softmax_rows(z[np.arange(n)[:, None] + np.arange(s)])  # [n, s]
    pooled = weights[:, :1] * H[:n]
    for i in range(1, s):
        pooled += weights[:, i : i + 1] * H[i : i + n]
    return pooled, weights


def _cumsum(H: np.ndarray) -> np.ndarray:
    out = np.zeros((H.shape[0] + 1, H.shape[1]))
    np.cumsum(H, axis=0, out=out[1:])
    return out


def _check(H, params, S: int) -> np.ndarray:
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] < 1:
        raise ValueError(f"frame features must be [T >= 1, F], got {H.shape}")
    if H.shape[1] != params.feature_dim:
        raise ValueError(f"feature dim {H.shape[1]} does not match scorer ({params.feature_dim})")
    if S < 1:
        raise ValueError("maximum segment size must be >= 1")
    return H


def embed_segments(H: np.ndarray, params, S: int) -> np.ndarray:
    """Acoustic segment embeddings ``[T, S, D]``; overrunning cells are zero."""
    H = _check(H, params, S)
    T = H.shape[0]
    out = np.zeros((T, S, params.embed_dim))
    csum = _cumsum(H) if params.pooling == "mean" else None
    for s in range(1, min(S, T) + 1):
        pooled, _ = _pool_tile(H, s, params.pooling, params.g, csum)
        pre = pooled @ params.A1.T
        pre += params.b1
        out[: T - s + 1, s - 1] = np.maximum(pre, 0.0)
    return out


_BIAS_BUFSIZE = 256


def score_lattice(H: np.ndarray, params: ScorerParams, S: int) -> np.ndarray:
    """Segment scores ``W[t, s-1, v]`` with ``-inf`` where ``t + s > T``.

    Returned as a ``[T, S, V]`` view of an ``[S, T, V]`` buffer so each
    duration tile is written by a single contiguous matmul.
    """
    H = _check(H, params, S)
    T = H.shape[0]
    V = params.vocab_size
    buf = np.empty((S, T, V))
    csum = _cumsum(H) if params.pooling == "mean" else None
    A2t = params.A2.T
    # broadcasting b2 over a tile goes through numpy's iteration buffer,
    # which grows with the tile up to getbufsize(); keep it small and fixed
    old_bufsize = np.setbufsize(_BIAS_BUFSIZE)
    try:
        for s in range(1, S + 1):
            n = T - s + 1
            if n <= 0:
                buf[s - 1] = -np.inf
                continue
            pooled, _ = _pool_tile(H, s, params.pooling, params.g, csum)
            emb = pooled @ params.A1.T
            emb += params.b1
            np.maximum(emb, 0.0, out=emb)
            tile = buf[s - 1, :n]
            np.matmul(emb, A2t, out=tile)
            np.add(tile, params.b2, out=tile)
            buf[s - 1, n:] = -np.inf
    finally:
        np.setbufsize(old_bufsize)
    return buf.transpose(1, 0, 2)


def _backprop_tiles(H, params, durations, dE_tile):
    """Shared backward pass from per-duration embedding gradients.

    ``dE_tile(s, emb)`` returns ``dL/d emb`` for the ``[T - s + 1, D]`` tile
    of each duration ``s`` in ``durations``.
    """
    T, F = H.shape
    mode = params.pooling
    A1 = params.A1
    dA1 = np.zeros(A1.shape)
    db1 = np.zeros(A1.shape[0])
    dH = np.zeros((T, F))
    dz = np.zeros(T) if mode == "attention" else None
    dmean = np.zeros((T + 1, F)) if mode == "mean" else None
    csum = _cumsum(H) if mode == "mean" else None
    for s in durations:
        n = T - s + 1
        pooled, weights = _pool_tile(H, s, mode, params.g, csum)
        pre = pooled @ A1.T + params.b1
        dE = dE_tile(s, np.maximum(pre, 0.0))
        dpre = dE * (pre > 0)
        dA1 += dpre.T @ pooled
        db1 += dpre.sum(axis=0)
        dpool = dpre @ A1
        if mode == "concat":
            dH[:n] += dpool[:, :F]
            dH[s - 1 :] += dpool[:, F:]
        elif mode == "mean":
            dmean[:n] += dpool / s
            dmean[s : s + n] -= dpool / s
        else:
            dweights = np.empty((n, s))
            for i in range(s):
                dH[i : i + n] += weights[:, i, None] * dpool
                dweights[:, i] = np.einsum("nf,nf->n", dpool, H[i : i + n])
            dlogits = weights * (dweights - (weights * dweights).sum(axis=1, keepdims=True))
            for i in range(s):
                dz[i : i + n] += dlogits[:, i]
    grads = {"A1": dA1, "b1": db1}
    if mode == "mean":
        dH += np.cumsum(dmean, axis=0)[:T]
    elif mode == "attention":
        grads["g"] = H.T @ dz
        dH += np.outer(dz, params.g)
    return dH, grads


def embed_backprop(H: np.ndarray, params, S: int, dE: np.ndarray):
    """Backward pass of :func:`embed_segments` given ``dL/dE`` of shape ``[T, S, D]``."""
    H = _check(H, params, S)
    T = H.shape[0]
    dE = np.asarray(dE, dtype=np.float64)
    durations = [s for s in range(1, min(S, T) + 1) if dE[: T - s + 1, s - 1].any()]
    return _backprop_tiles(H, params, durations, lambda s, emb: dE[: T - s + 1, s - 1])


def score_backprop(H: np.ndarray, params: ScorerParams, S: int, dW: np.ndarray):
    """Chain rule from ``dL/dW`` back to the frames and scorer parameters.

    Returns ``(dH, grads)`` where ``grads`` has the same keys as
    :meth:`ScorerParams.arrays`. Entries of ``dW`` in overrunning cells are
    ignored.
    """
    H = _check(H, params, S)
    T = H.shape[0]
    dW = np.asarray(dW, dtype=np.float64)
    if dW.shape != (T, S, params.vocab_size):
        raise ValueError(f"gradient lattice shape {dW.shape} != {(T, S, params.vocab_size)}")
    dA2 = np.zeros(params.A2.shape)
    db2 = np.zeros(params.A2.shape[0])

    def tile(s, emb):
        dWs = dW[: T - s + 1, s - 1]
        dA2[...] += dWs.T @ emb
        db2[...] += dWs.sum(axis=0)
        return dWs @ params.A2

    durations = [s for s in range(1, min(S, T) + 1) if dW[: T - s + 1, s - 1].any()]
    dH, grads = _backprop_tiles(H, params, durations, tile)
    grads.update(A2=dA2, b2=db2)
    return dH, grads
