"""Independent reference implementations used by the tests.

Nothing here calls the DP or scorer code under test: path sums come from
explicit enumeration, gradients from central differences and segment
scores from a per-segment loop.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def compositions(T: int, S: int) -> tuple[tuple[int, ...], ...]:
    """Ordered ways to write ``T`` as a sum of parts in ``1..S``."""
    if T == 0:
        return ((),)
    out = []
    for s in range(1, min(S, T) + 1):
        out.extend((s,) + rest for rest in compositions(T - s, S))
    return tuple(out)


def all_paths(T: int, S: int, V: int):
    """Every segmentation as a list of ``(t, s, v)`` tuples."""
    paths = []
    for comp in compositions(T, S):
        starts = np.concatenate([[0], np.cumsum(comp)[:-1]]).astype(int)
        for labels in itertools.product(range(V), repeat=len(comp)):
            paths.append(tuple(zip(starts.tolist(), comp, labels)))
    return paths


def index_matrix(paths, T: int, S: int, V: int) -> np.ndarray:
    """``[n_paths, max_len]`` flat indices into ``W.ravel()`` padded with a sentinel index."""
    width = max((len(p) for p in paths), default=0)
    pad = T * S * V
    M = np.full((len(paths), max(width, 1)), pad, dtype=np.int64)
    for i, p in enumerate(paths):
        for k, (t, s, v) in enumerate(p):
            M[i, k] = (t * S + (s - 1)) * V + v
    return M


def path_scores(W: np.ndarray, paths) -> np.ndarray:
    T, S, V = W.shape
    flat = np.append(np.asarray(W, dtype=np.float64).ravel(), 0.0)
    return flat[index_matrix(paths, T, S, V)].sum(axis=1)


def lse(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return -np.inf
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def brute_log_partition(W) -> float:
    T, S, V = W.shape
    return lse(path_scores(W, all_paths(T, S, V)))


def brute_log_numerator(W, labels) -> float:
    T, S, V = W.shape
    paths = [p for p in all_paths(T, S, V) if tuple(v for _, _, v in p) == tuple(labels)]
    return lse(path_scores(W, paths))


def brute_loss(W, labels) -> float:
    return brute_log_partition(W) - brute_log_numerator(W, labels)


def brute_viterbi(W):
    """Best path; ties resolved from the end backwards by larger ``s``, then smaller ``v``."""
    T, S, V = W.shape
    paths = all_paths(T, S, V)
    scores = path_scores(W, paths)
    best = scores.max()
    tied = [p for p, sc in zip(paths, scores) if sc == best]
    tied.sort(key=lambda p: [(-s, v) for _, s, v in reversed(p)])
    return tied[0], float(best)


def brute_posteriors(W) -> np.ndarray:
    """``P[(t, s, v) on the path]`` by enumeration, ``[T, S, V]``."""
    T, S, V = W.shape
    paths = all_paths(T, S, V)
    sc = path_scores(W, paths)
    p = np.exp(sc - lse(sc))
    out = np.zeros(T * S * V + 1)
    np.add.at(out, index_matrix(paths, T, S, V), p[:, None])
    return out[:-1].reshape(T, S, V)


def central_diff(f, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + eps
        up = f(x)
        x[i] = old - eps
        down = f(x)
        x[i] = old
        g[i] = (up - down) / (2 * eps)
    return g


def rel_err(a, b) -> float:
    """``max|a - b| / max(max|a|, max|b|)``: error relative to the gradient's scale."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0))
    if scale == 0:
        return 0.0
    return float(np.abs(a - b).max() / scale)


def naive_pool(H, t, s, mode, g=None):
    seg = H[t : t + s]
    if mode == "concat":
        return np.concatenate([seg[0], seg[-1]])
    if mode == "mean":
        return seg.sum(axis=0) / s
    logits = seg @ g
    w = np.exp(logits - logits.max())
    w /= w.sum()
    return (w[:, None] * seg).sum(axis=0)


def naive_scores(H, A1, b1, A2, b2, S, mode, g=None) -> np.ndarray:
    """One segment at a time: ``A2 relu(A1 pool + b1) + b2``; ``-inf`` where ``t + s > T``."""
    T = H.shape[0]
    V = A2.shape[0]
    W = np.full((T, S, V), -np.inf)
    for t in range(T):
        for s in range(1, S + 1):
            if t + s > T:
                continue
            f = np.maximum(A1 @ naive_pool(H, t, s, mode, g) + b1, 0.0)
            for v in range(V):
                W[t, s - 1, v] = A2[v] @ f + b2[v]
    return W


def random_instance(rng, T_max=8, S_max=4, V_max=4, scale=1.0):
    """Random lattice plus a feasible label sequence."""
    T = int(rng.integers(1, T_max + 1))
    S = int(rng.integers(1, S_max + 1))
    V = int(rng.integers(1, V_max + 1))
    W = scale * rng.standard_normal((T, S, V))
    K_min = -(-T // S)
    K = int(rng.integers(K_min, T + 1))
    labels = rng.integers(0, V, size=K).tolist()
    return W, labels
