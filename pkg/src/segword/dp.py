"""Log-space forward/backward recursions, marginal log loss and Viterbi.

Every routine takes a score lattice ``W[t, s-1, v]`` (any float dtype) and
works on a float64 copy in which overrunning cells (``t + s > T``) hold
``-inf``. Per-step reductions are max-shifted log-sum-exps over whole
slices, so the sequential loops only ever run over ``t`` (denominator) or
over label positions ``y`` (numerator).
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .lattice import Segment, Segmentation, mask_invalid

__all__ = [
    "InfeasibleLabelsWarning",
    "DPTables",
    "LossResult",
    "PosteriorReport",
    "logsumexp",
    "forward_denominator",
    "backward_denominator",
    "forward_numerator",
    "backward_numerator",
    "dp_tables",
    "marginal_log_loss",
    "loss_gradient",
    "loss_and_gradient",
    "segment_posteriors",
    "numerator_posteriors",
    "viterbi",
    "posterior_check",
    "format_tables",
]

NEG_INF = -np.inf


class InfeasibleLabelsWarning(RuntimeWarning):
    """No segmentation of the input carries the requested label sequence."""


def logsumexp(a: np.ndarray, axis=None) -> np.ndarray:
    """Max-shifted log-sum-exp that returns ``-inf`` for all ``-inf`` slices."""
    a = np.asarray(a, dtype=np.float64)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return out.reshape(())[()]
    return np.squeeze(out, axis=axis)


class _Masked(np.ndarray):
    """Marks a float64 lattice whose overrunning cells already hold -inf."""


def _lattice(W) -> np.ndarray:
    if isinstance(W, _Masked):
        return W
    return mask_invalid(W).view(_Masked)


def _end_indexed(M: np.ndarray) -> np.ndarray:
    """``out[t, s-1] = M[t-s, s-1]``: scores of segments *ending* at ``t``."""
    T, S = M.shape[:2]
    out = np.full((T + 1,) + M.shape[1:], NEG_INF)
    for s in range(1, min(S, T) + 1):
        out[s:, s - 1] = M[: T + 1 - s, s - 1]
    return out


def _lagged(a: np.ndarray, S: int) -> np.ndarray:
    """``out[t, s-1] = a[t-s]`` for a length-(T+1) vector, ``-inf`` before 0."""
    n = a.shape[0]
    out = np.full((n, S), NEG_INF)
    for s in range(1, min(S, n - 1) + 1):
        out[s:, s - 1] = a[: n - s]
    return out


def _led(b: np.ndarray, S: int) -> np.ndarray:
    """``out[t, s-1] = b[t+s]`` for ``t < T``, ``-inf`` past the end."""
    n = b.shape[0]
    out = np.full((n - 1, S), NEG_INF)
    for s in range(1, min(S, n - 1) + 1):
        out[: n - s, s - 1] = b[s:]
    return out


def forward_denominator(W) -> np.ndarray:
    """``log alpha_d[t]``: log total weight of all segmentations of ``[0, t)``."""
    Wm = _lattice(W)
    T, S, _ = Wm.shape
    ending = _end_indexed(logsumexp(Wm, axis=2))
    alpha = np.full(T + 1, NEG_INF)
    alpha[0] = 0.0
    for t in range(1, T + 1):
        k = min(S, t)
        alpha[t] = logsumexp(ending[t, :k] + alpha[t - 1 :: -1][:k])
    return alpha


def backward_denominator(W) -> np.ndarray:
    """``log beta_d[t]``: log total weight of all segmentations of ``[t, T)``."""
    Wm = _lattice(W)
    T, S, _ = Wm.shape
    starting = logsumexp(Wm, axis=2)
    beta = np.full(T + 1, NEG_INF)
    beta[T] = 0.0
    for t in range(T - 1, -1, -1):
        k = min(S, T - t)
        beta[t] = logsumexp(starting[t, :k] + beta[t + 1 : t + 1 + k])
    return beta


def _check_labels(labels: Sequence[int], V: int) -> np.ndarray:
    L = np.asarray(labels, dtype=np.int64).reshape(-1)
    if L.size and (L.min() < 0 or L.max() >= V):
        raise ValueError(f"label outside vocabulary of size {V}")
    return L


def forward_numerator(W, labels: Sequence[int]) -> np.ndarray:
    """``log alpha_n[t, y]``: paths over ``[0, t)`` labelled ``L[:y]``.

    Each column ``y`` is one vectorised reduction over all ``(t, s)`` given
    column ``y - 1``. An infeasible label sequence leaves
    ``alpha_n[T, K] = -inf`` and raises :class:`InfeasibleLabelsWarning`.
    """
    Wm = _lattice(W)
    T, S, V = Wm.shape
    L = _check_labels(labels, V)
    K = L.size
    alpha = np.full((T + 1, K + 1), NEG_INF)
    alpha[0, 0] = 0.0
    for y in range(1, K + 1):
        ending = _end_indexed(Wm[:, :, L[y - 1]])
        alpha[:, y] = logsumexp(ending + _lagged(alpha[:, y - 1], S), axis=1)
    if np.isneginf(alpha[T, K]):
        warnings.warn(
            f"label sequence of length {K} cannot be realised in T={T} steps with S={S}",
            InfeasibleLabelsWarning,
            stacklevel=2,
        )
    return alpha


def backward_numerator(W, labels: Sequence[int]) -> np.ndarray:
    """``log beta_n[t, y]``: paths over ``[t, T)`` labelled ``L[y:]``.

    ``beta_n[0, 0]`` equals ``alpha_n[T, K]``.
    """
    Wm = _lattice(W)
    T, S, V = Wm.shape
    L = _check_labels(labels, V)
    K = L.size
    beta = np.full((T + 1, K + 1), NEG_INF)
    beta[T, K] = 0.0
    for y in range(K - 1, -1, -1):
        beta[:T, y] = logsumexp(Wm[:, :, L[y]] + _led(beta[:, y + 1], S), axis=1)
    return beta


@dataclass(frozen=True)
class DPTables:
    log_alpha_d: np.ndarray
    log_alpha_n: np.ndarray
    log_beta_d: np.ndarray
    log_beta_n: np.ndarray

    @property
    def log_partition(self) -> float:
        return float(self.log_alpha_d[-1])

    @property
    def log_numerator(self) -> float:
        return float(self.log_alpha_n[-1, -1])


def dp_tables(W, labels: Sequence[int]) -> DPTables:
    Wm = _lattice(W)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InfeasibleLabelsWarning)
        alpha_n = forward_numerator(Wm, labels)
    return DPTables(
        forward_denominator(Wm),
        alpha_n,
        backward_denominator(Wm),
        backward_numerator(Wm, labels),
    )


def marginal_log_loss(W, labels: Sequence[int]) -> float:
    """``-log sum_{B(pi)=L} u(pi) + log sum_pi u(pi)``; ``+inf`` if infeasible."""
    Wm = _lattice(W)
    log_z = forward_denominator(Wm)[-1]
    log_num = forward_numerator(Wm, labels)[-1, -1]
    if np.isnan(log_num) or np.isnan(log_z):
        return np.nan
    if not np.isfinite(log_num):
        return np.inf
    return float(log_z - log_num)


def segment_posteriors(W, log_alpha_d=None, log_beta_d=None) -> np.ndarray:
    """Probability that segment ``(t, s, v)`` lies on a path, ``[T, S, V]``."""
    Wm = _lattice(W)
    S = Wm.shape[1]
    a = forward_denominator(Wm) if log_alpha_d is None else log_alpha_d
    b = backward_denominator(Wm) if log_beta_d is None else log_beta_d
    log_post = a[:-1, None, None] + Wm + _led(b, S)[:, :, None] - a[-1]
    return np.exp(log_post).view(np.ndarray)


def numerator_posteriors(W, labels: Sequence[int], log_alpha_n=None, log_beta_n=None) -> np.ndarray:
    """Posterior of ``(t, s, v)`` among paths labelled ``L``, summed over occurrences of ``v``."""
    Wm = _lattice(W)
    T, S, V = Wm.shape
    L = _check_labels(labels, V)
    a = forward_numerator(Wm, L) if log_alpha_n is None else log_alpha_n
    b = backward_numerator(Wm, L) if log_beta_n is None else log_beta_n
    post = np.zeros((T, S, V))
    log_num = a[T, L.size]
    if not np.isfinite(log_num):
        return post
    Wp = Wm.view(np.ndarray)
    for k in range(1, L.size + 1):
        v = L[k - 1]
        post[:, :, v] += np.exp(a[:T, k - 1, None] + Wp[:, :, v] + _led(b[:, k], S) - log_num)
    return post


@dataclass(frozen=True)
class LossResult:
    loss: float
    grad: np.ndarray
    feasible: bool
    tables: DPTables


def loss_and_gradient(W, labels: Sequence[int]) -> LossResult:
    """Loss and its gradient w.r.t. the log-domain scores in one pass.

    The gradient is the denominator segment posterior minus the numerator
    segment posterior. The numerator term pairs ``alpha_n[t, k-1]`` (first
    ``k-1`` labels consumed) with ``beta_n[t+s, k]``. Infeasible labels give
    ``loss=inf``, a zero gradient and ``feasible=False``; NaN scores give
    ``loss=nan`` and ``feasible=False``.
    """
    Wm = _lattice(W)
    tables = dp_tables(Wm, labels)
    if np.isnan(tables.log_numerator) or np.isnan(tables.log_partition):
        return LossResult(np.nan, np.zeros(Wm.shape), False, tables)
    feasible = bool(np.isfinite(tables.log_numerator))
    if not feasible:
        warnings.warn("infeasible label sequence; loss is +inf", InfeasibleLabelsWarning, stacklevel=2)
        return LossResult(np.inf, np.zeros(Wm.shape), False, tables)
    grad = segment_posteriors(Wm, tables.log_alpha_d, tables.log_beta_d)
    grad -= numerator_posteriors(Wm, labels, tables.log_alpha_n, tables.log_beta_n)
    loss = tables.log_partition - tables.log_numerator
    return LossResult(float(loss), grad, True, tables)


def loss_gradient(W, labels: Sequence[int]) -> np.ndarray:
    return loss_and_gradient(W, labels).grad


def viterbi(W) -> tuple[Segmentation, float]:
    """Highest-scoring segmentation and its score.

    Ties go to the larger duration, then the smaller label index.
    """
    Wm = _lattice(W)
    T, S, V = Wm.shape
    if T == 0:
        return Segmentation((), 0), 0.0
    ending = _end_indexed(Wm)
    best = np.full(T + 1, NEG_INF)
    best[0] = 0.0
    back = np.zeros((T + 1, 2), dtype=np.int64)
    for t in range(1, T + 1):
        k = min(S, t)
        cand = ending[t, :k] + best[t - 1 :: -1][:k, None]
        # rows reversed so argmax's first hit is the longest duration
        flat = np.argmax(cand[::-1].ravel())
        s = k - flat // V
        v = flat % V
        best[t] = cand[s - 1, v]
        back[t] = (s, v)
    segs = []
    t = T
    while t > 0:
        s, v = back[t]
        segs.append(Segment(t - s, s, v))
        t -= s
    return Segmentation(segs[::-1], T), float(best[T])


@dataclass(frozen=True)
class PosteriorReport:
    max_deviation_denominator: float
    max_deviation_numerator: float
    per_t_denominator: np.ndarray

    @property
    def max_deviation(self) -> float:
        return max(self.max_deviation_denominator, self.max_deviation_numerator)


def posterior_check(W, labels: Optional[Sequence[int]] = None) -> PosteriorReport:
    """Recover the partition function at every timestep from alpha/beta products.

    For each boundary ``b`` every path either has a segment boundary at ``b``
    or exactly one segment straddling it; the log-sum over both kinds of
    decomposition must equal ``log alpha_d[T]`` (and likewise for the
    numerator when ``labels`` is given).
    """
    Wm = _lattice(W)
    T, S, V = Wm.shape
    a = forward_denominator(Wm)
    b = backward_denominator(Wm)
    log_z = a[T]
    through = a[:T, None] + logsumexp(Wm, axis=2) + _led(b, S)
    t0 = np.arange(T)[:, None]
    end = t0 + np.arange(1, S + 1)[None, :]
    dev_d = np.zeros(T + 1)
    for pos in range(T + 1):
        straddle = (t0 < pos) & (end > pos)
        total = logsumexp(np.concatenate([[a[pos] + b[pos]], through[straddle]]))
        dev_d[pos] = abs(total - log_z)
    dev_n = 0.0
    if labels is not None:
        L = _check_labels(labels, V)
        K = L.size
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InfeasibleLabelsWarning)
            an = forward_numerator(Wm, L)
        bn = backward_numerator(Wm, L)
        log_num = an[T, K]
        if np.isfinite(log_num):
            seg = np.stack(
                [an[:T, k - 1, None] + Wm[:, :, L[k - 1]] + _led(bn[:, k], S) for k in range(1, K + 1)]
            )
            for pos in range(T + 1):
                straddle = (t0 < pos) & (end > pos)
                total = logsumexp(np.concatenate([an[pos] + bn[pos], seg[:, straddle].ravel()]))
                dev_n = max(dev_n, abs(total - log_num))
    return PosteriorReport(float(dev_d.max()), float(dev_n), dev_d)


def format_tables(tables: DPTables) -> str:
    """Plain-text dump of the four tables, one row per timestep."""
    buf = io.StringIO()

    def row(values) -> str:
        return " ".join("-inf" if v == NEG_INF else f"{v:.12g}" for v in np.atleast_1d(values))

    for name in ("log_alpha_d", "log_beta_d", "log_alpha_n", "log_beta_n"):
        arr = getattr(tables, name)
        buf.write(f"# {name} {' '.join(map(str, arr.shape))}\n")
        for t in range(arr.shape[0]):
            buf.write(f"{t} {row(arr[t])}\n")
    return buf.getvalue()
