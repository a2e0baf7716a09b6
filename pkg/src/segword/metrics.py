"""Word error rate with an explicit alignment, and substitution rates by training frequency."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

__all__ = ["EditOp", "WerResult", "align", "wer", "corpus_wer", "FrequencyHistogram", "per_frequency_substitutions"]

DEFAULT_FREQUENCY_EDGES = (0, 1, 3, 10, 30, 100)


class EditOp(NamedTuple):
    kind: str  # "match" | "sub" | "ins" | "del"
    ref: Optional[Hashable]
    hyp: Optional[Hashable]


class WerResult(NamedTuple):
    rate: float
    substitutions: int
    insertions: int
    deletions: int


def align(hyp: Sequence[Hashable], ref: Sequence[Hashable]) -> list[EditOp]:
    """Minimum-edit alignment of ``hyp`` against ``ref``.

    On equal cost the backtrace prefers match/substitution, then deletion,
    then insertion.
    """
    n, m = len(ref), len(hyp)
    cost = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[:, 0] = np.arange(n + 1)
    cost[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diag = cost[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            cost[i, j] = min(diag, cost[i - 1, j] + 1, cost[i, j - 1] + 1)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i, j] == cost[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            kind = "match" if ref[i - 1] == hyp[j - 1] else "sub"
            ops.append(EditOp(kind, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and cost[i, j] == cost[i - 1, j] + 1:
            ops.append(EditOp("del", ref[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp("ins", None, hyp[j - 1]))
            j -= 1
    return ops[::-1]


def _counts(ops: Sequence[EditOp]) -> tuple[int, int, int]:
    kinds = [op.kind for op in ops]
    return kinds.count("sub"), kinds.count("ins"), kinds.count("del")


def wer(hyp: Sequence[Hashable], ref: Sequence[Hashable]) -> WerResult:
    """``(rate, substitutions, insertions, deletions)`` with ``rate = (S+I+D)/len(ref)``."""
    if len(ref) == 0:
        raise ValueError("WER is undefined for an empty reference")
    sub, ins, dele = _counts(align(hyp, ref))
    return WerResult((sub + ins + dele) / len(ref), sub, ins, dele)


def corpus_wer(pairs: Sequence[tuple[Sequence[Hashable], Sequence[Hashable]]]) -> WerResult:
    """Pooled WER over ``(hyp, ref)`` pairs."""
    sub = ins = dele = words = 0
    for hyp, ref in pairs:
        s, i, d = _counts(align(hyp, ref))
        sub, ins, dele, words = sub + s, ins + i, dele + d, words + len(ref)
    if words == 0:
        raise ValueError("WER is undefined for an empty reference")
    return WerResult((sub + ins + dele) / words, sub, ins, dele)


@dataclass(frozen=True)
class FrequencyHistogram:
    edges: tuple[int, ...]
    references: np.ndarray
    substitutions: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.references > 0, self.substitutions / np.maximum(self.references, 1), 0.0)

    def labels(self) -> list[str]:
        out = []
        for lo, hi in zip(self.edges, self.edges[1:] + (None,)):
            if hi is None:
                out.append(f">={lo}")
            elif hi - lo == 1:
                out.append(f"{lo}")
            else:
                out.append(f"{lo}-{hi - 1}")
        return out

    def bucket_of(self, count: int) -> int:
        return int(np.searchsorted(self.edges, count, side="right") - 1)


def per_frequency_substitutions(
    alignments: Sequence[Sequence[EditOp]],
    train_counts: Mapping[Hashable, int],
    edges: Sequence[int] = DEFAULT_FREQUENCY_EDGES,
) -> FrequencyHistogram:
    """Substitution rate of reference words bucketed by their training-set count.

    Bucket ``i`` holds words with ``edges[i] <= count < edges[i+1]``; the last
    bucket is open-ended. Rate = substituted reference tokens / reference
    tokens in the bucket.
    """
    edges = tuple(int(e) for e in edges)
    refs = np.zeros(len(edges), dtype=np.int64)
    subs = np.zeros(len(edges), dtype=np.int64)
    hist = FrequencyHistogram(edges, refs, subs)
    for ops in alignments:
        for op in ops:
            if op.ref is None:
                continue
            b = hist.bucket_of(train_counts.get(op.ref, 0))
            refs[b] += 1
            subs[b] += op.kind == "sub"
    return hist
