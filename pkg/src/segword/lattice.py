"""Segmentations, vocabularies and the brute-force path enumerator.

A segment is a ``(t, s, label)`` triple: it starts at timestep ``t``, lasts
``s >= 1`` timesteps and covers frames ``t .. t+s-1`` (0-based rows of the
frame matrix). Score lattices are indexed ``W[t, s - 1, v]``; the public
API always speaks in durations ``s >= 1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "Segment",
    "Segmentation",
    "SegmentationError",
    "Vocabulary",
    "Alphabet",
    "label_map",
    "validate",
    "enumerate_paths",
    "count_paths",
    "format_segmentation",
    "parse_segmentation",
    "invalid_mask",
    "mask_invalid",
]

ENUMERATION_LIMITS = {"T": 12, "S": 6, "V": 6}


class SegmentationError(ValueError):
    """Raised when a segmentation breaks the tiling constraints."""


class Segment(NamedTuple):
    t: int
    s: int
    label: int


@dataclass(frozen=True)
class Segmentation:
    """A path through the lattice: consecutive segments tiling ``[0, T)``."""

    segments: tuple[Segment, ...]
    T: int

    def __init__(self, segments: Sequence[Sequence[int]], T: int):
        object.__setattr__(self, "segments", tuple(Segment(*map(int, seg)) for seg in segments))
        object.__setattr__(self, "T", int(T))

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def score(self, W: np.ndarray) -> float:
        """Sum of log-domain segment scores along this path."""
        return float(sum(W[t, s - 1, v] for t, s, v in self.segments))

    def __str__(self) -> str:
        return format_segmentation(self)


def validate(pi: Segmentation, T: Optional[int] = None, vocab_size: Optional[int] = None) -> Optional[str]:
    """Check the tiling constraints.

    Returns ``None`` when ``pi`` is a valid segmentation of ``T`` timesteps,
    otherwise a message naming the first violated constraint.
    """
    T = pi.T if T is None else T
    if T == 0:
        return None if len(pi.segments) == 0 else "segments present but T=0"
    if not pi.segments:
        return f"empty segmentation for T={T}"
    expected = 0
    for k, (t, s, v) in enumerate(pi.segments):
        if s < 1:
            return f"segment {k} has duration s={s} < 1"
        if t != expected:
            if t < expected:
                return f"overlap at t={t}: segment {k} starts before previous end {expected}"
            return f"gap at t={expected}: segment {k} starts at {t}"
        if v < 0 or (vocab_size is not None and v >= vocab_size):
            return f"segment {k} label {v} outside vocabulary"
        expected = t + s
    if expected != T:
        return f"last segment ends at {expected}, expected t_K+s_K=T={T}"
    return None


def label_map(pi: Segmentation) -> tuple[int, ...]:
    """Project a segmentation onto its label sequence."""
    problem = validate(pi)
    if problem is not None:
        raise SegmentationError(problem)
    return tuple(seg.label for seg in pi.segments)


def count_paths(T: int, S: int, V: int) -> int:
    """Number of segmentations via ``N(t) = sum_s V * N(t - s)``."""
    n = [1] + [0] * T
    for t in range(1, T + 1):
        n[t] = sum(V * n[t - s] for s in range(1, min(S, t) + 1))
    return n[T]


def enumerate_paths(
    T: int, S: int, V: int, constraint: Optional[Sequence[int]] = None
) -> Iterator[Segmentation]:
    """Yield every segmentation of ``T`` timesteps exactly once.

    Order is lexicographic in ``(t1, s1, l1, t2, s2, l2, ...)``. Only meant as
    a test oracle, so sizes are capped at ``T<=12, S<=6, V<=6``.
    """
    if T > ENUMERATION_LIMITS["T"] or S > ENUMERATION_LIMITS["S"] or V > ENUMERATION_LIMITS["V"]:
        raise ValueError(
            f"enumeration of T={T}, S={S}, V={V} refused: limits are {ENUMERATION_LIMITS}; "
            "use the dynamic-programming routines for larger lattices"
        )
    target = None if constraint is None else tuple(int(v) for v in constraint)

    def extend(t: int, prefix: list[Segment]) -> Iterator[Segmentation]:
        if t == T:
            if target is None or len(prefix) == len(target):
                yield Segmentation(prefix, T)
            return
        k = len(prefix)
        if target is not None and k >= len(target):
            return
        labels = range(V) if target is None else (target[k],)
        for s in range(1, min(S, T - t) + 1):
            for v in labels:
                yield from extend(t + s, prefix + [Segment(t, s, v)])

    if T == 0:
        if target is None or len(target) == 0:
            yield Segmentation((), 0)
        return
    yield from extend(0, [])


def format_segmentation(pi: Segmentation) -> str:
    """Render as space-separated ``t:s:label`` triples."""
    return " ".join(f"{t}:{s}:{v}" for t, s, v in pi.segments)


def parse_segmentation(text: str, T: Optional[int] = None) -> Segmentation:
    segs = []
    for tok in text.split():
        parts = tok.split(":")
        if len(parts) != 3:
            raise SegmentationError(f"malformed segment token {tok!r}")
        segs.append(Segment(*(int(p) for p in parts)))
    if T is None:
        T = segs[-1].t + segs[-1].s if segs else 0
    return Segmentation(segs, T)


def invalid_mask(T: int, S: int) -> np.ndarray:
    """Boolean ``[T, S]`` mask, True where ``t + s > T``."""
    t = np.arange(T)[:, None]
    s = np.arange(1, S + 1)[None, :]
    return t + s > T


def mask_invalid(W: np.ndarray) -> np.ndarray:
    """Float64 copy of ``W`` with overrunning cells set to ``-inf``."""
    W = np.array(W, dtype=np.float64)
    if W.ndim != 3:
        raise ValueError(f"score lattice must be [T, S, V], got shape {W.shape}")
    T, S, _ = W.shape
    W[invalid_mask(T, S)] = -np.inf
    return W


class Alphabet:
    """Character inventory with a reserved unknown-character index 0."""

    UNKNOWN = "?"

    def __init__(self, chars: str):
        chars = "".join(dict.fromkeys(c for c in chars if c != self.UNKNOWN))
        self.chars = chars
        self._index = {c: i + 1 for i, c in enumerate(chars)}

    def __len__(self) -> int:
        return len(self.chars) + 1

    def __eq__(self, other) -> bool:
        return isinstance(other, Alphabet) and other.chars == self.chars

    def encode(self, word: str) -> tuple[int, ...]:
        out = []
        for c in word:
            idx = self._index.get(c)
            if idx is None:
                warnings.warn(f"unknown character {c!r} in {word!r} mapped to reserved index", stacklevel=2)
                idx = 0
            out.append(idx)
        return tuple(out)


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]
    alphabet: Alphabet
    counts: Optional[tuple[int, ...]] = None
    char_ids: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        if len(set(self.words)) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        if any(not w for w in self.words):
            raise ValueError("every word needs a non-empty character sequence")
        if self.counts is not None:
            object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
            if len(self.counts) != len(self.words):
                raise ValueError("counts length differs from vocabulary size")
        object.__setattr__(self, "char_ids", tuple(self.alphabet.encode(w) for w in self.words))
        object.__setattr__(self, "_lookup", {w: i for i, w in enumerate(self.words)})

    def __len__(self) -> int:
        return len(self.words)

    @property
    def size(self) -> int:
        return len(self.words)

    def index(self, word: str) -> int:
        return self._lookup[word]

    def encode(self, words: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(w) for w in words)

    def decode(self, labels: Sequence[int]) -> list[str]:
        return [self.words[v] for v in labels]

    def log_unigram(self, smoothing: float = 1.0) -> np.ndarray:
        if self.counts is None:
            raise ValueError("vocabulary carries no counts")
        c = np.asarray(self.counts, dtype=np.float64) + smoothing
        return np.log(c / c.sum())
