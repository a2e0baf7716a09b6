"""Synthetic whole-word recognition data with ground-truth segmentations.

Each character owns a prototype frame; a word is realised by emitting every
character's prototype for a jittered number of frames, plus a fixed onset
marker on the word's first frame, plus Gaussian noise. Word frequencies
follow a Zipf law over the vocabulary order (index 0 is the most common
word), so the tail of the vocabulary is rare in any training sample.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .lattice import Alphabet, Segment, Segmentation, Vocabulary

__all__ = ["SyntheticTask", "make_task", "Utterance", "Dataset", "generate", "oracle_lattice"]


@dataclass(frozen=True)
class SyntheticTask:
    vocab: Vocabulary
    prototypes: np.ndarray  # [alphabet size, F0]; row 0 (unknown char) unused
    onset: np.ndarray  # [F0]
    noise: float = 0.1
    frames_per_char: tuple[int, int] = (1, 2)
    words_per_utt: tuple[int, int] = (2, 5)
    zipf: float = 1.0

    @property
    def feature_dim(self) -> int:
        return self.prototypes.shape[1]

    @property
    def longest_word(self) -> int:
        """Frames in the longest possible realisation of any word."""
        return max(len(c) for c in self.vocab.char_ids) * self.frames_per_char[1]

    def label_probs(self, zipf: Optional[float] = None) -> np.ndarray:
        a = self.zipf if zipf is None else zipf
        w = 1.0 / np.arange(1, len(self.vocab) + 1) ** a
        return w / w.sum()

    def realise(self, word: int, rng: np.random.Generator, noise: Optional[float] = None) -> np.ndarray:
        lo, hi = self.frames_per_char
        frames = [
            np.repeat(self.prototypes[c][None], rng.integers(lo, hi + 1), axis=0) for c in self.vocab.char_ids[word]
        ]
        X = np.concatenate(frames, axis=0)
        X[0] += self.onset
        sigma = self.noise if noise is None else noise
        if sigma > 0:
            X = X + sigma * rng.standard_normal(X.shape)
        return X


def make_task(
    vocab_size: int = 50,
    alphabet: str = "abcdefghijkl",
    chars_per_word: tuple[int, int] = (2, 4),
    feature_dim: int = 16,
    noise: float = 0.1,
    frames_per_char: tuple[int, int] = (1, 2),
    words_per_utt: tuple[int, int] = (2, 5),
    zipf: float = 1.0,
    seed: int = 0,
) -> SyntheticTask:
    """Random vocabulary of words with pairwise distinct character multisets."""
    rng = np.random.default_rng(seed)
    alpha = Alphabet(alphabet)
    lo, hi = chars_per_word
    pool = [
        "".join(combo)
        for n in range(lo, hi + 1)
        for combo in itertools.combinations_with_replacement(alpha.chars, n)
        if len(set(combo)) == n
    ]
    if len(pool) < vocab_size:
        raise ValueError(f"only {len(pool)} distinct words available for vocab_size={vocab_size}")
    picked = rng.choice(len(pool), size=vocab_size, replace=False)
    words = []
    for k in picked:
        chars = list(pool[k])
        rng.shuffle(chars)
        words.append("".join(chars))
    protos = rng.standard_normal((len(alpha), feature_dim))
    protos[0] = 0.0
    onset = rng.standard_normal(feature_dim)
    return SyntheticTask(Vocabulary(tuple(words), alpha), protos, onset, noise, frames_per_char, words_per_utt, zipf)


class Utterance(NamedTuple):
    uid: str
    features: np.ndarray
    labels: tuple[int, ...]
    segmentation: Optional[Segmentation]


@dataclass
class Dataset:
    vocab: Vocabulary
    utterances: list[Utterance] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.utterances)

    def __iter__(self):
        return iter(self.utterances)

    def label_counts(self) -> Counter:
        return Counter(v for u in self.utterances for v in u.labels)

    def with_counts(self) -> Vocabulary:
        """The vocabulary annotated with this dataset's word counts."""
        counts = self.label_counts()
        return Vocabulary(self.vocab.words, self.vocab.alphabet, tuple(counts.get(v, 0) for v in range(len(self.vocab))))

    def word_segments(self):
        """All ``(frames, label)`` pairs cut out along the true segmentations."""
        segs, labels = [], []
        for u in self.utterances:
            if u.segmentation is None:
                continue
            for t, s, v in u.segmentation:
                segs.append(u.features[t : t + s])
                labels.append(v)
        return segs, np.array(labels, dtype=np.int64)


def generate(
    task: SyntheticTask,
    n: int,
    seed: int,
    zipf: Optional[float] = None,
    words_per_utt: Optional[tuple[int, int]] = None,
    noise: Optional[float] = None,
    prefix: str = "utt",
) -> Dataset:
    """``n`` utterances, reproducible per ``seed``.

    ``zipf``, ``words_per_utt`` and ``noise`` override the task's settings
    (``zipf=0`` draws words uniformly).
    """
    rng = np.random.default_rng(seed)
    probs = task.label_probs(zipf)
    lo, hi = task.words_per_utt if words_per_utt is None else words_per_utt
    out = []
    for k in range(n):
        K = int(rng.integers(lo, hi + 1))
        labels = tuple(int(v) for v in rng.choice(len(probs), size=K, p=probs))
        parts, segs, t = [], [], 0
        for v in labels:
            X = task.realise(v, rng, noise)
            parts.append(X)
            segs.append(Segment(t, len(X), v))
            t += len(X)
        out.append(Utterance(f"{prefix}{k:05d}", np.concatenate(parts, axis=0), labels, Segmentation(segs, t)))
    return Dataset(task.vocab, out)


def oracle_lattice(task: SyntheticTask, X: np.ndarray, S: int, miss: float = -100.0) -> np.ndarray:
    """Score 0 where a segment is exactly a noiseless realisation of a word, ``miss`` elsewhere."""
    T = X.shape[0]
    V = len(task.vocab)
    W = np.full((T, S, V), miss)
    lo, hi = task.frames_per_char
    table = {}
    for v, chars in enumerate(task.vocab.char_ids):
        for reps in itertools.product(range(lo, hi + 1), repeat=len(chars)):
            R = np.concatenate([np.repeat(task.prototypes[c][None], r, axis=0) for c, r in zip(chars, reps)])
            R[0] += task.onset
            table.setdefault(R.shape[0], []).append((v, R))
    for s in range(1, S + 1):
        for v, R in table.get(s, ()):
            for t in range(T - s + 1):
                if np.allclose(X[t : t + s], R, atol=1e-9):
                    W[t, s - 1, v] = 0.0
    return W
