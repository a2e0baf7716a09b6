"""Datasets on disk.

* Frame file: ``b"SGWF"``, element width (u8, 4 or 8), ``T`` and ``F`` (u32
  each), then ``T * F`` little-endian floats in row-major order.
* Vocabulary file: one word per line, optionally followed by a tab and its
  training count.
* Manifest: one utterance per line, four tab-separated fields: id, frame
  file (relative to the manifest's directory unless absolute), the words
  separated by spaces, and the true segmentation as ``t:s:label`` triples
  (label indices into the vocabulary). The last field may be empty.
* Transcript file (decoder output and references): ``id word word ...``.
* Word-pair list: ``utt-id word start end`` with frames ``start .. end-1``.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .lattice import Alphabet, SegmentationError, Vocabulary, format_segmentation, parse_segmentation, validate
from .synthetic import Dataset, Utterance

__all__ = [
    "DatasetError",
    "FRAME_MAGIC",
    "write_frames",
    "read_frames",
    "write_vocab",
    "read_vocab",
    "write_dataset",
    "read_dataset",
    "write_transcripts",
    "read_transcripts",
    "write_pairs",
    "read_pairs",
]

FRAME_MAGIC = b"SGWF"


class DatasetError(ValueError):
    """Malformed or inconsistent dataset files; ``path`` and ``line`` locate the problem."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = f"{path}:{line}: " if path is not None and line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


def write_frames(path, X: np.ndarray, width: int = 4) -> None:
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError(f"frame matrix must be [T, F], got {X.shape}")
    if width not in (4, 8):
        raise ValueError("element width must be 4 or 8 bytes")
    dt = "<f4" if width == 4 else "<f8"
    T, F = X.shape
    Path(path).write_bytes(FRAME_MAGIC + struct.pack("<BII", width, T, F) + np.ascontiguousarray(X, dtype=dt).tobytes())


def read_frames(path) -> np.ndarray:
    """Float64 ``[T, F]`` matrix."""
    data = Path(path).read_bytes()
    if len(data) < 13 or data[:4] != FRAME_MAGIC:
        raise DatasetError("not a frame file (bad magic)", path)
    width, T, F = struct.unpack_from("<BII", data, 4)
    if width not in (4, 8):
        raise DatasetError(f"unsupported element width {width}", path)
    if len(data) - 13 != T * F * width:
        raise DatasetError(f"payload holds {len(data) - 13} bytes, header promises {T}x{F}x{width}", path)
    X = np.frombuffer(data, dtype="<f4" if width == 4 else "<f8", offset=13).reshape(T, F)
    return X.astype(np.float64)


def write_vocab(path, vocab: Vocabulary) -> None:
    lines = []
    for k, w in enumerate(vocab.words):
        lines.append(w if vocab.counts is None else f"{w}\t{vocab.counts[k]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_vocab(path, alphabet: Optional[str] = None) -> Vocabulary:
    """Read a vocabulary; the alphabet defaults to every character used, in first-seen order."""
    words, counts = [], []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) > 2 or not fields[0] or any(c.isspace() for c in fields[0]):
            raise DatasetError(f"expected 'word' or 'word<TAB>count', got {line!r}", path, n)
        words.append(fields[0])
        if len(fields) == 2:
            try:
                counts.append(int(fields[1]))
            except ValueError:
                raise DatasetError(f"count {fields[1]!r} is not an integer", path, n) from None
    if counts and len(counts) != len(words):
        raise DatasetError("either every word or no word carries a count", path)
    if alphabet is None:
        alphabet = "".join(dict.fromkeys(c for w in words for c in w))
    try:
        return Vocabulary(tuple(words), Alphabet(alphabet), tuple(counts) if counts else None)
    except ValueError as exc:
        raise DatasetError(str(exc), path) from None


def write_dataset(directory, dataset: Dataset, name: str = "data", width: int = 4) -> Path:
    """Write frames, ``<name>.manifest`` and ``<name>.vocab`` under ``directory``; returns the manifest path."""
    root = Path(directory)
    (root / "frames").mkdir(parents=True, exist_ok=True)
    lines = []
    for u in dataset:
        rel = Path("frames") / f"{u.uid}.frm"
        write_frames(root / rel, u.features, width)
        words = " ".join(dataset.vocab.decode(u.labels))
        seg = "" if u.segmentation is None else format_segmentation(u.segmentation)
        lines.append(f"{u.uid}\t{rel.as_posix()}\t{words}\t{seg}")
    manifest = root / f"{name}.manifest"
    manifest.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    write_vocab(root / f"{name}.vocab", dataset.vocab)
    return manifest


def read_dataset(manifest, vocab: Vocabulary, require_labels: bool = True) -> Dataset:
    """Load a manifest; ``require_labels=False`` accepts utterances without words (decoding only)."""
    manifest = Path(manifest)
    if not manifest.is_file():
        raise FileNotFoundError(f"manifest {manifest} not found")
    utts, seen = [], set()
    for n, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise DatasetError(f"expected 4 tab-separated fields, got {len(fields)}", manifest, n)
        uid, frame_path, words, seg_text = fields
        if not uid or uid in seen:
            raise DatasetError(f"missing or duplicate utterance id {uid!r}", manifest, n)
        seen.add(uid)
        try:
            labels = vocab.encode(words.split())
        except KeyError as exc:
            raise DatasetError(f"word {exc.args[0]!r} is not in the vocabulary", manifest, n) from None
        if not labels and require_labels:
            raise DatasetError("utterance has no words", manifest, n)
        fp = Path(frame_path)
        X = read_frames(fp if fp.is_absolute() else manifest.parent / fp)
        try:
            seg = parse_segmentation(seg_text, X.shape[0]) if seg_text.strip() else None
        except SegmentationError as exc:
            raise DatasetError(str(exc), manifest, n) from None
        problem = validate(seg, X.shape[0], len(vocab)) if seg is not None else None
        if problem:
            raise DatasetError(f"invalid segmentation: {problem}", manifest, n)
        if seg is not None and labels and tuple(v for _, _, v in seg) != labels:
            raise DatasetError("segmentation labels disagree with the word sequence", manifest, n)
        utts.append(Utterance(uid, X, labels, seg))
    return Dataset(vocab, utts)


def write_transcripts(path_or_file, items: Sequence[tuple[str, Sequence[str]]]) -> None:
    text = "".join(" ".join([uid, *words]) + "\n" for uid, words in items)
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        Path(path_or_file).write_text(text, encoding="utf-8")


def read_transcripts(path) -> dict[str, list[str]]:
    """``id -> words``; blank lines are skipped, duplicate ids are an error."""
    out: dict[str, list[str]] = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        uid, *words = line.split()
        if uid in out:
            raise DatasetError(f"duplicate utterance id {uid!r}", path, n)
        out[uid] = words
    return out


def write_pairs(path, dataset: Dataset) -> None:
    """Every true word segment of ``dataset`` as a pair line."""
    lines = []
    for u in dataset:
        if u.segmentation is None:
            continue
        for t, s, v in u.segmentation:
            lines.append(f"{u.uid} {dataset.vocab.words[v]} {t} {t + s}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_pairs(path, dataset: Dataset) -> tuple[list[np.ndarray], np.ndarray]:
    """Segments and label indices for each pair line, cut from ``dataset``'s frames."""
    by_id = {u.uid: u for u in dataset}
    segs, labels = [], []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 4:
            raise DatasetError("expected 'utt-id word start end'", path, n)
        uid, word, a, b = fields
        if uid not in by_id:
            raise DatasetError(f"unknown utterance id {uid!r}", path, n)
        try:
            start, end = int(a), int(b)
            v = dataset.vocab.index(word)
        except ValueError:
            raise DatasetError("start and end must be integers", path, n) from None
        except KeyError:
            raise DatasetError(f"word {word!r} is not in the vocabulary", path, n) from None
        X = by_id[uid].features
        if not 0 <= start < end <= len(X):
            raise DatasetError(f"frames {start}..{end} outside utterance of {len(X)} frames", path, n)
        segs.append(X[start:end])
        labels.append(v)
    return segs, np.asarray(labels, dtype=np.int64)
