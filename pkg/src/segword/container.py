"""Binary container for model parameters and lattices.

Layout (all integers little-endian)::

    magic        4 bytes   b"SGWC"
    version      u16
    header_len   u32
    header       header_len bytes of UTF-8 JSON, keys sorted, no spaces
    n_blocks     u32
    n_blocks x:
        name_len u16, name (UTF-8)
        kind     1 byte   b"f" float or b"i" signed int
        width    u8       element width in bytes
        ndim     u8, shape ndim x u64
        payload  prod(shape) * width bytes
    crc32        u32 over every preceding byte

Floating-point model parameters are written at 32 bits; lattices may be
written at 64. Loading then saving reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
import zlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .embeddings import AcousticView, MultiViewModel, WrittenView
from .encoder import EncoderParams
from .lattice import Alphabet, Vocabulary
from .scorer import AcousticParams, ScorerParams
from .training import SegmentalModel

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "ContainerError",
    "VersionMismatch",
    "ModelContainer",
    "recognizer_container",
    "recognizer_from_container",
    "embedder_container",
    "embedder_from_container",
    "lattice_container",
    "lattice_from_container",
    "vocab_to_header",
    "vocab_from_header",
]

MAGIC = b"SGWC"
FORMAT_VERSION = 1
_DTYPES = {(b"f", 4): "<f4", (b"f", 8): "<f8", (b"i", 4): "<i4", (b"i", 8): "<i8"}


class ContainerError(ValueError):
    """The bytes are not a valid container (bad magic, truncation, checksum)."""


class VersionMismatch(ContainerError):
    pass


def _disk_dtype(a: np.ndarray) -> np.dtype:
    a = np.asarray(a)
    if a.dtype.kind == "f":
        return np.dtype("<f4" if a.dtype.itemsize <= 4 else "<f8")
    if a.dtype.kind in "iub":
        return np.dtype("<i4" if a.dtype.itemsize <= 4 else "<i8")
    raise TypeError(f"cannot store arrays of dtype {a.dtype}")


@dataclass
class ModelContainer:
    """A JSON header plus named numeric blocks.

    Blocks keep their on-disk dtype in memory (``<f4``, ``<f8``, ``<i4`` or
    ``<i8``); arrays of any other float or integer dtype are converted when
    added.
    """

    header: dict
    blocks: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.header.get("kind", "")

    def add(self, name: str, array, dtype: Optional[str] = None) -> None:
        a = np.asarray(array)
        self.blocks[name] = np.ascontiguousarray(a, dtype=np.dtype(dtype) if dtype else _disk_dtype(a))

    def to_bytes(self) -> bytes:
        header = json.dumps(self.header, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()
        parts = [MAGIC, struct.pack("<HI", FORMAT_VERSION, len(header)), header, struct.pack("<I", len(self.blocks))]
        for name, a in self.blocks.items():
            dt = _disk_dtype(a) if a.dtype.str not in _DTYPES.values() else a.dtype
            a = np.ascontiguousarray(a, dtype=dt)
            raw = name.encode()
            parts.append(struct.pack("<H", len(raw)) + raw)
            parts.append((b"f" if dt.kind == "f" else b"i") + struct.pack("<BB", dt.itemsize, a.ndim))
            parts.append(struct.pack(f"<{a.ndim}Q", *a.shape))
            parts.append(a.tobytes())
        body = b"".join(parts)
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "ModelContainer":
        if len(data) < 14 or data[:4] != MAGIC:
            raise ContainerError("not a model container (bad magic)")
        body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
        if zlib.crc32(body) != crc:
            raise ContainerError("checksum mismatch: container is corrupt")
        version, hlen = struct.unpack_from("<HI", body, 4)
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"container format version {version}, this build reads version {FORMAT_VERSION}")
        pos = 10
        try:
            header = json.loads(body[pos : pos + hlen].decode())
            pos += hlen
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            blocks = {}
            for _ in range(n):
                (nlen,) = struct.unpack_from("<H", body, pos)
                name = body[pos + 2 : pos + 2 + nlen].decode()
                pos += 2 + nlen
                kind = body[pos : pos + 1]
                width, ndim = struct.unpack_from("<BB", body, pos + 1)
                pos += 3
                shape = struct.unpack_from(f"<{ndim}Q", body, pos)
                pos += 8 * ndim
                dt = _DTYPES.get((kind, width))
                if dt is None:
                    raise ContainerError(f"block {name!r}: unsupported element type {kind!r}/{width}")
                nbytes = int(np.prod(shape, dtype=np.int64)) * width
                if pos + nbytes > len(body):
                    raise ContainerError(f"block {name!r}: payload shorter than shape {shape}")
                blocks[name] = np.frombuffer(body, dtype=dt, count=nbytes // width, offset=pos).reshape(shape).copy()
                pos += nbytes
        except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ContainerError(f"malformed container: {exc}") from exc
        if pos != len(body):
            raise ContainerError(f"{len(body) - pos} trailing bytes after the last block")
        return cls(header, blocks)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ModelContainer":
        return cls.from_bytes(Path(path).read_bytes())

    def require(self, kind: str) -> None:
        if self.kind != kind:
            raise ContainerError(f"expected a {kind!r} container, found {self.kind!r}")


def vocab_to_header(vocab: Vocabulary) -> dict:
    out = {"alphabet": vocab.alphabet.chars, "words": list(vocab.words)}
    if vocab.counts is not None:
        out["counts"] = list(vocab.counts)
    return out


def vocab_from_header(h: Mapping) -> Vocabulary:
    return Vocabulary(tuple(h["words"]), Alphabet(h["alphabet"]), h.get("counts"))


def _add_params(c: ModelContainer, arrays: Mapping[str, Optional[np.ndarray]]) -> None:
    for name, a in arrays.items():
        if a is not None:
            c.add(name, a, "<f4")


@contextmanager
def _structural(kind: str):
    try:
        yield
    except ContainerError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ContainerError(f"inconsistent {kind} container: {exc}") from exc


def _f64(c: ModelContainer, name: str) -> np.ndarray:
    try:
        return c.blocks[name].astype(np.float64)
    except KeyError:
        raise ContainerError(f"missing parameter block {name!r}") from None


def recognizer_container(model: SegmentalModel, vocab: Vocabulary, S: int, meta: Optional[dict] = None) -> ModelContainer:
    enc, sc = model.encoder, model.scorer
    header = {
        "kind": "recognizer",
        "dims": {"F_in": enc.input_dim, "F": sc.feature_dim, "D": sc.embed_dim, "V": sc.vocab_size, "S": int(S)},
        "pooling": sc.pooling,
        "encoder": {"context": enc.context, "stride": enc.stride, "dropout": enc.dropout},
        "stack": bool(model.stack),
        "vocab": vocab_to_header(vocab),
        "meta": dict(meta or {}),
    }
    c = ModelContainer(header)
    _add_params(c, {f"enc.{k}": v for k, v in enc.arrays().items()})
    _add_params(c, sc.arrays())
    return c


def recognizer_from_container(c: ModelContainer) -> tuple[SegmentalModel, Vocabulary, int]:
    """``(model, vocabulary, max segment size)``."""
    c.require("recognizer")
    h = c.header
    with _structural("recognizer"):
        e = h["encoder"]
        enc = EncoderParams(_f64(c, "enc.W"), _f64(c, "enc.b"), e["context"], e["stride"], e["dropout"])
        g = _f64(c, "g") if "g" in c.blocks else None
        sc = ScorerParams(_f64(c, "A1"), _f64(c, "b1"), _f64(c, "A2"), _f64(c, "b2"), h["pooling"], g)
        vocab = vocab_from_header(h["vocab"])
        S = int(h["dims"]["S"])
    if len(vocab) != sc.vocab_size:
        raise ContainerError(f"header lists {len(vocab)} words but A2 has {sc.vocab_size} rows")
    return SegmentalModel(enc, sc, h["stack"]), vocab, S


def embedder_container(model: MultiViewModel, vocab: Vocabulary, meta: Optional[dict] = None) -> ModelContainer:
    f, g = model.f, model.g
    header = {
        "kind": "embedder",
        "dims": {"F_in": f.encoder.input_dim, "F": f.acoustic.feature_dim, "D": f.embed_dim, "V": len(vocab)},
        "pooling": f.acoustic.pooling,
        "encoder": {"context": f.encoder.context, "stride": f.encoder.stride, "dropout": f.encoder.dropout},
        "vocab": vocab_to_header(vocab),
        "meta": dict(meta or {}),
    }
    c = ModelContainer(header)
    _add_params(c, {f"f.{k}": v for k, v in f.arrays().items()})
    _add_params(c, {f"g.{k}": v for k, v in g.arrays().items()})
    return c


def embedder_from_container(c: ModelContainer) -> tuple[MultiViewModel, Vocabulary]:
    c.require("embedder")
    h = c.header
    with _structural("embedder"):
        e = h["encoder"]
        enc = EncoderParams(_f64(c, "f.enc.W"), _f64(c, "f.enc.b"), e["context"], e["stride"], e["dropout"])
        g = _f64(c, "f.g") if "f.g" in c.blocks else None
        ac = AcousticParams(_f64(c, "f.A1"), _f64(c, "f.b1"), h["pooling"], g)
        written = WrittenView(*(_f64(c, f"g.{k}") for k in ("C", "Wc", "bc", "Wo", "bo")))
        vocab = vocab_from_header(h["vocab"])
    return MultiViewModel(AcousticView(enc, ac), written), vocab


def lattice_container(W: np.ndarray, kind: str = "score_lattice", meta: Optional[dict] = None) -> ModelContainer:
    """A score or gradient lattice ``[T, S, V]`` stored at 64 bits."""
    if kind not in ("score_lattice", "grad_lattice"):
        raise ValueError(f"unknown lattice kind {kind!r}")
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 3:
        raise ValueError(f"lattice must be [T, S, V], got {W.shape}")
    T, S, V = W.shape
    c = ModelContainer({"kind": kind, "dims": {"T": T, "S": S, "V": V}, "meta": dict(meta or {})})
    c.add("W", W, "<f8")
    return c


def lattice_from_container(c: ModelContainer) -> np.ndarray:
    if c.kind not in ("score_lattice", "grad_lattice"):
        raise ContainerError(f"expected a lattice container, found {c.kind!r}")
    return _f64(c, "W")
