"""Chunk-level reversible transforms: byte shuffle and raw DEFLATE."""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, CorruptStream
from .grid import Precision


class Coder(enum.IntEnum):
    NONE = 0
    DEFLATE = 1


class DeflateLevel(enum.IntEnum):
    DEFAULT = 0
    BEST = 1

    @property
    def zlib_level(self) -> int:
        # 4 is the first lazy-matching level: within ~1% of 6 on shuffled stage-1
        # output at ~1.6x the speed
        return 4 if self is DeflateLevel.DEFAULT else 9


@dataclass(frozen=True)
class Stage2Config:
    shuffle: bool = True
    stride: int = 4
    coder: Coder = Coder.DEFLATE
    level: DeflateLevel = DeflateLevel.DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "coder", Coder(self.coder))
        object.__setattr__(self, "level", DeflateLevel(self.level))
        if self.stride not in (1, 4, 8):
            raise ConfigError(f"shuffle stride must be 1, 4 or 8, got {self.stride}")
        if self.shuffle == (self.stride == 1):
            raise ConfigError("stride 1 is exactly the unshuffled case")

    @classmethod
    def for_precision(cls, precision, shuffle=True, coder=Coder.DEFLATE, level=DeflateLevel.DEFAULT):
        stride = Precision(precision).itemsize if shuffle else 1
        return cls(shuffle, stride, coder, level)

    @property
    def effective_stride(self) -> int:
        return self.stride if self.shuffle else 1


@njit(cache=True, nogil=True)
def _transpose(src, dst, rows, cols):
    for j in range(cols):
        for i in range(rows):
            dst[j * rows + i] = src[i * cols + j]


def _byte_transpose(buf, rows_of, stride: int) -> bytes:
    data = np.frombuffer(buf, dtype=np.uint8)
    if stride <= 1:
        return bytes(buf)
    rows = len(data) // stride
    out = data.copy()
    r, c = rows_of(rows, stride)
    _transpose(data, out, r, c)
    return out.tobytes()


def shuffle(buf, stride: int) -> bytes:
    """Byte transpose: output byte ``j*(n//stride) + i`` is input byte ``i*stride + j``.

    The ``len(buf) % stride`` tail bytes are copied unchanged.
    """
    return _byte_transpose(buf, lambda rows, k: (rows, k), stride)


def unshuffle(buf, stride: int) -> bytes:
    return _byte_transpose(buf, lambda rows, k: (k, rows), stride)


_STORED_MAX = 65535


def stored_blocks(buf) -> bytes:
    """Raw DEFLATE stream made only of stored (uncompressed) blocks.

    Each block costs 5 bytes: the BFINAL/BTYPE byte, LEN and ~LEN.
    """
    buf = bytes(buf)
    starts = range(0, len(buf), _STORED_MAX) if buf else [0]
    parts = []
    for start in starts:
        piece = buf[start:start + _STORED_MAX]
        final = start + _STORED_MAX >= len(buf)
        parts.append(struct.pack("<BHH", int(final), len(piece), len(piece) ^ 0xFFFF) + piece)
    return b"".join(parts)


def deflate(buf, level: DeflateLevel = DeflateLevel.DEFAULT) -> bytes:
    """Raw DEFLATE stream (no zlib/gzip wrapper).

    Falls back to plain stored blocks when zlib's output would be larger, which
    caps expansion at 5 bytes per 64 KiB.
    """
    buf = bytes(buf)
    co = zlib.compressobj(DeflateLevel(level).zlib_level, zlib.DEFLATED, -15, 9)
    out = co.compress(buf) + co.flush()
    stored_size = len(buf) + 5 * max(1, -(-len(buf) // _STORED_MAX))
    return stored_blocks(buf) if len(out) > stored_size else out


def inflate(buf) -> bytes:
    do = zlib.decompressobj(-15)
    try:
        out = do.decompress(bytes(buf)) + do.flush()
    except zlib.error as exc:
        raise CorruptStream(str(exc)) from None
    if not do.eof:
        raise CorruptStream("DEFLATE stream ends before its final block")
    if do.unused_data:
        raise CorruptStream(f"{len(do.unused_data)} bytes follow the DEFLATE stream")
    return out


def encode_chunk(buf: bytes, cfg: Stage2Config) -> tuple[bytes, bytes]:
    """Return (shuffled, coded) forms of a stage-1 chunk buffer."""
    shuffled = shuffle(buf, cfg.effective_stride)
    coded = deflate(shuffled, cfg.level) if cfg.coder is Coder.DEFLATE else shuffled
    return shuffled, coded


def decode_chunk(data: bytes, cfg: Stage2Config) -> bytes:
    raw = inflate(data) if cfg.coder is Coder.DEFLATE else bytes(data)
    return unshuffle(raw, cfg.effective_stride)
