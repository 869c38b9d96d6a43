"""Single-file container: header, chunk table, chunk payloads.

Layout (all integers little-endian)::

    header (82 bytes)   magic "CBZ1", version u16, precision u8, codec u8,
                        nx ny nz u64, block u32, levels u8, epsilon f64,
                        zero_bits u8, shuffle u8, stride u8, coder u8,
                        deflate level u8, chunk_blocks u32, nchunks u64,
                        min f64, max f64, CRC-32 of the preceding bytes u32
    chunk table         nchunks x [first_block u64, nblocks u32,
                        offset u64, size u64, CRC-32 u32]
    payloads            chunk i at its offset; offsets are the exclusive
                        prefix sum of sizes starting right after the table
"""

from __future__ import annotations

import itertools
import os
import struct
import threading
import zlib
from dataclasses import dataclass, fields

from .errors import (
    BadMagic,
    BlockCompError,
    CorruptContainer,
    CrcMismatch,
    TruncatedFile,
    VersionUnsupported,
)
from .grid import Precision, check_block_size
from .stage1 import Passthrough, PredictorCodec, Stage1Config, WaveletCodec
from .stage2 import Coder, DeflateLevel, Stage2Config
from .wavelet import WaveletKind

MAGIC = b"CBZ1"
VERSION = 1

_HEADER = struct.Struct("<4sHBBQQQIBdBBBBBIQdd")
_CRC = struct.Struct("<I")
HEADER_SIZE = _HEADER.size + _CRC.size
_ENTRY = struct.Struct("<QIQQI")
ENTRY_SIZE = _ENTRY.size

# codec byte: 0 passthrough, 1-3 wavelet kinds, 4 predictor
CODEC_PASSTHROUGH = 0
CODEC_PREDICTOR = 4


def crc32(data) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


def codec_id(stage1: Stage1Config) -> int:
    codec = stage1.codec
    if isinstance(codec, WaveletCodec):
        return int(codec.kind)
    if isinstance(codec, PredictorCodec):
        return CODEC_PREDICTOR
    return CODEC_PASSTHROUGH


@dataclass(frozen=True)
class ContainerHeader:
    precision: Precision
    codec: int
    nx: int
    ny: int
    nz: int
    block_size: int
    levels: int
    epsilon: float
    zero_bits: int
    shuffle: bool
    stride: int
    coder: Coder
    level: DeflateLevel
    chunk_blocks: int
    nchunks: int
    vmin: float
    vmax: float
    version: int = VERSION

    @classmethod
    def from_configs(cls, dims, block_size, stage1: Stage1Config, stage2: Stage2Config,
                     chunk_blocks: int, value_range) -> "ContainerHeader":
        nx, ny, nz = dims
        nblocks = (nx // block_size) * (ny // block_size) * (nz // block_size)
        codec = stage1.codec
        levels = stage1.plan(block_size).levels if isinstance(codec, WaveletCodec) else 0
        if isinstance(codec, WaveletCodec):
            eps, zb = codec.epsilon, codec.zero_bits
        elif isinstance(codec, PredictorCodec):
            eps, zb = codec.error_bound, 0
        else:
            eps, zb = 0.0, 0
        return cls(
            stage1.precision, codec_id(stage1), nx, ny, nz, block_size, levels,
            float(eps), zb, bool(stage2.shuffle), stage2.stride, stage2.coder,
            stage2.level, chunk_blocks, -(-nblocks // chunk_blocks),
            float(value_range[0]), float(value_range[1]),
        )

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.nx, self.ny, self.nz

    @property
    def nblocks(self) -> int:
        b = self.block_size
        return (self.nx // b) * (self.ny // b) * (self.nz // b)

    @property
    def raw_bytes(self) -> int:
        return self.nx * self.ny * self.nz * self.precision.itemsize

    @property
    def table_size(self) -> int:
        return self.nchunks * ENTRY_SIZE

    @property
    def stage1(self) -> Stage1Config:
        if self.codec == CODEC_PASSTHROUGH:
            codec = Passthrough()
        elif self.codec == CODEC_PREDICTOR:
            codec = PredictorCodec(self.epsilon)
        else:
            codec = WaveletCodec(WaveletKind(self.codec), self.epsilon, self.zero_bits)
        levels = self.levels if isinstance(codec, WaveletCodec) else None
        return Stage1Config(codec, self.precision, levels)

    @property
    def stage2(self) -> Stage2Config:
        return Stage2Config(self.shuffle, self.stride, self.coder, self.level)

    def validate(self) -> None:
        """Raise :class:`CorruptContainer` unless every field is legal."""
        try:
            if self.codec not in (CODEC_PASSTHROUGH, CODEC_PREDICTOR, 1, 2, 3):
                raise ValueError(f"unknown codec byte {self.codec}")
            check_block_size(self.block_size, self.dims)
            if min(self.dims) < 1 or self.chunk_blocks < 1:
                raise ValueError("empty dimensions or chunk size")
            s1 = self.stage1
            if isinstance(s1.codec, WaveletCodec):
                s1.plan(self.block_size)
            self.stage2
            if self.nchunks != -(-self.nblocks // self.chunk_blocks):
                raise ValueError(f"nchunks {self.nchunks} does not match the block count")
        except (ValueError, BlockCompError) as exc:
            raise CorruptContainer(f"invalid header: {exc}") from None

    def pack(self) -> bytes:
        body = _HEADER.pack(
            MAGIC, self.version, 0 if self.precision is Precision.BINARY32 else 1,
            self.codec, self.nx, self.ny, self.nz, self.block_size, self.levels,
            self.epsilon, self.zero_bits, int(self.shuffle), self.stride,
            int(self.coder), int(self.level), self.chunk_blocks, self.nchunks,
            self.vmin, self.vmax,
        )
        return body + _CRC.pack(crc32(body))

    @classmethod
    def unpack(cls, buf) -> "ContainerHeader":
        buf = bytes(buf[:HEADER_SIZE])
        if len(buf) >= 4 and buf[:4] != MAGIC:
            raise BadMagic(f"not a container (magic {buf[:4]!r})")
        if len(buf) < HEADER_SIZE:
            raise TruncatedFile(f"header needs {HEADER_SIZE} bytes, file has {len(buf)}")
        (magic, version, prec, codec, nx, ny, nz, b, levels, eps, zb, shuf, stride,
         coder, level, chunk_blocks, nchunks, vmin, vmax) = _HEADER.unpack_from(buf)
        if version != VERSION:
            raise VersionUnsupported(f"container version {version}, this reader handles {VERSION}")
        (stored,) = _CRC.unpack_from(buf, _HEADER.size)
        if stored != crc32(buf[:_HEADER.size]):
            raise CrcMismatch(None)
        try:
            header = cls(
                Precision.BINARY32 if prec == 0 else Precision.BINARY64 if prec == 1 else None,
                codec, nx, ny, nz, b, levels, eps, zb, bool(shuf), stride,
                Coder(coder), DeflateLevel(level), chunk_blocks, nchunks, vmin, vmax, version,
            )
        except ValueError as exc:
            raise CorruptContainer(f"invalid header: {exc}") from None
        if header.precision is None:
            raise CorruptContainer(f"invalid header: precision byte {prec}")
        header.validate()
        return header

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class ChunkTableEntry:
    first_block: int
    nblocks: int
    offset: int
    size: int
    crc: int

    def pack(self) -> bytes:
        return _ENTRY.pack(self.first_block, self.nblocks, self.offset, self.size, self.crc)


def assign_offsets(sizes, base: int = 0) -> list[int]:
    """Exclusive prefix sum of ``sizes`` starting at ``base``."""
    return list(itertools.accumulate(sizes[:-1] if len(sizes) else [], initial=base))[: len(sizes)]


def chunk_ranges(nblocks: int, chunk_blocks: int) -> list[tuple[int, int]]:
    """(first_block, count) of each chunk: fixed consecutive ranges."""
    return [(first, min(chunk_blocks, nblocks - first)) for first in range(0, nblocks, chunk_blocks)]


def build_table(header: ContainerHeader, chunks) -> list[ChunkTableEntry]:
    ranges = chunk_ranges(header.nblocks, header.chunk_blocks)
    if len(ranges) != len(chunks) or len(chunks) != header.nchunks:
        raise ValueError(f"header expects {header.nchunks} chunks, got {len(chunks)}")
    sizes = [len(c) for c in chunks]
    offsets = assign_offsets(sizes, HEADER_SIZE + header.table_size)
    return [ChunkTableEntry(first, n, off, len(c), crc32(c))
            for (first, n), off, c in zip(ranges, offsets, chunks)]


def write_container(header: ContainerHeader, chunks) -> bytes:
    table = build_table(header, chunks)
    return b"".join([header.pack(), *(e.pack() for e in table), *map(bytes, chunks)])


class ContainerReader:
    """Random access to a container held in memory or on disk.

    ``reads`` counts chunk payload fetches; ``inflate_calls`` is incremented
    by the pipeline whenever it runs the lossless decoder on a chunk.
    """

    def __init__(self, source):
        self._lock = threading.Lock()
        self._fh = None
        if isinstance(source, (bytes, bytearray, memoryview)):
            self._buf = memoryview(bytes(source))
            self.file_size = len(self._buf)
            self.name = "<memory>"
        else:
            self._buf = None
            self._fh = open(source, "rb")
            self.file_size = os.fstat(self._fh.fileno()).st_size
            self.name = os.fspath(source)
        self.reads = 0
        self.inflate_calls = 0
        try:
            self.header = ContainerHeader.unpack(self._read(0, HEADER_SIZE))
            table_bytes = self._read(HEADER_SIZE, self.header.table_size)
            if len(table_bytes) < self.header.table_size:
                raise TruncatedFile(
                    f"chunk table needs {self.header.table_size} bytes, "
                    f"{len(table_bytes)} present"
                )
            self.table = [ChunkTableEntry(*_ENTRY.unpack_from(table_bytes, i * ENTRY_SIZE))
                          for i in range(self.header.nchunks)]
            self._check_table()
        except BaseException:
            self.close()
            raise
        self.identity = (crc32(self._read(0, HEADER_SIZE)), crc32(table_bytes))

    def _check_table(self) -> None:
        h = self.header
        expected_ranges = chunk_ranges(h.nblocks, h.chunk_blocks)
        offsets = assign_offsets([e.size for e in self.table], HEADER_SIZE + h.table_size)
        for i, (e, (first, n), off) in enumerate(zip(self.table, expected_ranges, offsets)):
            if (e.first_block, e.nblocks) != (first, n):
                raise CorruptContainer(f"chunk {i} covers blocks {e.first_block}+{e.nblocks}, expected {first}+{n}")
            if e.offset != off:
                raise CorruptContainer(f"chunk {i} offset {e.offset} is not the prefix sum {off}")
        end = HEADER_SIZE + h.table_size + sum(e.size for e in self.table)
        if self.file_size < end:
            raise TruncatedFile(f"file has {self.file_size} bytes, layout needs {end}")
        if self.file_size > end:
            raise CorruptContainer(f"{self.file_size - end} unexpected trailing bytes")

    def _read(self, offset: int, size: int) -> bytes:
        if self._buf is not None:
            return bytes(self._buf[offset:offset + size])
        with self._lock:
            self._fh.seek(offset)
            return self._fh.read(size)

    @property
    def nchunks(self) -> int:
        return self.header.nchunks

    def read_chunk(self, i: int) -> bytes:
        if not 0 <= i < self.header.nchunks:
            raise IndexError(f"chunk {i} out of range [0, {self.header.nchunks})")
        e = self.table[i]
        data = self._read(e.offset, e.size)
        with self._lock:
            self.reads += 1
        if len(data) != e.size:
            raise TruncatedFile(f"chunk {i} truncated")
        if crc32(data) != e.crc:
            raise CrcMismatch(i)
        return data

    def chunk_of_block(self, block_id: int) -> int:
        return block_id // self.header.chunk_blocks

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def open_container(source) -> ContainerReader:
    return source if isinstance(source, ContainerReader) else ContainerReader(source)


def read_header(source) -> ContainerHeader:
    if isinstance(source, ContainerReader):
        return source.header
    if isinstance(source, (bytes, bytearray, memoryview)):
        return ContainerHeader.unpack(source)
    with open(source, "rb") as fh:
        return ContainerHeader.unpack(fh.read(HEADER_SIZE))


def read_chunk(source, i: int) -> bytes:
    if isinstance(source, ContainerReader):
        return source.read_chunk(i)
    with ContainerReader(source) as reader:
        return reader.read_chunk(i)
