"""Parallel compression and decompression of whole fields, plus block access."""

from __future__ import annotations

import threading
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .container import (
    ContainerHeader,
    ContainerReader,
    chunk_ranges,
    open_container,
    write_container,
)
from .errors import BlockOutOfRange, ConfigError
from .grid import ScalarField3D, check_block_size, merge_blocks, split_blocks
from .stage1 import Stage1Config, WaveletCodec, decode_blocks, encode_blocks, payload_overhead
from .stage2 import Coder, Stage2Config, decode_chunk, encode_chunk

CHUNK_TARGET_BYTES = 4 * 2**20


def default_chunk_blocks(block_size: int, precision) -> int:
    per_block = block_size**3 * precision.itemsize + payload_overhead(block_size)
    return max(1, CHUNK_TARGET_BYTES // per_block)


@dataclass(frozen=True)
class JobConfig:
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config | None = None  # None: shuffle at the item size, DEFLATE Default
    block_size: int = 32
    chunk_blocks: int | None = None
    workers: int = 1
    levels: int | None = None

    def __post_init__(self):
        if self.stage2 is None:
            object.__setattr__(self, "stage2", Stage2Config.for_precision(self.stage1.precision))
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_blocks is not None and self.chunk_blocks < 1:
            raise ConfigError(f"chunk_blocks must be >= 1, got {self.chunk_blocks}")
        if self.levels is not None and self.levels != self.stage1.levels:
            object.__setattr__(
                self, "stage1",
                Stage1Config(self.stage1.codec, self.stage1.precision, self.levels),
            )

    @property
    def effective_chunk_blocks(self) -> int:
        if self.chunk_blocks is not None:
            return self.chunk_blocks
        return default_chunk_blocks(self.block_size, self.stage1.precision)


@dataclass(frozen=True)
class CompressionReport:
    raw_bytes: int
    file_bytes: int
    stage1_bytes: int
    shuffled_bytes: int
    coded_bytes: int
    nchunks: int
    wall_time: float

    @property
    def cr(self) -> float:
        return self.raw_bytes / self.file_bytes


def _run(fn, items, workers: int) -> list:
    """Map ``fn`` over ``items`` with worker ``k`` taking items k, k+w, k+2w..."""
    items = list(items)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    results = [None] * len(items)

    def lane(k):
        for i in range(k, len(items), workers):
            results[i] = fn(items[i])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(lane, k) for k in range(min(workers, len(items)))]:
            fut.result()
    return results


def compress_field(field_: ScalarField3D, job: JobConfig = JobConfig()) -> tuple[bytes, CompressionReport]:
    """Compress a field into container bytes.

    The bytes depend only on the field and the job minus ``workers``.
    """
    t0 = time.perf_counter()
    b = job.block_size
    check_block_size(b, field_.dims)
    s1, s2 = job.stage1, job.stage2
    data = field_.data
    if data.dtype != s1.precision.dtype:
        raise ConfigError(f"field is {data.dtype}, job expects {s1.precision.value}")
    if isinstance(s1.codec, WaveletCodec):
        s1.plan(b)  # fail early on levels that do not fit the block
    blocks = split_blocks(data, b)
    header = ContainerHeader.from_configs(
        field_.dims, b, s1, s2, job.effective_chunk_blocks, field_.value_range
    )

    def work(rng):
        first, n = rng
        payloads = encode_blocks(blocks[first:first + n], first, s1)
        buf = b"".join(p.to_bytes() for p in payloads)
        shuffled, coded = encode_chunk(buf, s2)
        return len(buf), len(shuffled), coded

    results = _run(work, chunk_ranges(header.nblocks, header.chunk_blocks), job.workers)
    chunks = [r[2] for r in results]
    out = write_container(header, chunks)
    report = CompressionReport(
        raw_bytes=field_.nbytes,
        file_bytes=len(out),
        stage1_bytes=sum(r[0] for r in results),
        shuffled_bytes=sum(r[1] for r in results),
        coded_bytes=sum(len(c) for c in chunks),
        nchunks=len(chunks),
        wall_time=time.perf_counter() - t0,
    )
    return out, report


def decode_chunk_blocks(reader: ContainerReader, i: int) -> np.ndarray:
    """Fetch, verify and fully decode chunk ``i`` into (n, B, B, B) blocks."""
    h = reader.header
    entry = reader.table[i]
    data = reader.read_chunk(i)
    if h.coder is Coder.DEFLATE:
        with reader._lock:
            reader.inflate_calls += 1
    raw = decode_chunk(data, h.stage2)
    return decode_blocks(raw, entry.nblocks, h.stage1, h.block_size, entry.first_block)


def decompress_field(source, workers: int = 1) -> ScalarField3D:
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    reader = open_container(source)
    h = reader.header
    parts = _run(lambda i: decode_chunk_blocks(reader, i), range(h.nchunks), workers)
    b = h.block_size
    blocks = np.concatenate(parts) if parts else np.empty((0, b, b, b), h.precision.dtype)
    data = merge_blocks(blocks.astype(h.precision.dtype), h.nx // b, h.ny // b, h.nz // b)
    if reader is not source:
        reader.close()
    return ScalarField3D(data)


class ChunkCache:
    """LRU cache of decoded chunks keyed by (container identity, chunk index)."""

    def __init__(self, capacity: int = 8):
        if capacity < 1:
            raise ConfigError(f"cache capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.hits = 0
        self.misses = 0
        self._entries: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return key in self._entries

    def get(self, reader: ContainerReader, chunk: int) -> np.ndarray:
        key = (reader.identity, chunk)
        with self._lock:
            if key in self._entries:
                self.hits += 1
                self._entries.move_to_end(key)
                return self._entries[key]
            self.misses += 1
            blocks = decode_chunk_blocks(reader, chunk)
            blocks.setflags(write=False)
            self._entries[key] = blocks
            while len(self._entries) > self.capacity:
                self._entries.popitem(last=False)
            return blocks

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


def decompress_block(source, block_id: int, cache: ChunkCache | None = None) -> np.ndarray:
    """Return block ``block_id`` (B x B x B) without decoding the whole file."""
    reader = open_container(source)
    try:
        h = reader.header
        if not 0 <= block_id < h.nblocks:
            raise BlockOutOfRange(f"block {block_id} out of range [0, {h.nblocks})")
        chunk = reader.chunk_of_block(block_id)
        blocks = cache.get(reader, chunk) if cache is not None else decode_chunk_blocks(reader, chunk)
        return blocks[block_id - reader.table[chunk].first_block].copy()
    finally:
        if reader is not source:
            reader.close()
