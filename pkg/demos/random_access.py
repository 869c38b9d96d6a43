"""Random access: decode one block without touching the rest of the file.

The container stores a chunk table, so a reader seeks straight to the chunk
holding a block, checks its CRC, inflates it and decodes just that chunk.  A
small LRU cache keeps recently inflated chunks around for neighbouring reads.

    python demos/random_access.py
"""

import numpy as np

from blockcomp import (ChunkCache, ContainerReader, JobConfig, Stage1Config, WaveletCodec,
                       compress_field, decompress_block, decompress_field, generate_cloud,
                       pressure_like)

field = generate_cloud(pressure_like(64, seed=0))
job = JobConfig(Stage1Config(WaveletCodec(epsilon=1e-3)), block_size=16, chunk_blocks=8)
blob, report = compress_field(field, job)
print(f"{len(blob)} bytes, {report.nchunks} chunks of 8 blocks")

full = decompress_field(blob).data
cache = ChunkCache(capacity=2)
with ContainerReader(blob) as reader:
    for block_id in (3, 5, 40, 3, 60):
        block = decompress_block(reader, block_id, cache)
        # block ids run x-fastest over the block grid
        bz, rem = divmod(block_id, 16)
        by, bx = divmod(rem, 4)
        want = full[bz * 16:(bz + 1) * 16, by * 16:(by + 1) * 16, bx * 16:(bx + 1) * 16]
        print(f"block {block_id:2d} (chunk {reader.chunk_of_block(block_id)})  "
              f"matches full decode: {np.array_equal(block, want)}  "
              f"hits {cache.hits} misses {cache.misses} inflates {reader.inflate_calls}")
