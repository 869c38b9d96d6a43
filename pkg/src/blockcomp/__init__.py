"""Block-structured lossy compression of 3D floating-point fields.

A field is cut into cubic blocks.  Each block is wavelet-thresholded,
predictor-coded or copied (stage 1); consecutive blocks form chunks that are
byte-shuffled and DEFLATE-coded (stage 2) and stored in a single container
with a chunk table for random access.
"""

from .container import ContainerHeader, ContainerReader, assign_offsets, read_chunk, read_header, write_container
from .errors import *  # noqa: F401,F403
from .grid import BlockGrid, Precision, ScalarField3D, gather, ingest_raw, partition, write_raw
from .metrics import QualityReport, compression_ratio, linf, mse, psnr
from .pipeline import ChunkCache, CompressionReport, JobConfig, compress_field, decompress_block, decompress_field
from .stage1 import Passthrough, PredictorCodec, Stage1Config, WaveletCodec, zero_lsbs
from .stage2 import Coder, DeflateLevel, Stage2Config, shuffle, unshuffle
from .synth import CloudSpec, generate_cloud, generate_poly, pressure_like
from .wavelet import WaveletKind, WaveletPlan, forward_1d, forward_3d, inverse_1d, inverse_3d

__version__ = "0.1.0"
