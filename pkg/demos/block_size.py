"""Block size: larger blocks give the wavelet more levels to work with.

Each block is transformed on its own, so a small block stops the transform
early and leaves more coarse coefficients that can never be dropped.

    python demos/block_size.py
"""

from blockcomp import (JobConfig, Stage1Config, WaveletCodec, compress_field, decompress_field,
                       generate_cloud, pressure_like, psnr)

field = generate_cloud(pressure_like(128, seed=0))

for block in (8, 16, 32, 64):
    job = JobConfig(Stage1Config(WaveletCodec(epsilon=1e-3)), block_size=block)
    blob, report = compress_field(field, job)
    print(f"B={block:2d}  blocks {(128 // block) ** 3:5d}  chunks {report.nchunks:4d}  "
          f"CR {report.cr:6.2f}  PSNR {psnr(field, decompress_field(blob)):6.2f} dB")
