"""Byte shuffle and low-bit zeroing.

Shuffling regroups the bytes of each value by significance before DEFLATE.
It is lossless, so the decoded field is identical with or without it; only
the file size changes.  Zeroing the low mantissa bits of kept coefficients
is lossy, and makes the stream more compressible.

    python demos/shuffle_and_zero_bits.py
"""

from blockcomp import (JobConfig, Stage1Config, Stage2Config, WaveletCodec, compress_field,
                       decompress_field, generate_cloud, pressure_like, psnr)

field = generate_cloud(pressure_like(128, seed=0))
codec = WaveletCodec(epsilon=1e-3)

decoded = {}
for shuffle in (True, False):
    s1 = Stage1Config(codec)
    job = JobConfig(s1, Stage2Config.for_precision(s1.precision, shuffle=shuffle))
    blob, report = compress_field(field, job)
    decoded[shuffle] = decompress_field(blob).data
    print(f"shuffle={int(shuffle)}  CR {report.cr:6.2f}  "
          f"stage-1 {report.stage1_bytes} B -> coded {report.coded_bytes} B")
print("decoded bytes identical:", decoded[True].tobytes() == decoded[False].tobytes())

print()
for bits in (0, 4, 8, 12):
    job = JobConfig(Stage1Config(WaveletCodec(epsilon=1e-3, zero_bits=bits)))
    blob, report = compress_field(field, job)
    print(f"zero_bits={bits:2d}  CR {report.cr:6.2f}  PSNR {psnr(field, decompress_field(blob)):.6f} dB")

# A few zeroed bits barely move PSNR: the threshold error dominates until the
# truncation error of the kept coefficients catches up with it.
