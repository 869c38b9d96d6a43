"""Command-line driver.

Exit codes: 0 success, 2 invalid flags, 3 I/O failure, 4 bad or corrupt data.
Reports go to standard output as ``key=value`` lines; errors go to standard
error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import sys
import time

import numpy as np

from . import synth
from .container import MAGIC, ContainerReader
from .errors import BlockCompError, ConfigError
from .grid import Precision, ScalarField3D, check_block_size, ingest_raw, write_raw
from .metrics import QualityReport, format_db
from .pipeline import ChunkCache, JobConfig, compress_field, decompress_block, decompress_field
from .stage1 import Passthrough, PredictorCodec, Stage1Config, WaveletCodec
from .stage2 import Coder, DeflateLevel, Stage2Config
from .wavelet import WaveletKind

EXIT_FLAGS, EXIT_IO, EXIT_DATA = 2, 3, 4

SWEEP_COLUMNS = (
    "epsilon", "codec", "wavelet", "shuffle", "zero_bits", "cr", "psnr_db", "linf",
    "encode_s", "decode_s", "stage1_bytes", "shuffled_bytes", "coded_bytes",
)

_PRECISIONS = {"binary32": Precision.BINARY32, "f32": Precision.BINARY32, "float32": Precision.BINARY32,
               "binary64": Precision.BINARY64, "f64": Precision.BINARY64, "float64": Precision.BINARY64}


def _precision(text: str) -> Precision:
    try:
        return _PRECISIONS[text]
    except KeyError:
        raise argparse.ArgumentTypeError(f"unknown precision {text!r}") from None


def _wavelet(text: str) -> WaveletKind:
    try:
        return WaveletKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(pairs) -> None:
    for key, value in pairs:
        if isinstance(value, float):
            value = format_db(value) if np.isinf(value) else repr(value)
        print(f"{key}={value}")


# --------------------------------------------------------------------------
# shared flag groups

def _add_field_flags(p, dims_required=True):
    p.add_argument("--dims", type=int, nargs=3, metavar=("NX", "NY", "NZ"), required=dims_required)
    p.add_argument("--precision", type=_precision, default=Precision.BINARY32,
                   help="binary32 (default) or binary64")


def _add_codec_flags(p):
    p.add_argument("--block", type=int, default=32, help="block side, a power of 2 (default 32)")
    p.add_argument("--codec", choices=("wavelet", "predictor", "passthrough"), default="wavelet")
    p.add_argument("--wavelet", type=_wavelet, default=WaveletKind.AVG_INTERP3,
                   help="interp4, interp4-lifted or avg-interp3 (default)")
    p.add_argument("--levels", type=int, default=None, help="wavelet levels (default log2(block)-1)")
    p.add_argument("--eps", type=float, default=1e-3,
                   help="absolute threshold (wavelet) or error bound (predictor)")
    p.add_argument("--zero-bits", type=int, default=0)
    p.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--coder", choices=("deflate", "none"), default="deflate")
    p.add_argument("--level", choices=("default", "best"), default="default")
    p.add_argument("--chunk-blocks", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)


def _stage1(codec: str, precision, kind, eps, zero_bits, levels) -> Stage1Config:
    if codec == "wavelet":
        return Stage1Config(WaveletCodec(kind, eps, zero_bits), precision, levels)
    if codec == "predictor":
        return Stage1Config(PredictorCodec(eps), precision)
    return Stage1Config(Passthrough(), precision)


def _job(args, *, codec=None, eps=None, shuffle=None, zero_bits=None, kind=None) -> JobConfig:
    precision = args.precision
    s1 = _stage1(
        codec or args.codec, precision, kind or args.wavelet,
        args.eps if eps is None else eps,
        args.zero_bits if zero_bits is None else zero_bits,
        args.levels,
    )
    s2 = Stage2Config.for_precision(
        precision,
        shuffle=args.shuffle if shuffle is None else shuffle,
        coder=Coder.DEFLATE if args.coder == "deflate" else Coder.NONE,
        level=DeflateLevel.BEST if args.level == "best" else DeflateLevel.DEFAULT,
    )
    job = JobConfig(s1, s2, args.block, args.chunk_blocks, args.workers)
    if isinstance(s1.codec, WaveletCodec):
        s1.plan(args.block)
    return job


def _load(args) -> ScalarField3D:
    nx, ny, nz = args.dims
    return ingest_raw(args.input, nx, ny, nz, args.precision)


# --------------------------------------------------------------------------
# subcommands

def cmd_compress(args) -> int:
    check_block_size(args.block, args.dims)
    job = _job(args)
    field = _load(args)
    data, report = compress_field(field, job)
    with open(args.output, "wb") as fh:
        fh.write(data)
    _emit([
        ("cr", report.cr), ("raw_bytes", report.raw_bytes), ("file_bytes", report.file_bytes),
        ("stage1_bytes", report.stage1_bytes), ("shuffled_bytes", report.shuffled_bytes),
        ("coded_bytes", report.coded_bytes), ("nchunks", report.nchunks),
        ("wall_time", report.wall_time),
    ])
    return 0


def cmd_decompress(args) -> int:
    if args.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {args.workers}")
    t0 = time.perf_counter()
    with ContainerReader(args.input) as reader:
        field = decompress_field(reader, args.workers)
    write_raw(field, args.output)
    nx, ny, nz = field.dims
    _emit([("nx", nx), ("ny", ny), ("nz", nz), ("precision", field.precision.value),
           ("bytes", field.nbytes), ("wall_time", time.perf_counter() - t0)])
    return 0


def cmd_block(args) -> int:
    with ContainerReader(args.input) as reader:
        block = decompress_block(reader, args.id, ChunkCache(1))
        h = reader.header
        b = h.block_size
        bx, rest = args.id % (h.nx // b), args.id // (h.nx // b)
        by, bz = rest % (h.ny // b), rest // (h.ny // b)
    if args.output:
        write_raw(ScalarField3D(block), args.output)
    _emit([
        ("block_id", args.id), ("bx", bx), ("by", by), ("bz", bz), ("size", b),
        ("min", float(block.min())), ("max", float(block.max())),
        ("mean", float(block.mean(dtype=np.float64))),
    ])
    return 0


def _is_container(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def cmd_stats(args) -> int:
    nx, ny, nz = args.dims
    ref = ingest_raw(args.reference, nx, ny, nz, args.precision)
    file_bytes = None
    if _is_container(args.test):
        with ContainerReader(args.test) as reader:
            test = decompress_field(reader)
            file_bytes = reader.file_size
    else:
        test = ingest_raw(args.test, nx, ny, nz, args.precision)
    report = QualityReport.compare(ref, test, ref.nbytes, file_bytes)
    for line in report.lines():
        print(line)
    return 0


def sweep_rows(field: ScalarField3D, args) -> list[dict]:
    rows = []
    wavelets = args.wavelets or [args.wavelet]
    for codec in args.codecs:
        variants = (
            itertools.product(args.eps_list, wavelets, args.shuffle_list, args.zero_bits_list)
            if codec == "wavelet"
            else itertools.product(args.eps_list if codec == "predictor" else [0.0],
                                   [None], args.shuffle_list, [0])
        )
        for eps, kind, shuffle, zero_bits in variants:
            job = _job(args, codec=codec, eps=eps, shuffle=shuffle, zero_bits=zero_bits, kind=kind)
            t0 = time.perf_counter()
            data, report = compress_field(field, job)
            t1 = time.perf_counter()
            decoded = decompress_field(data, args.workers)
            t2 = time.perf_counter()
            q = QualityReport.compare(field, decoded)
            rows.append({
                "epsilon": float(eps), "codec": codec, "wavelet": kind.label if kind else "",
                "shuffle": int(shuffle), "zero_bits": zero_bits, "cr": report.cr,
                "psnr_db": q.psnr_db, "linf": q.linf,
                "encode_s": 0.0 if args.no_timing else t1 - t0,
                "decode_s": 0.0 if args.no_timing else t2 - t1,
                "stage1_bytes": report.stage1_bytes, "shuffled_bytes": report.shuffled_bytes,
                "coded_bytes": report.coded_bytes,
            })
    return rows


def _csv_value(v):
    if isinstance(v, float):
        return format_db(v)
    return v


def cmd_sweep(args) -> int:
    check_block_size(args.block, args.dims)
    for codec in args.codecs:  # validate every configuration before any work
        for eps in args.eps_list:
            for zb in args.zero_bits_list:
                _job(args, codec=codec, eps=eps if codec != "passthrough" else 0.0, zero_bits=zb)
    field = _load(args)
    rows = sweep_rows(field, args)
    out = open(args.out_csv, "w", newline="") if args.out_csv else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_csv_value(row[c]) for c in SWEEP_COLUMNS])
    finally:
        if out is not sys.stdout:
            out.close()
    if args.out_csv:
        _emit([("rows", len(rows)), ("csv", args.out_csv)])
    return 0


def cmd_gen(args) -> int:
    n = args.n
    if args.kind == "poly":
        field = synth.generate_poly(args.degree, (n, n, n), args.cell_average, args.precision)
    elif args.kind == "noise":
        field = synth.noise_field(n, args.seed, args.precision)
    else:
        levels = (16.0, 11.0) if args.kind == "pressure" else (0.0, 1.0)
        spec = synth.CloudSpec(
            seed=args.seed, n=n, n_bubbles=args.bubbles,
            radius_mu=args.radius_mu, radius_sigma=args.radius_sigma,
            cloud_radius=args.cloud_radius,
            background=levels[0] if args.background is None else args.background,
            interior=levels[1] if args.interior is None else args.interior,
            sharpness=args.sharpness, precision=args.precision,
        )
        field = synth.generate_cloud(spec)
    write_raw(field, args.output)
    lo, hi = field.value_range
    _emit([("nx", n), ("ny", n), ("nz", n), ("precision", field.precision.value),
           ("min", lo), ("max", hi), ("bytes", field.nbytes)])
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockcomp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a raw field into a container")
    p.add_argument("input")
    p.add_argument("output")
    _add_field_flags(p)
    _add_codec_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="expand a container back to a raw field")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("block", help="decode a single block")
    p.add_argument("input")
    p.add_argument("--id", type=int, required=True)
    p.add_argument("--out", dest="output", default=None, help="also write the block as raw data")
    p.set_defaults(func=cmd_block)

    p = sub.add_parser("stats", help="compare a raw field with a raw field or container")
    p.add_argument("reference")
    p.add_argument("test")
    _add_field_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="tolerance sweep to CSV")
    p.add_argument("input")
    _add_field_flags(p)
    _add_codec_flags(p)
    p.add_argument("--eps-list", type=_float_list, default=[1e-4, 1e-3, 1e-2])
    p.add_argument("--codecs", type=lambda s: s.split(","), default=["wavelet"])
    p.add_argument("--wavelets", type=lambda s: [_wavelet(x) for x in s.split(",")], default=None)
    p.add_argument("--shuffle-list", type=lambda s: [bool(int(x)) for x in s.split(",")], default=None,
                   help="e.g. 1,0 (default: the --shuffle setting)")
    p.add_argument("--zero-bits-list", type=_int_list, default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--no-timing", action="store_true", help="write 0 in the timing columns")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a synthetic field as raw data")
    p.add_argument("output")
    p.add_argument("--kind", choices=("cloud", "pressure", "noise", "poly"), default="cloud")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bubbles", type=int, default=70)
    p.add_argument("--radius-mu", type=float, default=None)
    p.add_argument("--radius-sigma", type=float, default=0.3)
    p.add_argument("--cloud-radius", type=float, default=None)
    p.add_argument("--background", type=float, default=None)
    p.add_argument("--interior", type=float, default=None)
    p.add_argument("--sharpness", type=float, default=0.25)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--cell-average", action="store_true")
    p.add_argument("--precision", type=_precision, default=Precision.BINARY32)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep":
        for c in args.codecs:
            if c not in ("wavelet", "predictor", "passthrough"):
                parser.error(f"unknown codec {c!r}")
        if args.shuffle_list is None:
            args.shuffle_list = [args.shuffle]
        if args.zero_bits_list is None:
            args.zero_bits_list = [args.zero_bits]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"blockcomp: error: {exc}", file=sys.stderr)
        return EXIT_FLAGS
    except OSError as exc:
        print(f"blockcomp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except BlockCompError as exc:
        print(f"blockcomp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
