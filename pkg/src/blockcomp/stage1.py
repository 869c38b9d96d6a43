"""Per-block lossy encoders (first compression substage).

Every block becomes one self-delimiting payload::

    [block_id u32][codec u8][flags u8][nsig u32][mask][stream][residual]

all little-endian.  ``mask`` (wavelet codec only) holds ceil(B^3/8) bytes, one
bit per coefficient in linear x-fastest order, least significant bit first.
``stream`` holds the kept coefficients (wavelet), B^3 int16 quantisation codes
followed by ``nsig`` raw outlier values (predictor), or the raw block
(passthrough).  ``flags`` bit 0 marks an appended residual of B^3 words that
is XORed onto the reconstruction; the wavelet codec emits it only in its
lossless configuration (``epsilon == 0`` and ``zero_bits == 0``) and only for
blocks whose plain reconstruction is not already exact.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _lorenzo
from ._wide import Wide
from .errors import ConfigError, CorruptPayload, MaskStreamMismatch
from .grid import Precision
from .wavelet import WaveletKind, WaveletPlan, forward_3d, inverse_3d

_HEAD = struct.Struct("<IBBI")
FLAG_RESIDUAL = 0x01


class CodecTag(enum.IntEnum):
    PASSTHROUGH = 0
    WAVELET = 1
    PREDICTOR = 2


@dataclass(frozen=True)
class WaveletCodec:
    kind: WaveletKind = WaveletKind.AVG_INTERP3
    epsilon: float = 1e-3
    zero_bits: int = 0

    tag = CodecTag.WAVELET

    @property
    def lossless(self) -> bool:
        return self.epsilon == 0 and self.zero_bits == 0


@dataclass(frozen=True)
class PredictorCodec:
    error_bound: float = 1e-3

    tag = CodecTag.PREDICTOR


@dataclass(frozen=True)
class Passthrough:
    tag = CodecTag.PASSTHROUGH


@dataclass(frozen=True)
class Stage1Config:
    codec: WaveletCodec | PredictorCodec | Passthrough = field(default_factory=WaveletCodec)
    precision: Precision = Precision.BINARY32
    levels: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "precision", Precision(self.precision))
        codec = self.codec
        if isinstance(codec, WaveletCodec):
            if not codec.epsilon >= 0 or not np.isfinite(codec.epsilon):
                raise ConfigError(f"epsilon must be finite and >= 0, got {codec.epsilon}")
            if not 0 <= codec.zero_bits <= self.precision.mantissa_bits:
                raise ConfigError(
                    f"zero_bits must be in 0..{self.precision.mantissa_bits} "
                    f"for {self.precision.value}, got {codec.zero_bits}"
                )
        elif isinstance(codec, PredictorCodec):
            if not codec.error_bound > 0 or not np.isfinite(codec.error_bound):
                raise ConfigError(f"error bound must be finite and > 0, got {codec.error_bound}")
        elif not isinstance(codec, Passthrough):
            raise ConfigError(f"unknown codec {codec!r}")

    def plan(self, block_size: int) -> WaveletPlan:
        return WaveletPlan(self.codec.kind, block_size, self.levels, self.precision)


@dataclass
class Stage1Payload:
    block_id: int
    codec: CodecTag
    nsig: int
    stream: bytes
    mask: bytes = b""
    flags: int = 0
    residual: bytes = b""

    def to_bytes(self) -> bytes:
        return b"".join(
            (_HEAD.pack(self.block_id, self.codec, self.flags, self.nsig),
             self.mask, self.stream, self.residual)
        )

    def __len__(self) -> int:
        return _HEAD.size + len(self.mask) + len(self.stream) + len(self.residual)


def payload_overhead(block_size: int) -> int:
    """Fixed per-block bytes beyond the values themselves (header + mask)."""
    return _HEAD.size + -(-block_size**3 // 8)


# --------------------------------------------------------------------------
# bit-level helpers

def zero_lsbs(values, k: int):
    """Clear the ``k`` least significant mantissa bits of binary32/64 values."""
    arr = np.asarray(values)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float64)
    prec = Precision.of(arr.dtype)
    if not 0 <= k <= prec.mantissa_bits:
        raise ConfigError(f"cannot zero {k} bits of a {prec.value} mantissa")
    if k == 0:
        return arr.copy() if arr.ndim else arr[()]
    keep = ~np.array((1 << k) - 1, dtype=prec.uint.newbyteorder("="))
    out = (arr.view(keep.dtype) & keep).view(arr.dtype)
    return out if out.ndim else out[()]


def significance(coeffs, epsilon: float, always=None):
    """Threshold kernel: keep values with ``|c| >= epsilon`` (plus ``always``).

    Returns the boolean mask and the kept values in linear order.
    """
    coeffs = np.asarray(coeffs)
    keep = np.abs(coeffs) >= epsilon
    if always is not None:
        keep |= always
    return keep, coeffs[keep]


def _coarse_mask(plan: WaveletPlan) -> np.ndarray:
    b, c = plan.block_size, plan.coarse_size
    m = np.zeros((b, b, b), dtype=bool)
    m[:c, :c, :c] = True
    return m


def _uint_view(a: np.ndarray) -> np.ndarray:
    return a.view(Precision.of(a.dtype).uint.newbyteorder("="))


# --------------------------------------------------------------------------
# batch encoders; blocks has shape (n, B, B, B)

def _wavelet_reconstruct(dense: np.ndarray, plan: WaveletPlan) -> np.ndarray:
    if plan.precision is Precision.BINARY64:
        return inverse_3d(Wide(dense.astype(np.float64)), plan)
    return inverse_3d(dense.astype(np.float64), plan)


def _encode_wavelet(blocks, first_id, cfg: Stage1Config) -> list[Stage1Payload]:
    codec = cfg.codec
    dtype = cfg.precision.dtype
    plan = cfg.plan(blocks.shape[-1])
    coeffs = np.asarray(forward_3d(blocks, plan))
    stored = coeffs.astype(dtype)
    coarse = _coarse_mask(plan)
    if codec.zero_bits:
        stored = np.where(coarse, stored, zero_lsbs(stored, codec.zero_bits))
    keep, _ = significance(stored, codec.epsilon, coarse)

    residuals = [b""] * len(blocks)
    if codec.lossless:
        recon = _wavelet_reconstruct(np.where(keep, stored, 0), plan)
        diff = _uint_view(np.ascontiguousarray(blocks, dtype=dtype)) ^ _uint_view(recon)
        for i in np.flatnonzero(diff.reshape(len(blocks), -1).any(axis=1)):
            residuals[i] = diff[i].astype(diff.dtype.newbyteorder("<")).tobytes()

    flat_keep = keep.reshape(len(blocks), -1)
    masks = np.packbits(flat_keep, axis=1, bitorder="little")
    flat_stored = stored.reshape(len(blocks), -1).astype(dtype.newbyteorder("<"))
    out = []
    for i in range(len(blocks)):
        kept = flat_stored[i][flat_keep[i]]
        out.append(Stage1Payload(
            first_id + i, CodecTag.WAVELET, len(kept), kept.tobytes(),
            mask=masks[i].tobytes(),
            flags=FLAG_RESIDUAL if residuals[i] else 0,
            residual=residuals[i],
        ))
    return out


def _encode_predictor(blocks, first_id, cfg: Stage1Config) -> list[Stage1Payload]:
    bound = float(cfg.codec.error_bound)
    dtype = cfg.precision.dtype
    shape = blocks.shape[1:]
    out = []
    for i, block in enumerate(blocks):
        block = np.ascontiguousarray(block, dtype=dtype.newbyteorder("="))
        codes = np.empty(shape, dtype=np.int16)
        outliers = np.empty(block.size, dtype=block.dtype)
        dec = np.zeros(shape, dtype=block.dtype)
        n = _lorenzo.encode(block, bound, codes, outliers, dec)
        stream = codes.astype("<i2").tobytes() + outliers[:n].astype(dtype.newbyteorder("<")).tobytes()
        out.append(Stage1Payload(first_id + i, CodecTag.PREDICTOR, n, stream))
    return out


def _encode_passthrough(blocks, first_id, cfg: Stage1Config) -> list[Stage1Payload]:
    le = blocks.astype(cfg.precision.dtype.newbyteorder("<"))
    n = blocks[0].size
    return [Stage1Payload(first_id + i, CodecTag.PASSTHROUGH, n, le[i].tobytes())
            for i in range(len(blocks))]


def encode_blocks(blocks, first_id: int, cfg: Stage1Config) -> list[Stage1Payload]:
    blocks = np.asarray(blocks)
    if blocks.ndim == 3:
        blocks = blocks[None]
    if blocks.dtype != cfg.precision.dtype:
        blocks = blocks.astype(cfg.precision.dtype)
    codec = cfg.codec
    if isinstance(codec, WaveletCodec):
        return _encode_wavelet(blocks, first_id, cfg)
    if isinstance(codec, PredictorCodec):
        return _encode_predictor(blocks, first_id, cfg)
    return _encode_passthrough(blocks, first_id, cfg)


# --------------------------------------------------------------------------
# parsing and decoding

def parse_payload(buf, offset: int, cfg: Stage1Config, block_size: int) -> tuple[Stage1Payload, int]:
    """Read one payload starting at ``offset``; returns it and the next offset."""
    view = memoryview(buf)
    if offset + _HEAD.size > len(view):
        raise CorruptPayload("payload header runs past the end of the buffer")
    block_id, tag, flags, nsig = _HEAD.unpack_from(view, offset)
    pos = offset + _HEAD.size
    if tag != cfg.codec.tag:
        raise CorruptPayload(f"block {block_id}: codec tag {tag}, expected {int(cfg.codec.tag)}")
    if flags & ~FLAG_RESIDUAL:
        raise CorruptPayload(f"block {block_id}: unknown flags {flags:#x}")
    n = block_size**3
    width = cfg.precision.itemsize

    def take(nbytes):
        nonlocal pos
        if nbytes < 0 or pos + nbytes > len(view):
            raise CorruptPayload(f"block {block_id}: payload truncated")
        chunk = bytes(view[pos:pos + nbytes])
        pos += nbytes
        return chunk

    mask = b""
    if tag == CodecTag.WAVELET:
        mask = take(-(-n // 8))
        if nsig > n:
            raise MaskStreamMismatch(f"block {block_id}: nsig {nsig} exceeds {n}")
        stream = take(nsig * width)
    elif tag == CodecTag.PREDICTOR:
        if nsig > n:
            raise CorruptPayload(f"block {block_id}: {nsig} outliers for {n} cells")
        stream = take(2 * n + nsig * width)
    else:
        if nsig != n:
            raise CorruptPayload(f"block {block_id}: passthrough length {nsig} != {n}")
        stream = take(n * width)
    residual = take(n * width) if flags & FLAG_RESIDUAL else b""
    return Stage1Payload(block_id, CodecTag(tag), nsig, stream, mask, flags, residual), pos


def parse_payloads(buf, count: int, cfg: Stage1Config, block_size: int, first_id: int = 0):
    payloads, pos = [], 0
    for i in range(count):
        p, pos = parse_payload(buf, pos, cfg, block_size)
        if p.block_id != first_id + i:
            raise CorruptPayload(f"expected block {first_id + i}, found {p.block_id}")
        payloads.append(p)
    if pos != len(buf):
        raise CorruptPayload(f"{len(buf) - pos} trailing bytes after {count} payloads")
    return payloads


def _decode_wavelet(payloads, cfg: Stage1Config, block_size: int) -> np.ndarray:
    plan = cfg.plan(block_size)
    dtype = cfg.precision.dtype
    le = dtype.newbyteorder("<")
    n = block_size**3
    dense = np.zeros((len(payloads), n), dtype=dtype)
    for i, p in enumerate(payloads):
        keep = np.unpackbits(np.frombuffer(p.mask, dtype=np.uint8), count=n, bitorder="little").view(bool)
        if int(keep.sum()) != p.nsig:
            raise MaskStreamMismatch(
                f"block {p.block_id}: mask has {int(keep.sum())} bits set, nsig is {p.nsig}"
            )
        if len(p.stream) != p.nsig * dtype.itemsize:
            raise CorruptPayload(f"block {p.block_id}: stream holds {len(p.stream)} bytes for {p.nsig} values")
        dense[i, keep] = np.frombuffer(p.stream, dtype=le)
    b = block_size
    out = _wavelet_reconstruct(dense.reshape(-1, b, b, b), plan)
    for i, p in enumerate(payloads):
        if p.residual:
            res = np.frombuffer(p.residual, dtype=cfg.precision.uint.newbyteorder("<"))
            bits = _uint_view(out[i]).reshape(-1) ^ res
            out[i] = bits.view(out.dtype).reshape(b, b, b)
    return out


def _decode_predictor(payloads, cfg: Stage1Config, block_size: int) -> np.ndarray:
    b = block_size
    n = b**3
    dtype = cfg.precision.dtype.newbyteorder("=")
    le = cfg.precision.dtype.newbyteorder("<")
    out = np.empty((len(payloads), b, b, b), dtype=dtype)
    bound = float(cfg.codec.error_bound)
    for i, p in enumerate(payloads):
        codes = np.frombuffer(p.stream, dtype="<i2", count=n).astype(np.int16).reshape(b, b, b)
        outliers = np.frombuffer(p.stream, dtype=le, offset=2 * n).astype(dtype)
        used = _lorenzo.decode(codes, outliers, bound, out[i])
        if used != p.nsig:
            raise CorruptPayload(f"block {p.block_id}: escape codes do not match {p.nsig} outliers")
    return out


def decode_payloads(payloads, cfg: Stage1Config, block_size: int) -> np.ndarray:
    """Decode a list of payloads of one codec into an (n, B, B, B) array."""
    if not payloads:
        b = block_size
        return np.empty((0, b, b, b), dtype=cfg.precision.dtype)
    codec = cfg.codec
    if isinstance(codec, WaveletCodec):
        return _decode_wavelet(payloads, cfg, block_size)
    if isinstance(codec, PredictorCodec):
        return _decode_predictor(payloads, cfg, block_size)
    b = block_size
    le = cfg.precision.dtype.newbyteorder("<")
    return np.stack([np.frombuffer(p.stream, dtype=le).reshape(b, b, b) for p in payloads]).astype(
        cfg.precision.dtype.newbyteorder("=")
    )


def decode_blocks(buf, count: int, cfg: Stage1Config, block_size: int, first_id: int = 0) -> np.ndarray:
    return decode_payloads(parse_payloads(buf, count, cfg, block_size, first_id), cfg, block_size)


# --------------------------------------------------------------------------
# single-block entry points

def _single(block, cfg, block_id, expected):
    if not isinstance(cfg.codec, expected):
        raise ConfigError(f"configuration holds {type(cfg.codec).__name__}, not {expected.__name__}")
    return encode_blocks(np.asarray(block)[None], block_id, cfg)[0]


def wavelet_encode(block, cfg: Stage1Config, block_id: int = 0) -> Stage1Payload:
    return _single(block, cfg, block_id, WaveletCodec)


def wavelet_decode(payload: Stage1Payload, cfg: Stage1Config, block_size: int) -> np.ndarray:
    return decode_payloads([payload], cfg, block_size)[0]


def predictor_encode(block, cfg: Stage1Config, block_id: int = 0) -> Stage1Payload:
    return _single(block, cfg, block_id, PredictorCodec)


def predictor_decode(payload: Stage1Payload, cfg: Stage1Config, block_size: int) -> np.ndarray:
    return decode_payloads([payload], cfg, block_size)[0]


def passthrough_encode(block, cfg: Stage1Config, block_id: int = 0) -> Stage1Payload:
    return _single(block, cfg, block_id, Passthrough)


def passthrough_decode(payload: Stage1Payload, cfg: Stage1Config, block_size: int) -> np.ndarray:
    return decode_payloads([payload], cfg, block_size)[0]
