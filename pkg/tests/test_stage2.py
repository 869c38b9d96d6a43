import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blockcomp.errors import ConfigError, CorruptStream
from blockcomp.grid import Precision
from blockcomp.stage2 import (
    Coder,
    DeflateLevel,
    Stage2Config,
    decode_chunk,
    deflate,
    encode_chunk,
    inflate,
    shuffle,
    unshuffle,
)


def ref_shuffle(buf, stride):
    # independent oracle: explicit index loop
    n = len(buf) // stride
    out = bytearray(buf)
    for i in range(n):
        for j in range(stride):
            out[j * n + i] = buf[i * stride + j]
    return bytes(out)


def test_shuffle_hand_example():
    assert list(shuffle(bytes([44, 33, 22, 11, 88, 77, 66, 55]), 4)) == [44, 88, 33, 77, 22, 66, 11, 55]


def test_shuffle_keeps_tail():
    buf = bytes(range(11))
    out = shuffle(buf, 4)
    assert out[8:] == buf[8:]
    assert out == ref_shuffle(buf, 4)


@given(st.binary(max_size=300), st.sampled_from([1, 4, 8]))
def test_shuffle_matches_oracle_and_inverts(buf, stride):
    s = shuffle(buf, stride)
    assert s == ref_shuffle(buf, stride)
    assert unshuffle(s, stride) == buf


@given(st.binary(max_size=64))
def test_stride_one_identity(buf):
    assert shuffle(buf, 1) == buf == unshuffle(buf, 1)


def test_repeated_byte_compresses():
    buf = b"\x5a" * 2**20
    z = deflate(buf)
    assert len(z) < 0.02 * len(buf)
    assert inflate(z) == buf


def test_empty_stream():
    z = deflate(b"")
    assert len(z) > 0
    assert inflate(z) == b""


@pytest.mark.parametrize("level", list(DeflateLevel))
def test_random_bytes_bounded_expansion(level):
    buf = os.urandom(300_000)
    z = deflate(buf, level)
    assert len(z) <= len(buf) + 5 * (-(-len(buf) // 65536)) + 16
    assert inflate(z) == buf


@given(st.binary(max_size=5000), st.sampled_from(list(DeflateLevel)))
def test_deflate_roundtrip(buf, level):
    assert inflate(deflate(buf, level)) == buf


def test_best_not_worse_on_structured_data():
    buf = np.arange(200_000, dtype="<u4").tobytes()
    assert len(deflate(buf, DeflateLevel.BEST)) <= len(deflate(buf, DeflateLevel.DEFAULT))


def test_raw_stream_has_no_zlib_header():
    import zlib
    z = deflate(b"hello hello hello")
    assert zlib.decompressobj(-15).decompress(z) == b"hello hello hello"
    with pytest.raises(zlib.error):
        zlib.decompress(z)


@pytest.mark.parametrize("bad", [b"\xff\xff\xff", b"", b"\x00\x01"])
def test_inflate_rejects_garbage(bad):
    with pytest.raises(CorruptStream):
        inflate(bad)


def test_inflate_rejects_trailing_and_truncated():
    z = deflate(b"abc" * 100)
    with pytest.raises(CorruptStream):
        inflate(z + b"x")
    with pytest.raises(CorruptStream):
        inflate(z[:-2])


@pytest.mark.parametrize("shuffle_, stride", [(True, 1), (False, 4), (True, 3)])
def test_config_invariants(shuffle_, stride):
    with pytest.raises(ConfigError):
        Stage2Config(shuffle_, stride)


def test_for_precision():
    assert Stage2Config.for_precision(Precision.BINARY64).stride == 8
    assert Stage2Config.for_precision(Precision.BINARY32, shuffle=False).stride == 1


@given(st.binary(max_size=2000), st.booleans(), st.sampled_from(list(Coder)))
def test_chunk_roundtrip(buf, shuf, coder):
    cfg = Stage2Config(shuf, 4 if shuf else 1, coder)
    shuffled, coded = encode_chunk(buf, cfg)
    assert len(shuffled) == len(buf)
    assert decode_chunk(coded, cfg) == buf


@pytest.mark.parametrize("n", [0, 1, 65535, 65536, 140_000])
def test_stored_blocks_are_valid_deflate(n):
    import zlib
    from blockcomp.stage2 import stored_blocks
    buf = os.urandom(n)
    z = stored_blocks(buf)
    assert len(z) == n + 5 * max(1, -(-n // 65535))
    assert zlib.decompressobj(-15).decompress(z) == buf
    assert inflate(z) == buf
