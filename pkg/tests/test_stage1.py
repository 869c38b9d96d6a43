import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blockcomp import _lorenzo
from blockcomp.errors import ConfigError, CorruptPayload, MaskStreamMismatch
from blockcomp.grid import Precision
from blockcomp.stage1 import (
    FLAG_RESIDUAL,
    CodecTag,
    Passthrough,
    PredictorCodec,
    Stage1Config,
    Stage1Payload,
    WaveletCodec,
    decode_blocks,
    encode_blocks,
    parse_payload,
    passthrough_decode,
    passthrough_encode,
    payload_overhead,
    predictor_decode,
    predictor_encode,
    significance,
    wavelet_decode,
    wavelet_encode,
    zero_lsbs,
)
from blockcomp.synth import CloudSpec, generate_cloud
from blockcomp.wavelet import WaveletKind

KINDS = list(WaveletKind)


def wcfg(kind=WaveletKind.AVG_INTERP3, eps=1e-3, zb=0, prec=Precision.BINARY32, levels=None):
    return Stage1Config(WaveletCodec(kind, eps, zb), prec, levels)


def smooth_block(b=16, dtype=np.float32):
    z, y, x = np.meshgrid(*[np.linspace(0, 1, b)] * 3, indexing="ij")
    return (np.sin(3 * x) * np.cos(2 * y) + 0.5 * z**2).astype(dtype)


# -- threshold kernel and bit zeroing ------------------------------------------

def test_threshold_kernel_example():
    mask, kept = significance(np.array([0.5, 1e-5, -2.0, 0.0]), 1e-3)
    assert mask.tolist() == [True, False, True, False]
    assert kept.tolist() == [0.5, -2.0]
    # on the wire: least significant bit first
    assert np.packbits(mask, bitorder="little").tolist() == [0b0101]


def test_zero_lsbs_hand_pattern():
    v = np.array([0x3F8000FF], dtype="<u4").view("<f4")
    out = zero_lsbs(v, 8)
    assert out.view("<u4")[0] == 0x3F800000
    assert out[0] == 1.0


def test_zero_lsbs_identity_cases():
    assert zero_lsbs(np.float32(1.0), 8) == 1.0
    x = np.array([1.2345678, -3.3], np.float32)
    assert zero_lsbs(x, 0).tobytes() == x.tobytes()


@given(
    st.floats(allow_nan=False, allow_infinity=False, width=32),
    st.integers(0, 23),
)
def test_zero_lsbs_properties_binary32(x, k):
    v = np.float32(x)
    out = zero_lsbs(v, k)
    assert zero_lsbs(out, k) == out  # idempotent
    assert abs(float(out)) <= abs(float(v))  # truncates toward zero
    assert abs(float(out) - float(v)) <= 2.0**k * float(np.spacing(np.abs(v)))
    bits = np.array(out, np.float32).view(np.uint32)
    assert bits & np.uint32((1 << k) - 1) == 0


@given(st.floats(allow_nan=False, allow_infinity=False), st.integers(0, 52))
def test_zero_lsbs_binary64(x, k):
    out = zero_lsbs(np.float64(x), k)
    assert np.array(out).view(np.uint64) & np.uint64((1 << k) - 1) == 0
    assert zero_lsbs(out, k) == out


def test_zero_lsbs_range_checked():
    with pytest.raises(ConfigError):
        zero_lsbs(np.float32(1), 24)


def test_config_validation():
    with pytest.raises(ConfigError):
        wcfg(eps=-1e-3)
    with pytest.raises(ConfigError):
        wcfg(zb=24)
    wcfg(zb=52, prec=Precision.BINARY64)
    with pytest.raises(ConfigError):
        Stage1Config(PredictorCodec(0.0))
    with pytest.raises(ConfigError):
        Stage1Config(PredictorCodec(float("nan")))


# -- wavelet codec ---------------------------------------------------------------

@pytest.mark.parametrize("kind", KINDS)
def test_constant_block_keeps_coarse_corner(kind):
    p = wavelet_encode(np.full((16, 16, 16), 7.0, np.float32), wcfg(kind))
    assert p.nsig == 8
    assert sum(bin(b).count("1") for b in p.mask) == 8
    assert p.flags == 0
    assert np.all(wavelet_decode(p, wcfg(kind), 16) == 7.0)


def test_wire_layout():
    cfg = wcfg()
    p = wavelet_encode(smooth_block(), cfg, block_id=42)
    raw = p.to_bytes()
    assert len(raw) == len(p) == 10 + 16**3 // 8 + 4 * p.nsig
    assert struct.unpack_from("<IBBI", raw) == (42, CodecTag.WAVELET, 0, p.nsig)
    assert payload_overhead(16) == 10 + 512
    q, end = parse_payload(raw, 0, cfg, 16)
    assert end == len(raw) and q == p


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("prec", list(Precision))
def test_lossless_configuration_is_bit_exact(kind, prec, rng):
    cfg = wcfg(kind, 0.0, 0, prec)
    blocks = (rng.standard_normal((3, 16, 16, 16)) * 1e3).astype(prec.dtype)
    blocks[1] = 1.0  # constant block needs no residual
    ps = encode_blocks(blocks, 0, cfg)
    assert all(p.nsig == 16**3 for p in ps)
    assert ps[1].flags == 0
    buf = b"".join(p.to_bytes() for p in ps)
    out = decode_blocks(buf, 3, cfg, 16)
    assert out.tobytes() == blocks.tobytes()


def test_residual_flag_marks_appended_words(rng):
    cfg = wcfg(WaveletKind.INTERP4_LIFTED, 0.0)
    block = rng.standard_normal((8, 8, 8)).astype(np.float32)
    p = wavelet_encode(block, cfg)
    if p.flags & FLAG_RESIDUAL:
        assert len(p.residual) == 8**3 * 4
    assert wavelet_decode(p, cfg, 8).tobytes() == block.tobytes()


# Open-loop thresholding has no (L+1)*eps guarantee in 3D; these cases exceed
# it deterministically (see the decisions ledger) and stay strict.
_ENVELOPE_MISSES = {
    (WaveletKind.INTERP4, 1e-3), (WaveletKind.INTERP4, 1e-2),
    (WaveletKind.INTERP4_LIFTED, 1e-2), (WaveletKind.AVG_INTERP3, 1e-4),
}


@pytest.mark.parametrize("kind,eps", [
    pytest.param(k, e, marks=pytest.mark.xfail(strict=True, reason="exceeds (L+1)*eps"))
    if (k, e) in _ENVELOPE_MISSES else (k, e)
    for k in KINDS for e in (1e-4, 1e-3, 1e-2)
])
def test_lossy_error_within_envelope_on_smooth_block(kind, eps):
    block = smooth_block(32)
    cfg = wcfg(kind, eps)
    out = wavelet_decode(wavelet_encode(block, cfg), cfg, 32)
    err = np.abs(out.astype(np.float64) - block).max()
    assert err <= (cfg.plan(32).levels + 1) * eps


def test_single_level_interp4_error_is_below_epsilon(rng):
    # one level, interpolating: a dropped detail only moves its own odd sample
    from blockcomp.wavelet import forward_1d, inverse_1d
    x = np.cumsum(rng.standard_normal(64)) * 1e-3
    c = np.asarray(forward_1d(x, WaveletKind.INTERP4)).copy()
    eps = 5e-4
    c[32:][np.abs(c[32:]) < eps] = 0
    assert np.abs(inverse_1d(c, WaveletKind.INTERP4) - x).max() < eps


@given(st.integers(0, 2**32 - 1), st.sampled_from(KINDS))
def test_epsilon_monotone(seed, kind):
    rng = np.random.default_rng(seed)
    block = (smooth_block(8) + 1e-2 * rng.standard_normal((8, 8, 8))).astype(np.float32)
    nsig, mse = [], []
    for eps in (1e-4, 1e-3, 1e-2, 1e-1):
        cfg = wcfg(kind, eps)
        p = wavelet_encode(block, cfg)
        nsig.append(p.nsig)
        mse.append(np.mean((wavelet_decode(p, cfg, 8).astype(np.float64) - block) ** 2))
    assert nsig == sorted(nsig, reverse=True)
    assert mse == sorted(mse)


def test_zero_bits_only_shrink_stream(rng):
    block = smooth_block(16) + rng.standard_normal((16, 16, 16)).astype(np.float32) * 1e-2
    ps = [wavelet_encode(block, wcfg(zb=k)) for k in (0, 4, 8, 16)]
    nsig = [p.nsig for p in ps]
    assert nsig == sorted(nsig, reverse=True)
    assert nsig[0] - nsig[1] <= 2  # only coefficients sitting at the threshold can drop
    kept = np.frombuffer(ps[2].stream, "<f4")
    mask = np.unpackbits(np.frombuffer(ps[2].mask, np.uint8), bitorder="little").astype(bool)
    coarse = np.zeros((16, 16, 16), bool)
    coarse[:2, :2, :2] = True
    detail_vals = kept[~coarse.ravel()[mask]]
    assert np.all(detail_vals.view("<u4") & 0xFF == 0)


def test_mask_popcount_mismatch():
    cfg = wcfg()
    p = wavelet_encode(smooth_block(), cfg)
    bad = Stage1Payload(p.block_id, p.codec, p.nsig - 1, p.stream[:-4], p.mask)
    with pytest.raises(MaskStreamMismatch):
        wavelet_decode(bad, cfg, 16)


def test_parse_rejects_damage():
    cfg = wcfg()
    raw = wavelet_encode(smooth_block(), cfg).to_bytes()
    with pytest.raises(CorruptPayload):
        parse_payload(raw[:-1], 0, cfg, 16)
    with pytest.raises(CorruptPayload):
        parse_payload(raw[:5], 0, cfg, 16)
    tag = bytearray(raw)
    tag[4] = CodecTag.PREDICTOR
    with pytest.raises(CorruptPayload):
        parse_payload(bytes(tag), 0, cfg, 16)
    flags = bytearray(raw)
    flags[5] = 0x80
    with pytest.raises(CorruptPayload):
        parse_payload(bytes(flags), 0, cfg, 16)
    with pytest.raises(CorruptPayload):
        decode_blocks(raw + b"\0", 1, cfg, 16)


def test_mask_with_extra_bit_is_detected():
    cfg = wcfg()
    p = wavelet_encode(smooth_block(), cfg)
    mask = bytearray(p.mask)
    i = next(j for j, b in enumerate(mask) if b != 0xFF)
    mask[i] |= (~mask[i]) & -(~mask[i]) & 0xFF  # set the lowest clear bit
    with pytest.raises(MaskStreamMismatch):
        wavelet_decode(Stage1Payload(0, p.codec, p.nsig, p.stream, bytes(mask)), cfg, 16)


def test_block_locality():
    # the same block inside different neighbourhoods encodes identically
    a = generate_cloud(CloudSpec(n=32, n_bubbles=8, seed=1)).data.copy()
    b = np.random.default_rng(0).random((32, 32, 32)).astype(np.float32)
    b[:16, :16, :16] = a[:16, :16, :16]
    from blockcomp.grid import split_blocks
    cfg = wcfg()
    pa = encode_blocks(split_blocks(a, 16)[:1], 0, cfg)[0]
    pb = encode_blocks(split_blocks(b, 16)[:1], 0, cfg)[0]
    assert pa.to_bytes() == pb.to_bytes()


# -- predictor codec -------------------------------------------------------------

def pcfg(e, prec=Precision.BINARY32):
    return Stage1Config(PredictorCodec(e), prec)


def test_predictor_constant_block():
    cfg = pcfg(1e-6)
    p = predictor_encode(np.full((8, 8, 8), 5.0, np.float32), cfg)
    codes = np.frombuffer(p.stream, "<i2", count=512)
    assert p.nsig == 1
    assert codes[0] == _lorenzo.ESCAPE
    assert not codes[1:].any()
    assert np.all(predictor_decode(p, cfg, 8) == 5.0)


def lorenzo_residuals(f):
    # longhand oracle: zero-padded 7-term inclusion-exclusion
    g = np.pad(f, ((1, 0), (1, 0), (1, 0)))
    pred = (g[1:, 1:, :-1] + g[1:, :-1, 1:] + g[:-1, 1:, 1:]
            - g[1:, :-1, :-1] - g[:-1, 1:, :-1] - g[:-1, :-1, 1:] + g[:-1, :-1, :-1])
    return f - pred


def test_predictor_linear_ramp():
    z, y, x = np.meshgrid(*[np.arange(8.0)] * 3, indexing="ij")
    block = (x + 2 * y + 3 * z + 1).astype(np.float64)
    p = predictor_encode(block, pcfg(0.5, Precision.BINARY64))  # bin width 1: exact
    codes = np.frombuffer(p.stream, "<i2", count=512).reshape(8, 8, 8)
    expected = lorenzo_residuals(block)
    np.testing.assert_array_equal(codes, expected)
    seeds = (x > 0).astype(int) + (y > 0) + (z > 0) <= 1
    assert not codes[~seeds].any()
    assert predictor_decode(p, pcfg(0.5, Precision.BINARY64), 8).tobytes() == block.tobytes()


@pytest.mark.parametrize("prec", list(Precision))
def test_predictor_random_block_bound(prec, rng):
    block = rng.standard_normal((16, 16, 16)).astype(prec.dtype)
    cfg = pcfg(1e-4, prec)
    out = predictor_decode(predictor_encode(block, cfg), cfg, 16)
    assert np.abs(out.astype(np.float64) - block).max() <= 1e-4


@given(
    st.integers(0, 2**32 - 1),
    st.floats(1e-7, 1.0),
    st.sampled_from(list(Precision)),
    st.sampled_from(["normal", "wild", "steps"]),
)
def test_predictor_bound_adversarial(seed, e, prec, kind):
    rng = np.random.default_rng(seed)
    if kind == "normal":
        block = rng.standard_normal((8, 8, 8))
    elif kind == "wild":
        block = rng.standard_normal((8, 8, 8)) * 10.0 ** rng.integers(-8, 9, (8, 8, 8))
    else:
        block = np.round(rng.standard_normal((8, 8, 8))) * e * rng.integers(1, 70000)
    block = block.astype(prec.dtype)
    cfg = pcfg(e, prec)
    out = predictor_decode(predictor_encode(block, cfg), cfg, 8)
    assert np.abs(out.astype(np.float64) - block.astype(np.float64)).max() <= e


def test_predictor_outlier_count_checked():
    cfg = pcfg(1e-6)
    p = predictor_encode(np.full((4, 4, 4), 5.0, np.float32), cfg)
    bad = Stage1Payload(0, p.codec, 0, p.stream[:128])
    with pytest.raises(CorruptPayload):
        predictor_decode(bad, cfg, 4)


# -- passthrough -------------------------------------------------------------------

@pytest.mark.parametrize("prec", list(Precision))
def test_passthrough_identity(prec, rng):
    cfg = Stage1Config(Passthrough(), prec)
    for block in (rng.standard_normal((8, 8, 8)).astype(prec.dtype), np.full((8, 8, 8), 3, prec.dtype)):
        p = passthrough_encode(block, cfg)
        assert p.stream == block.astype(prec.dtype.newbyteorder("<")).tobytes()
        assert passthrough_decode(p, cfg, 8).tobytes() == block.tobytes()


def test_single_block_entry_points_check_codec():
    with pytest.raises(ConfigError):
        wavelet_encode(np.zeros((4, 4, 4), np.float32), pcfg(1e-3))
