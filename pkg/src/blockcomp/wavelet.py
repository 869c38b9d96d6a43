"""Interval wavelets on a single cubic block, computed by lifting.

Three kinds are provided:

``INTERP4``
    Deslauriers-Dubuc 4-point interpolating wavelet (predict only).  Details
    vanish for cubic data.
``INTERP4_LIFTED``
    The same predictor followed by the update ``s_i += (d_{i-1} + d_i) / 4``.
``AVG_INTERP3``
    Third order average-interpolating wavelet on cell averages.  Coarse
    values are pair means; details vanish for quadratic cell averages.

Near the ends of the interval the stencils are shifted inwards so that no
sample outside the block is ever referenced; polynomial order is kept.

Transforms run one precision above the data: binary32 blocks are lifted in
binary64 and binary64 blocks in double-double (see :mod:`._wide`).  Rounding
the reconstruction back to the data precision then absorbs the lifting
round-off, which is what makes ``inverse_3d(forward_3d(b))`` bit-exact for
blocks of reasonable dynamic range.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _lift, _wide
from ._wide import Wide
from .errors import LengthTooSmall, PlanMismatch
from .grid import Precision, is_power_of_two


class WaveletKind(enum.IntEnum):
    INTERP4 = 1
    INTERP4_LIFTED = 2
    AVG_INTERP3 = 3

    @property
    def label(self) -> str:
        return {1: "interp4", 2: "interp4-lifted", 3: "avg-interp3"}[self.value]

    @classmethod
    def parse(cls, text: str) -> "WaveletKind":
        for kind in cls:
            if text in (kind.label, kind.name.lower()):
                return kind
        raise ValueError(f"unknown wavelet kind {text!r}")


def default_levels(block_size: int) -> int:
    return block_size.bit_length() - 2  # log2(B) - 1


@dataclass(frozen=True)
class WaveletPlan:
    kind: WaveletKind
    block_size: int
    levels: int | None = None
    precision: Precision = field(default=Precision.BINARY32)

    def __post_init__(self):
        b = self.block_size
        if not is_power_of_two(b) or b < 4:
            raise PlanMismatch(f"wavelet block size must be a power of 2 >= 4, got {b}")
        levels = default_levels(b) if self.levels is None else int(self.levels)
        if levels < 1 or (1 << levels) > b // 2:
            raise PlanMismatch(f"{levels} levels do not fit a block of side {b}")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "kind", WaveletKind(self.kind))
        object.__setattr__(self, "precision", Precision(self.precision))

    @property
    def coarse_size(self) -> int:
        """Side of the scaling-coefficient sub-cube left after all levels."""
        return self.block_size >> self.levels


# --------------------------------------------------------------------------
# stencil tables

@dataclass(frozen=True)
class _Segment:
    start: int  # first output index
    stop: int
    offset: int  # input index of the first tap, relative to the output index
    weights: tuple[float, ...]


def _lagrange(nodes, x) -> list[Fraction]:
    out = []
    for j, tj in enumerate(nodes):
        w = Fraction(1)
        for k, tk in enumerate(nodes):
            if k != j:
                w *= Fraction(x - tk) / (tj - tk)
        out.append(w)
    return out


def _segments(rows: list[tuple[int, list[Fraction]]]) -> tuple[_Segment, ...]:
    """Group per-output (input_start, weights) rows into runs sharing a stencil."""
    segs: list[_Segment] = []
    for i, (start, weights) in enumerate(rows):
        w = tuple(float(x) for x in weights)
        assert all(float(x) == x for x in weights)  # dyadic, exactly representable
        last = segs[-1] if segs else None
        if last is not None and last.weights == w and last.offset == start - i and last.stop == i:
            segs[-1] = _Segment(last.start, i + 1, last.offset, w)
        else:
            segs.append(_Segment(i, i + 1, start - i, w))
    return tuple(segs)


@lru_cache(maxsize=None)
def interp_predict_table(m: int) -> tuple[_Segment, ...]:
    """Predict odd sample 2i+1 from the m even samples (cubic, shifted at ends)."""
    width = min(4, m)
    rows = []
    for i in range(m):
        start = min(max(i - 1, 0), m - width)
        nodes = list(range(start, start + width))
        rows.append((start, _lagrange(nodes, Fraction(2 * i + 1, 2))))
    return _segments(rows)


@lru_cache(maxsize=None)
def lifted_update_table(m: int) -> tuple[_Segment, ...]:
    """Each detail hands 1/4 to its two neighbouring coarse values; the last
    detail has only one neighbour and hands it 1/2."""
    q = Fraction(1, 4)
    rows = [(0, [q])]
    for i in range(1, m - 1):
        rows.append((i - 1, [q, q]))
    rows.append((m - 2, [q, 2 * q]))
    return _segments(rows)


@lru_cache(maxsize=None)
def avg_predict_table(m: int) -> tuple[_Segment, ...]:
    """Predict the half-difference (x_{2i} - x_{2i+1}) / 2 from m pair means.

    Uses the primitive F (running sum of means): the fine half-difference is
    2 F(i + 1/2) - F(i) - F(i + 1), with F(i + 1/2) interpolated through the
    cell edges of a window of three coarse cells.
    """
    width = min(3, m)
    rows = []
    for i in range(m):
        start = min(max(i - 1, 0), m - width)
        edges = list(range(start, start + width + 1))
        lam = _lagrange(edges, Fraction(2 * i + 1, 2))
        weights = []
        for k in range(width):
            # F at edge j is the sum of means of cells start .. start+j-1
            w = 2 * sum(lam[k + 1:], Fraction(0))
            w -= (k < i - start) + (k < i + 1 - start)
            weights.append(w)
        rows.append((start, weights))
    return _segments(rows)


def _apply(v, table: tuple[_Segment, ...]):
    parts = []
    for seg in table:
        acc = None
        for k, w in enumerate(seg.weights):
            lo = seg.start + seg.offset + k
            term = w * v[..., lo:lo + seg.stop - seg.start]
            acc = term if acc is None else acc + term
        parts.append(acc)
    return _wide.concat(parts) if len(parts) > 1 else parts[0]


# --------------------------------------------------------------------------
# one level along the last axis

def _forward_last(a, kind: WaveletKind):
    n = a.shape[-1]
    m = n // 2
    even, odd = a[..., 0::2], a[..., 1::2]
    if kind is WaveletKind.AVG_INTERP3:
        s = (even + odd) * 0.5
        d = (even - odd) * 0.5 - _apply(s, avg_predict_table(m))
    else:
        d = odd - _apply(even, interp_predict_table(m))
        s = even
        if kind is WaveletKind.INTERP4_LIFTED:
            s = even + _apply(d, lifted_update_table(m))
    return _wide.concat([s, d])


def _inverse_last(c, kind: WaveletKind):
    n = c.shape[-1]
    m = n // 2
    s, d = c[..., :m], c[..., m:]
    if kind is WaveletKind.AVG_INTERP3:
        h = d + _apply(s, avg_predict_table(m))
        even, odd = s + h, s - h
    else:
        even = s
        if kind is WaveletKind.INTERP4_LIFTED:
            even = s - _apply(d, lifted_update_table(m))
        odd = d + _apply(even, interp_predict_table(m))
    out = _wide.empty(c.shape, c)
    out[..., 0::2] = even
    out[..., 1::2] = odd
    return out


def _check_length(n: int) -> None:
    if n < 4 or n % 2:
        raise LengthTooSmall(f"transform length must be even and >= 4, got {n}")


def _working(x: np.ndarray):
    if x.dtype == np.float64:
        return Wide(x.copy())
    return x.astype(np.float64)


def forward_1d(signal, kind: WaveletKind):
    """One lifting level along the last axis: n/2 coarse values, then n/2 details.

    Returns binary64 values for binary32 input and a double-double
    :class:`~blockcomp._wide.Wide` for binary64 input.
    """
    if isinstance(signal, Wide):
        work = signal
    else:
        signal = np.asarray(signal)
        if signal.dtype not in (np.float32, np.float64):
            signal = signal.astype(np.float64)
        work = _working(signal)
    _check_length(work.shape[-1])
    return _forward_last(work, WaveletKind(kind))


def inverse_1d(coeffs, kind: WaveletKind, dtype=None) -> np.ndarray:
    """Undo :func:`forward_1d`.  The result is rounded to ``dtype`` (binary64
    for :class:`Wide` input, otherwise the coefficients' own dtype)."""
    if not isinstance(coeffs, Wide):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if dtype is not None and np.dtype(dtype) == np.float64:
            coeffs = Wide(coeffs)
    _check_length(coeffs.shape[-1])
    out = _inverse_last(coeffs, WaveletKind(kind))
    if isinstance(out, Wide):
        return out.hi.copy()
    return out.astype(dtype or np.float64)


@lru_cache(maxsize=None)
def _flat_table(which: str, m: int):
    """Per-output (first input index, tap count, weights) arrays for the kernels."""
    table = {"predict": interp_predict_table, "update": lifted_update_table,
             "avg": avg_predict_table}[which](m)
    start = np.zeros(m, dtype=np.int64)
    nw = np.zeros(m, dtype=np.int64)
    w = np.zeros((m, 4))
    for seg in table:
        for i in range(seg.start, seg.stop):
            start[i] = i + seg.offset
            nw[i] = len(seg.weights)
            w[i, :len(seg.weights)] = seg.weights
    return start, nw, w


def _lift_cube(work, n: int, axes, kind: WaveletKind, forward: bool) -> None:
    """Lift the origin ``n``-cube of every block in ``work`` along ``axes``, in place.

    ``work`` has shape (nblocks, B, B, B); each pass gathers the lines into the
    columns of an (n, L) array for the compiled kernels.
    """
    m = n // 2
    tables = (*_flat_table("avg" if kind is WaveletKind.AVG_INTERP3 else "predict", m),
              *_flat_table("update", m))
    wide = isinstance(work, Wide)
    planes = (work.hi, work.lo) if wide else (work,)
    if wide:
        fn = _lift.forward_wide if forward else _lift.inverse_wide
    else:
        fn = _lift.forward_plain if forward else _lift.inverse_plain
    for axis in axes:
        cubes = [p[:, :n, :n, :n] for p in planes]
        if axis == -1:
            xs = [np.empty((n, c.size // n)) for c in cubes]
            for c, x in zip(cubes, xs):
                _lift.gather_x(c, x)
        else:
            xs = [np.ascontiguousarray(np.moveaxis(c, axis, 0)).reshape(n, -1) for c in cubes]
        ys = [np.empty_like(x) for x in xs]
        fn(*xs, *ys, int(kind), *tables)
        for c, y in zip(cubes, ys):
            if axis == -1:
                _lift.scatter_x(y, c)
            else:
                v = np.moveaxis(c, axis, 0)
                v[...] = y.reshape(v.shape)


def _check_block(shape, plan: WaveletPlan) -> None:
    b = plan.block_size
    if len(shape) < 3 or tuple(shape[-3:]) != (b, b, b):
        raise PlanMismatch(f"expected trailing shape {(b, b, b)}, got {tuple(shape)}")


def forward_3d(block, plan: WaveletPlan):
    """Separable multi-level transform of one block or a stack of blocks.

    Axes ``(..., z, y, x)``.  Each level lifts x, then y, then z on the current
    coarse sub-cube; coarse values gather at the origin corner.
    """
    block = np.asarray(block)
    _check_block(block.shape, plan)
    if block.dtype != plan.precision.dtype:
        raise PlanMismatch(f"plan is {plan.precision.value}, block is {block.dtype}")
    b = plan.block_size
    work = _working(np.ascontiguousarray(block).reshape(-1, b, b, b))
    n = b
    for _ in range(plan.levels):
        _lift_cube(work, n, (-1, -2, -3), plan.kind, forward=True)
        n //= 2
    return work.reshape(block.shape) if isinstance(work, np.ndarray) else Wide(
        work.hi.reshape(block.shape), work.lo.reshape(block.shape))


def inverse_3d(coeffs, plan: WaveletPlan) -> np.ndarray:
    """Undo :func:`forward_3d`; returns an array of the plan's precision."""
    _check_block(coeffs.shape, plan)
    if plan.precision is Precision.BINARY64:
        work = coeffs.copy() if isinstance(coeffs, Wide) else Wide(np.array(coeffs, dtype=np.float64))
    else:
        work = np.array(coeffs.hi if isinstance(coeffs, Wide) else coeffs, dtype=np.float64)
    shape = work.shape
    b = plan.block_size
    if isinstance(work, Wide):
        work = Wide(work.hi.reshape(-1, b, b, b), work.lo.reshape(-1, b, b, b))
    else:
        work = work.reshape(-1, b, b, b)
    n = b >> (plan.levels - 1)
    for _ in range(plan.levels):
        _lift_cube(work, n, (-3, -2, -1), plan.kind, forward=False)
        n *= 2
    out = work.hi if isinstance(work, Wide) else work
    return out.astype(plan.precision.dtype).reshape(shape)
