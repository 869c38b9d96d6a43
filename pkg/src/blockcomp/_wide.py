"""Vectorised double-double arithmetic.

Only what the lifting kernels need: add, subtract, negate, multiply by a
scalar, slicing and axis moves.  Values are kept normalised (``|lo| <=
ulp(hi)/2``), so ``hi`` is always the correctly rounded binary64 value.
"""

from __future__ import annotations

import numpy as np
from numba import guvectorize

_SPLITTER = 134217729.0  # 2**27 + 1


# Fused kernels for the hot paths.  The operation order matches the numpy
# reference helpers below exactly (no fastmath, so no reassociation or FMA).

@guvectorize(["void(f8, f8, f8, f8, f8[:], f8[:])"], "(),(),(),()->(),()", nopython=True, cache=True)
def _dd_add(ahi, alo, bhi, blo, hi, lo):
    s = ahi + bhi
    bb = s - ahi
    e = (ahi - (s - bb)) + (bhi - bb)
    e = e + (alo + blo)
    t = s + e
    hi[0] = t
    lo[0] = e - (t - s)


@guvectorize(["void(f8, f8, f8, f8, f8, f8[:], f8[:])"], "(),(),(),(),()->(),()", nopython=True, cache=True)
def _dd_scale(ahi, alo, c, ch, cl, hi, lo):
    p = ahi * c
    t = _SPLITTER * ahi
    ah = t - (t - ahi)
    al = ahi - ah
    e = ((ah * ch - p) + ah * cl + al * ch) + al * cl
    e = e + alo * c
    r = p + e
    hi[0] = r
    lo[0] = e - (r - p)


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b: float):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(np.float64(b))
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


class Wide:
    __slots__ = ("hi", "lo")
    __array_ufunc__ = None  # numpy operands defer to our operators

    def __init__(self, hi, lo=None):
        self.hi = np.asarray(hi, dtype=np.float64)
        self.lo = np.zeros_like(self.hi) if lo is None else np.asarray(lo, dtype=np.float64)

    @property
    def shape(self):
        return self.hi.shape

    def copy(self) -> "Wide":
        return Wide(self.hi.copy(), self.lo.copy())

    def __array__(self, dtype=None, copy=None):
        return self.hi if dtype is None else self.hi.astype(dtype)

    def __getitem__(self, key) -> "Wide":
        return Wide(self.hi[key], self.lo[key])

    def __setitem__(self, key, value) -> None:
        if isinstance(value, Wide):
            self.hi[key] = value.hi
            self.lo[key] = value.lo
        else:
            self.hi[key] = value
            self.lo[key] = 0.0

    def __add__(self, other: "Wide") -> "Wide":
        return Wide(*_dd_add(self.hi, self.lo, other.hi, other.lo))

    def __sub__(self, other: "Wide") -> "Wide":
        return Wide(*_dd_add(self.hi, self.lo, -other.hi, -other.lo))

    def __neg__(self) -> "Wide":
        return Wide(-self.hi, -self.lo)

    def __mul__(self, c: float) -> "Wide":
        ch, cl = _split(float(c))
        return Wide(*_dd_scale(self.hi, self.lo, float(c), ch, cl))

    __rmul__ = __mul__

    def moveaxis(self, src: int, dst: int) -> "Wide":
        return Wide(np.moveaxis(self.hi, src, dst), np.moveaxis(self.lo, src, dst))


def empty(shape, like) -> np.ndarray | Wide:
    if isinstance(like, Wide):
        return Wide(np.empty(shape), np.empty(shape))
    return np.empty(shape, dtype=np.float64)


def concat(parts, axis: int = -1):
    if isinstance(parts[0], Wide):
        return Wide(
            np.concatenate([p.hi for p in parts], axis=axis),
            np.concatenate([p.lo for p in parts], axis=axis),
        )
    return np.concatenate(parts, axis=axis)


def moveaxis(x, src: int, dst: int):
    if isinstance(x, Wide):
        return x.moveaxis(src, dst)
    return np.moveaxis(x, src, dst)
