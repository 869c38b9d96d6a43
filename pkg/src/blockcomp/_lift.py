"""Compiled lifting of many lines at once.

Lines are the columns of an (n, L) array, so every stencil weight applies
to a contiguous row and the inner loops run over lines.  The operation order
matches the numpy reference in :mod:`.wavelet` exactly, so both paths give
identical bits.  ``wide`` selects double-double arithmetic (the ``*l`` arrays
carry the low words) or plain binary64 (the ``*l`` arrays are never touched).
The input rows are used as scratch.
"""

from __future__ import annotations

from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1

KIND_INTERP4 = 1
KIND_INTERP4_LIFTED = 2
KIND_AVG_INTERP3 = 3


@njit(inline="always")
def _add(ah, al, bh, bl):
    s = ah + bh
    bb = s - ah
    e = (ah - (s - bb)) + (bh - bb)
    e = e + (al + bl)
    t = s + e
    return t, e - (t - s)


@njit(inline="always")
def _scale(ah, al, c, ch, cl):
    p = ah * c
    t = _SPLITTER * ah
    hh = t - (t - ah)
    hl = ah - hh
    e = ((hh * ch - p) + hh * cl + hl * ch) + hl * cl
    e = e + al * c
    r = p + e
    return r, e - (r - p)


@njit(inline="always")
def _split(c):
    t = _SPLITTER * c
    ch = t - (t - c)
    return ch, c - ch


# row primitives on row i of d:  d = a + sign*b,  d = a*c,  d = d + a*c,  d = a

@njit(inline="always")
def _radd(dh, dl, i, ah, al, ia, bh, bl, ib, sign, wide):
    if wide:
        for k in range(dh.shape[1]):
            dh[i, k], dl[i, k] = _add(ah[ia, k], al[ia, k], sign * bh[ib, k], sign * bl[ib, k])
    else:
        for k in range(dh.shape[1]):
            dh[i, k] = ah[ia, k] + sign * bh[ib, k]


@njit(inline="always")
def _rscale(dh, dl, i, ah, al, ia, c, wide):
    if wide:
        ch, cl = _split(c)
        for k in range(dh.shape[1]):
            dh[i, k], dl[i, k] = _scale(ah[ia, k], al[ia, k], c, ch, cl)
    else:
        for k in range(dh.shape[1]):
            dh[i, k] = ah[ia, k] * c


@njit(inline="always")
def _raxpy(dh, dl, i, ah, al, ia, c, wide):
    if wide:
        ch, cl = _split(c)
        for k in range(dh.shape[1]):
            th, tl = _scale(ah[ia, k], al[ia, k], c, ch, cl)
            dh[i, k], dl[i, k] = _add(dh[i, k], dl[i, k], th, tl)
    else:
        for k in range(dh.shape[1]):
            dh[i, k] = dh[i, k] + ah[ia, k] * c


@njit(inline="always")
def _rcopy(dh, dl, i, ah, al, ia, wide):
    dh[i, :] = ah[ia, :]
    if wide:
        dl[i, :] = al[ia, :]


@njit(inline="always")
def _rstencil(dh, dl, r, vh, vl, base, step, i, start, nw, w, wide):
    """Row r of d = sum_t w[i, t] * v[base + step * (start[i] + t)], left to right."""
    j = base + step * start[i]
    _rscale(dh, dl, r, vh, vl, j, w[i, 0], wide)
    for t in range(1, nw[i]):
        _raxpy(dh, dl, r, vh, vl, j + step * t, w[i, t], wide)


@njit(inline="always")
def _forward(xh, xl, yh, yl, wide, kind, p_start, p_nw, p_w, u_start, u_nw, u_w):
    m = xh.shape[0] // 2
    if kind == KIND_AVG_INTERP3:
        for i in range(m):
            _radd(yh, yl, i, xh, xl, 2 * i, xh, xl, 2 * i + 1, 1.0, wide)
            _rscale(yh, yl, i, yh, yl, i, 0.5, wide)
        for i in range(m):
            # x row 2i becomes the half difference, y row m+i the prediction
            _radd(xh, xl, 2 * i, xh, xl, 2 * i, xh, xl, 2 * i + 1, -1.0, wide)
            _rscale(xh, xl, 2 * i, xh, xl, 2 * i, 0.5, wide)
            _rstencil(yh, yl, m + i, yh, yl, 0, 1, i, p_start, p_nw, p_w, wide)
            _radd(yh, yl, m + i, xh, xl, 2 * i, yh, yl, m + i, -1.0, wide)
        return
    for i in range(m):
        _rstencil(yh, yl, m + i, xh, xl, 0, 2, i, p_start, p_nw, p_w, wide)
        _radd(yh, yl, m + i, xh, xl, 2 * i + 1, yh, yl, m + i, -1.0, wide)
    for i in range(m):
        if kind == KIND_INTERP4_LIFTED:
            _rstencil(yh, yl, i, yh, yl, m, 1, i, u_start, u_nw, u_w, wide)
            _radd(yh, yl, i, xh, xl, 2 * i, yh, yl, i, 1.0, wide)
        else:
            _rcopy(yh, yl, i, xh, xl, 2 * i, wide)


@njit(inline="always")
def _inverse(xh, xl, yh, yl, wide, kind, p_start, p_nw, p_w, u_start, u_nw, u_w):
    m = xh.shape[0] // 2
    if kind == KIND_AVG_INTERP3:
        for i in range(m):
            # y row 2i+1 first holds h = d + prediction
            _rstencil(yh, yl, 2 * i + 1, xh, xl, 0, 1, i, p_start, p_nw, p_w, wide)
            _radd(yh, yl, 2 * i + 1, xh, xl, m + i, yh, yl, 2 * i + 1, 1.0, wide)
            _radd(yh, yl, 2 * i, xh, xl, i, yh, yl, 2 * i + 1, 1.0, wide)
            _radd(yh, yl, 2 * i + 1, xh, xl, i, yh, yl, 2 * i + 1, -1.0, wide)
        return
    for i in range(m):
        if kind == KIND_INTERP4_LIFTED:
            _rstencil(yh, yl, 2 * i, xh, xl, m, 1, i, u_start, u_nw, u_w, wide)
            _radd(yh, yl, 2 * i, xh, xl, i, yh, yl, 2 * i, -1.0, wide)
        else:
            _rcopy(yh, yl, 2 * i, xh, xl, i, wide)
    for i in range(m):
        _rstencil(yh, yl, 2 * i + 1, yh, yl, 0, 2, i, p_start, p_nw, p_w, wide)
        _radd(yh, yl, 2 * i + 1, xh, xl, m + i, yh, yl, 2 * i + 1, 1.0, wide)


# entry points; ``wide`` is a literal inside each so the unused branch folds away

@njit(cache=True, nogil=True)
def forward_plain(xh, yh, kind, p_start, p_nw, p_w, u_start, u_nw, u_w):
    _forward(xh, xh, yh, yh, False, kind, p_start, p_nw, p_w, u_start, u_nw, u_w)


@njit(cache=True, nogil=True)
def forward_wide(xh, xl, yh, yl, kind, p_start, p_nw, p_w, u_start, u_nw, u_w):
    _forward(xh, xl, yh, yl, True, kind, p_start, p_nw, p_w, u_start, u_nw, u_w)


@njit(cache=True, nogil=True)
def inverse_plain(xh, yh, kind, p_start, p_nw, p_w, u_start, u_nw, u_w):
    _inverse(xh, xh, yh, yh, False, kind, p_start, p_nw, p_w, u_start, u_nw, u_w)


@njit(cache=True, nogil=True)
def inverse_wide(xh, xl, yh, yl, kind, p_start, p_nw, p_w, u_start, u_nw, u_w):
    _inverse(xh, xl, yh, yl, True, kind, p_start, p_nw, p_w, u_start, u_nw, u_w)


# x lines are strided in a (nblocks, z, y, x) cube; these move them to and
# from the columns of an (n, L) array one (block, z) plane at a time

@njit(cache=True, nogil=True)
def gather_x(src, dst):
    nb, nz, ny, n = src.shape
    for b in range(nb):
        for z in range(nz):
            col = (b * nz + z) * ny
            for k in range(n):
                for y in range(ny):
                    dst[k, col + y] = src[b, z, y, k]


@njit(cache=True, nogil=True)
def scatter_x(src, dst):
    nb, nz, ny, n = dst.shape
    for b in range(nb):
        for z in range(nz):
            col = (b * nz + z) * ny
            for y in range(ny):
                for k in range(n):
                    dst[b, z, y, k] = src[k, col + y]
