"""Sequential Lorenzo prediction kernels (compiled with numba)."""

from __future__ import annotations

import numpy as np
from numba import njit

ESCAPE = -32768
QMAX = 32767


@njit(cache=True, inline="always")
def _predict(dec, z, y, x):
    # 3D Lorenzo: inclusion-exclusion over the 7 already-visited neighbours;
    # neighbours outside the block count as zero.
    p = 0.0
    if x > 0:
        p += dec[z, y, x - 1]
    if y > 0:
        p += dec[z, y - 1, x]
    if z > 0:
        p += dec[z - 1, y, x]
    if x > 0 and y > 0:
        p -= dec[z, y - 1, x - 1]
    if x > 0 and z > 0:
        p -= dec[z - 1, y, x - 1]
    if y > 0 and z > 0:
        p -= dec[z - 1, y - 1, x]
    if x > 0 and y > 0 and z > 0:
        p += dec[z - 1, y - 1, x - 1]
    return p


@njit(cache=True, nogil=True)
def encode(block, bound, codes, outliers, dec):
    """Fill ``codes`` (int16) and ``outliers``; return the outlier count.

    ``dec`` receives the decoder's reconstruction and must have the block's
    dtype, so predictions are formed from exactly the values the decoder sees.
    """
    bin_width = 2.0 * bound
    n_out = 0
    nz, ny, nx = block.shape
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                v = block[z, y, x]
                pred = _predict(dec, z, y, x)
                q = np.floor((v - pred) / bin_width + 0.5)
                if abs(q) <= QMAX:
                    dec[z, y, x] = pred + q * bin_width  # rounds to the block dtype
                    if abs(np.float64(dec[z, y, x]) - np.float64(v)) <= bound:
                        codes[z, y, x] = np.int16(q)
                        continue
                codes[z, y, x] = ESCAPE
                outliers[n_out] = v
                n_out += 1
                dec[z, y, x] = v
    return n_out


@njit(cache=True, nogil=True)
def decode(codes, outliers, bound, dec):
    """Reconstruct into ``dec``; return the number of outliers consumed."""
    bin_width = 2.0 * bound
    n_out = 0
    nz, ny, nx = codes.shape
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                q = codes[z, y, x]
                if q == ESCAPE:
                    if n_out >= outliers.shape[0]:
                        return -1
                    dec[z, y, x] = outliers[n_out]
                    n_out += 1
                else:
                    pred = _predict(dec, z, y, x)
                    dec[z, y, x] = pred + np.float64(q) * bin_width
    return n_out
