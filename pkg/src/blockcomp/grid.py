"""Dense 3D scalar fields and their partition into cubic blocks.

Arrays are stored with shape ``(nz, ny, nx)`` in C order, so the flattened
data is x-fastest: ``linear = x + nx * (y + ny * z)``.  Blocks use the same
convention and are numbered ``idx = bx + nbx * (by + nby * bz)``.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

from .errors import NonDivisibleDims, NonFiniteValue, NotPowerOfTwo, SizeMismatch


class Precision(str, enum.Enum):
    BINARY32 = "binary32"
    BINARY64 = "binary64"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype("<f4") if self is Precision.BINARY32 else np.dtype("<f8")

    @property
    def itemsize(self) -> int:
        return self.dtype.itemsize

    @property
    def mantissa_bits(self) -> int:
        return 23 if self is Precision.BINARY32 else 52

    @property
    def uint(self) -> np.dtype:
        return np.dtype("<u4") if self is Precision.BINARY32 else np.dtype("<u8")

    @classmethod
    def of(cls, dtype) -> "Precision":
        dtype = np.dtype(dtype)
        if dtype == np.float32:
            return cls.BINARY32
        if dtype == np.float64:
            return cls.BINARY64
        raise TypeError(f"unsupported dtype {dtype}")


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class ScalarField3D:
    """An immutable dense field.  ``data`` has shape ``(nz, ny, nx)``."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data)
        if arr.ndim != 3:
            raise ValueError("field data must be three-dimensional (nz, ny, nx)")
        Precision.of(arr.dtype)
        if arr.flags.writeable:
            arr = arr.copy() if arr is self.data else arr
            arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_flat(cls, flat, nx: int, ny: int, nz: int) -> "ScalarField3D":
        flat = np.asarray(flat)
        if flat.size != nx * ny * nz:
            raise SizeMismatch(f"expected {nx * ny * nz} values, got {flat.size}")
        return cls(flat.reshape(nz, ny, nx))

    @property
    def nx(self) -> int:
        return self.data.shape[2]

    @property
    def ny(self) -> int:
        return self.data.shape[1]

    @property
    def nz(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.nx, self.ny, self.nz

    @property
    def precision(self) -> Precision:
        return Precision.of(self.data.dtype)

    @property
    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    @property
    def nbytes(self) -> int:
        return self.data.nbytes

    @property
    def value_range(self) -> tuple[float, float]:
        return float(self.data.min()), float(self.data.max())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScalarField3D):
            return NotImplemented
        return (
            self.data.dtype == other.data.dtype
            and self.data.shape == other.data.shape
            and self.data.tobytes() == other.data.tobytes()
        )


@dataclass(frozen=True, eq=False)
class BlockGrid:
    """Cubic blocks of side ``block_size``; ``blocks`` has shape (nblocks, B, B, B)."""

    block_size: int
    nbx: int
    nby: int
    nbz: int
    blocks: np.ndarray

    @property
    def nblocks(self) -> int:
        return self.nbx * self.nby * self.nbz

    @property
    def dims(self) -> tuple[int, int, int]:
        b = self.block_size
        return self.nbx * b, self.nby * b, self.nbz * b

    def block_index(self, bx: int, by: int, bz: int) -> int:
        return bx + self.nbx * (by + self.nby * bz)

    def block_coords(self, idx: int) -> tuple[int, int, int]:
        bx = idx % self.nbx
        by = (idx // self.nbx) % self.nby
        bz = idx // (self.nbx * self.nby)
        return bx, by, bz


def check_block_size(block_size: int, dims=None) -> None:
    if not is_power_of_two(block_size):
        raise NotPowerOfTwo(f"block size must be a power of 2, got {block_size}")
    if dims is not None:
        for axis, n in zip("xyz", dims):
            if n % block_size:
                raise NonDivisibleDims(
                    f"block size {block_size} does not divide n{axis}={n}"
                )


def split_blocks(data: np.ndarray, block_size: int) -> np.ndarray:
    """(nz, ny, nx) array -> (nblocks, B, B, B) array in linear block order."""
    nz, ny, nx = data.shape
    b = block_size
    tiled = data.reshape(nz // b, b, ny // b, b, nx // b, b)
    return np.ascontiguousarray(tiled.transpose(0, 2, 4, 1, 3, 5)).reshape(-1, b, b, b)


def merge_blocks(blocks: np.ndarray, nbx: int, nby: int, nbz: int) -> np.ndarray:
    b = blocks.shape[-1]
    tiled = blocks.reshape(nbz, nby, nbx, b, b, b).transpose(0, 3, 1, 4, 2, 5)
    return np.ascontiguousarray(tiled).reshape(nbz * b, nby * b, nbx * b)


def partition(field: ScalarField3D, block_size: int) -> BlockGrid:
    check_block_size(block_size, field.dims)
    b = block_size
    blocks = split_blocks(field.data, b)
    blocks.flags.writeable = False
    return BlockGrid(b, field.nx // b, field.ny // b, field.nz // b, blocks)


def gather(grid: BlockGrid) -> ScalarField3D:
    return ScalarField3D(merge_blocks(grid.blocks, grid.nbx, grid.nby, grid.nbz))


def ingest_raw(path, nx: int, ny: int, nz: int, precision) -> ScalarField3D:
    """Read a headerless little-endian array, rejecting NaN and infinities."""
    precision = Precision(precision)
    expected = nx * ny * nz * precision.itemsize
    size = os.path.getsize(path)
    if size != expected:
        raise SizeMismatch(
            f"{path}: {size} bytes, expected {expected} for {nx}x{ny}x{nz} {precision.value}"
        )
    flat = np.fromfile(path, dtype=precision.dtype)
    bad = np.flatnonzero(~np.isfinite(flat))
    if bad.size:
        raise NonFiniteValue(int(bad[0]))
    return ScalarField3D(flat.astype(precision.dtype.newbyteorder("="), copy=False).reshape(nz, ny, nx))


def write_raw(field: ScalarField3D, path) -> None:
    field.data.astype(field.precision.dtype, copy=False).tofile(path)
