"""Reconstruction quality and compression ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRange, DimMismatch
from .grid import ScalarField3D


def _arrays(ref, test) -> tuple[np.ndarray, np.ndarray]:
    r = ref.data if isinstance(ref, ScalarField3D) else np.asarray(ref)
    d = test.data if isinstance(test, ScalarField3D) else np.asarray(test)
    if r.shape != d.shape:
        raise DimMismatch(f"shapes differ: {r.shape} vs {d.shape}")
    if isinstance(ref, ScalarField3D) and isinstance(test, ScalarField3D) and r.dtype != d.dtype:
        raise DimMismatch(f"precisions differ: {r.dtype} vs {d.dtype}")
    return r, d


def _sq_err(r: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.square(r.astype(np.float64) - d.astype(np.float64))


def mse(ref, test) -> float:
    """Mean of squared differences, accumulated in binary64."""
    r, d = _arrays(ref, test)
    if r.size == 0:
        return 0.0
    return float(np.sum(_sq_err(r, d).ravel()) / r.size)


def linf(ref, test) -> float:
    r, d = _arrays(ref, test)
    if r.size == 0:
        return 0.0
    return float(np.max(np.abs(r.astype(np.float64) - d.astype(np.float64))))


def value_range(ref) -> tuple[float, float]:
    r = ref.data if isinstance(ref, ScalarField3D) else np.asarray(ref)
    return float(r.min()), float(r.max())


def psnr_from(mse_value: float, lo: float, hi: float) -> float:
    if mse_value == 0:
        return math.inf
    if hi == lo:
        raise DegenerateRange("reference field is constant, PSNR is undefined")
    return 20.0 * math.log10((hi - lo) / (2.0 * math.sqrt(mse_value)))


def psnr(ref, test) -> float:
    """20 log10((max_R - min_R) / (2 sqrt(MSE))) in dB; ``inf`` when MSE is 0."""
    m = mse(ref, test)
    return psnr_from(m, *value_range(ref))


def compression_ratio(raw_bytes: int, file_bytes: int) -> float:
    if file_bytes <= 0:
        raise ValueError(f"file size must be positive, got {file_bytes}")
    return raw_bytes / file_bytes


def format_db(value: float) -> str:
    """PSNR text form: ``inf`` for a perfect match, else a round-trip float."""
    return "inf" if math.isinf(value) else repr(float(value))


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr_db: float
    linf: float
    range: tuple[float, float]
    cr: float | None = None

    @classmethod
    def compare(cls, ref, test, raw_bytes: int | None = None, file_bytes: int | None = None):
        m = mse(ref, test)
        lo, hi = value_range(ref)
        cr = compression_ratio(raw_bytes, file_bytes) if file_bytes else None
        return cls(m, psnr_from(m, lo, hi), linf(ref, test), (lo, hi), cr)

    @property
    def exact(self) -> bool:
        return self.mse == 0

    def lines(self) -> list[str]:
        out = [
            f"mse={self.mse!r}",
            f"psnr_db={format_db(self.psnr_db)}",
            f"linf={self.linf!r}",
            f"min={self.range[0]!r}",
            f"max={self.range[1]!r}",
        ]
        if self.cr is not None:
            out.append(f"cr={self.cr!r}")
        return out
