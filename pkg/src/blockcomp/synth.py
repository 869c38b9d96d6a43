"""Deterministic synthetic fields: bubble clouds and separable polynomials.

Random numbers come from the Philox-4x64 counter-based generator (numpy's
``Philox`` bit generator, raw 64-bit outputs only).  Uniforms use the top 53
bits of each word and normals use Box-Muller, so a field is fully determined
by its :class:`CloudSpec` and does not depend on numpy's distribution code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BubbleOutOfDomain, ConfigError
from .grid import Precision, ScalarField3D


class Stream:
    """Uniform and normal variates drawn from raw Philox words."""

    def __init__(self, seed: int):
        self._bits = np.random.Philox(seed)

    def uniform(self, n: int) -> np.ndarray:
        raw = np.asarray(self._bits.random_raw(n), dtype=np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        u1 = 1.0 - self.uniform(n)  # (0, 1]
        u2 = self.uniform(n)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class CloudSpec:
    seed: int = 0
    n: int = 128
    n_bubbles: int = 70
    radius_mu: float | None = None  # log of the median radius, in cells
    radius_sigma: float = 0.3
    cloud_radius: float | None = None  # default 0.4 n
    background: float = 0.0
    interior: float = 1.0
    sharpness: float = 0.25  # interface width ~ 1/sharpness cells
    precision: Precision = Precision.BINARY32

    def __post_init__(self):
        if self.n < 1 or self.n_bubbles < 0:
            raise ConfigError("domain size must be >= 1 and bubble count >= 0")
        if not (self.sharpness > 0 and math.isfinite(self.sharpness)):
            raise ConfigError(f"sharpness must be positive, got {self.sharpness}")
        if not all(math.isfinite(v) for v in (self.background, self.interior, self.radius_sigma)):
            raise ConfigError("levels and radius spread must be finite")
        object.__setattr__(self, "precision", Precision(self.precision))

    @property
    def mu(self) -> float:
        return math.log(self.n / 20) if self.radius_mu is None else self.radius_mu

    @property
    def cloud(self) -> float:
        return 0.4 * self.n if self.cloud_radius is None else self.cloud_radius


def pressure_like(n: int = 128, seed: int = 0, **kw) -> CloudSpec:
    """Cloud with pressure-like levels: liquid 16, gas 11.

    The levels are the mean and minimum of the pressure snapshot that the
    tolerance sweep in the demos mirrors; only the range relative to the
    tolerance matters to the codec.
    """
    return CloudSpec(seed=seed, n=n, background=16.0, interior=11.0, **kw)


@dataclass(frozen=True)
class Bubble:
    center: tuple[float, float, float]  # (x, y, z) in cell units
    radius: float


def sample_bubbles(spec: CloudSpec) -> list[Bubble]:
    """Radii log-normal; centres uniform in the ball where the bubble stays
    inside the cloud sphere (rejection sampling from the bounding cube)."""
    n, cloud = spec.n, spec.cloud
    if cloud <= 0 or cloud > n / 2:
        raise BubbleOutOfDomain(f"cloud radius {cloud} does not fit a domain of {n} cells")
    rng = Stream(spec.seed)
    radii = np.exp(spec.mu + spec.radius_sigma * rng.normal(spec.n_bubbles))
    mid = n / 2
    out = []
    for r in radii:
        reach = cloud - r
        if reach < 0:
            raise BubbleOutOfDomain(f"bubble radius {r:.3f} exceeds the cloud radius {cloud}")
        while True:
            p = (2.0 * rng.uniform(3) - 1.0) * reach
            if p @ p <= reach * reach:
                break
        out.append(Bubble(tuple(float(mid + c) for c in p), float(r)))
    return out


def smooth_step(d, sharpness: float):
    """0 to 1 across an interface at ``d = 0``; width about 1/sharpness."""
    return 0.5 * (1.0 + np.tanh(sharpness * d))


def generate_cloud(spec: CloudSpec = CloudSpec()) -> ScalarField3D:
    """Bubble indicator in [0, 1] (union of smooth balls) mapped onto the levels.

    Each bubble only touches the cells within 20/sharpness of its surface;
    beyond that the step is within 1e-17 of saturation.
    """
    n = spec.n
    inside = np.zeros((n, n, n), dtype=np.float64)  # accumulates prod(1 - sigma)
    inside[...] = 1.0
    centers = np.arange(n) + 0.5
    margin = 20.0 / spec.sharpness
    for bub in sample_bubbles(spec):
        lo = [max(0, int(math.floor(c - bub.radius - margin))) for c in bub.center]
        hi = [min(n, int(math.ceil(c + bub.radius + margin)) + 1) for c in bub.center]
        x = centers[lo[0]:hi[0]] - bub.center[0]
        y = centers[lo[1]:hi[1]] - bub.center[1]
        z = centers[lo[2]:hi[2]] - bub.center[2]
        dist = np.sqrt(z[:, None, None] ** 2 + y[None, :, None] ** 2 + x[None, None, :] ** 2)
        inside[lo[2]:hi[2], lo[1]:hi[1], lo[0]:hi[0]] *= 1.0 - smooth_step(bub.radius - dist, spec.sharpness)
    alpha = 1.0 - inside
    values = spec.background + (spec.interior - spec.background) * alpha
    return ScalarField3D(values.astype(spec.precision.dtype))


def noise_field(n: int, seed: int = 0, precision=Precision.BINARY32) -> ScalarField3D:
    """Uniform white noise on [0, 1): the incompressible reference case."""
    values = Stream(seed).uniform(n**3).reshape(n, n, n)
    return ScalarField3D(values.astype(Precision(precision).dtype))


def poly_values(degree: int, x, y, z, cell_average: bool = False):
    """``sum_{k=1..degree} x^k + 2 y^k + 3 z^k`` (and 1 for degree 0).

    With ``cell_average`` each coordinate term is averaged over the unit cell
    ``[c, c + 1]`` instead of sampled at ``c``.
    """
    x, y, z = (np.asarray(v, dtype=np.float64) for v in (x, y, z))
    if degree == 0:
        return np.ones(np.broadcast(x, y, z).shape)

    def term(c, k):
        if cell_average:
            return ((c + 1.0) ** (k + 1) - c ** (k + 1)) / (k + 1)
        return c**k

    return sum(term(x, k) + 2.0 * term(y, k) + 3.0 * term(z, k) for k in range(1, degree + 1))


def generate_poly(degree: int, dims, cell_average: bool = False,
                  precision=Precision.BINARY64) -> ScalarField3D:
    if degree < 0:
        raise ConfigError(f"degree must be >= 0, got {degree}")
    nx, ny, nz = dims
    z, y, x = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    values = poly_values(degree, x, y, z, cell_average)
    return ScalarField3D(values.astype(Precision(precision).dtype))
