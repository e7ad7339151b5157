"""Spectral grids on the periodic box [0, 2pi)^d (d = 2 or 3).

Conventions used throughout the package:

  * plain Fourier basis e^{i k.x} with integer wavevectors, coefficients
    normalised so that u(x) = sum_k uhat(k) e^{i k.x};
  * norms use the unnormalised Lebesgue measure on [0, 2pi)^d;
  * quadratic products are dealiased by zeroing every mode with any
    |k_i| > dealias_fraction * resolution / 2 (2/3 rule by default).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform collocation grid, resolution points per axis (power of two)."""

    dim: int
    resolution: int
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise DomainError(f"dim must be 2 or 3, got {self.dim}")
        n = self.resolution
        if n < 8 or (n & (n - 1)) != 0:
            raise DomainError(f"resolution must be a power of two >= 8, got {n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise DomainError("dealias_fraction must lie in (0, 1]")

    # -- index bookkeeping ---------------------------------------------------

    @cached_property
    def shape(self):
        return (self.resolution,) * self.dim

    @cached_property
    def axes(self):
        """FFT axes of a (components, *shape) array."""
        return tuple(range(1, self.dim + 1))

    @cached_property
    def k1(self):
        """Integer wavenumbers along one axis in numpy FFT order."""
        n = self.resolution
        return np.concatenate([np.arange(0, n // 2), np.arange(-n // 2, 0)])

    @cached_property
    def kvec(self):
        """Broadcastable float wavevector components, one array per axis."""
        out = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.resolution
            out.append(self.k1.astype(np.float64).reshape(shape))
        return tuple(out)

    @cached_property
    def k2(self):
        acc = np.zeros(self.shape)
        for kv in self.kvec:
            acc = acc + kv * kv
        return acc

    @cached_property
    def k2_horizontal(self):
        """|k_h|^2 over the first two axes (equals k2 on a 2-D grid)."""
        acc = np.zeros(self.shape)
        for kv in self.kvec[:2]:
            acc = acc + kv * kv
        return acc

    @cached_property
    def kmag(self):
        return np.sqrt(self.k2)

    @cached_property
    def inv_k2(self):
        """1/|k|^2 with the k = 0 entry set to 0 (mean modes pass through)."""
        with np.errstate(divide="ignore"):
            inv = np.where(self.k2 > 0.0, 1.0 / self.k2, 0.0)
        return inv

    @cached_property
    def kflat(self):
        """Flattened float wavevector components for mode-wise kernels."""
        full = [np.broadcast_to(kv, self.shape).ravel().astype(np.float64)
                for kv in self.kvec]
        return tuple(np.ascontiguousarray(a) for a in full)

    @cached_property
    def inv_k2_flat(self):
        return np.ascontiguousarray(self.inv_k2.ravel())

    # -- dealiasing ------------------------------------------------------

    @property
    def dealias_cutoff(self):
        return self.dealias_fraction * self.resolution / 2.0

    @cached_property
    def dealias_mask(self):
        cut = self.dealias_cutoff
        keep = np.ones(self.shape, dtype=bool)
        for kv in self.kvec:
            keep &= np.abs(kv) <= cut
        return keep

    @cached_property
    def dealias_mask_float(self):
        return self.dealias_mask.astype(np.float64)

    # -- physical coordinates ---------------------------------------------

    @cached_property
    def x1(self):
        return TWO_PI * np.arange(self.resolution) / self.resolution

    def meshgrid(self):
        return np.meshgrid(*([self.x1] * self.dim), indexing="ij")

    @property
    def max_k(self):
        return self.resolution // 2

    @property
    def kmax_corner(self):
        return float(np.sqrt(self.dim) * (self.resolution // 2))

    @property
    def cell_volume(self):
        return (TWO_PI / self.resolution) ** self.dim

    def horizontal(self):
        """The T^2 grid obtained by dropping the third axis."""
        if self.dim != 3:
            raise DomainError("horizontal() requires a 3-D grid")
        return TorusGrid(2, self.resolution, self.dealias_fraction)
