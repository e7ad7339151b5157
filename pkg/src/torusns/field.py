"""Spectral vector fields and time-sampled trajectories."""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, GridMismatchError
from .grid import TorusGrid


@dataclass(frozen=True)
class SpectralField:
    """Mean-free periodic vector field stored as Fourier coefficients.

    coeffs has shape (components, *grid.shape), complex128, in numpy FFT
    layout; fields are treated as immutable values (every operation returns
    a new field).
    """

    grid: TorusGrid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != self.grid.dim + 1 or c.shape[1:] != self.grid.shape:
            raise DomainError(
                f"coefficient array shape {c.shape} does not match grid {self.grid.shape}"
            )
        if c.dtype != np.complex128 or not c.flags.c_contiguous:
            object.__setattr__(self, "coeffs", np.ascontiguousarray(c, dtype=np.complex128))

    # -- constructors --------------------------------------------------------

    @classmethod
    def zeros(cls, grid: TorusGrid, components: int):
        return cls(grid, np.zeros((components,) + grid.shape, dtype=np.complex128))

    @classmethod
    def from_physical(cls, grid: TorusGrid, phys):
        phys = np.asarray(phys, dtype=np.float64)
        if phys.ndim == grid.dim:
            phys = phys[None]
        coeffs = np.fft.fftn(phys, axes=grid.axes) / grid.resolution ** grid.dim
        return cls(grid, coeffs)

    # -- basic queries ---------------------------------------------------

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def phys(self):
        """Collocation values, shape (components, *grid.shape), real."""
        n = self.grid.resolution
        out = np.fft.ifftn(self.coeffs, axes=self.grid.axes) * n ** self.grid.dim
        return np.ascontiguousarray(out.real)

    def amplitude(self) -> float:
        if self.coeffs.size == 0:
            return 0.0
        return float(np.max(np.abs(self.coeffs)))

    def mean_coefficient(self):
        zero = (slice(None),) + (0,) * self.grid.dim
        return self.coeffs[zero]

    def hermitian_defect(self) -> float:
        """Max |uhat(-k) - conj(uhat(k))| over all modes."""
        c = self.coeffs
        rev = c
        for ax in self.grid.axes:
            rev = np.roll(np.flip(rev, axis=ax), 1, axis=ax)
        return float(np.max(np.abs(rev - np.conj(c))))

    def finite(self) -> bool:
        return bool(np.isfinite(self.coeffs).all())

    # -- arithmetic (pure, grid-checked) ----------------------------------

    def _check(self, other):
        if self.grid != other.grid:
            raise GridMismatchError("fields live on different grids")
        if self.components != other.components:
            raise DomainError("component count mismatch")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return SpectralField(self.grid, self.coeffs * a)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


class TimeSampledField:
    """A field trajectory on a strictly increasing time grid.

    interpolation = "exact-closure": the field at arbitrary t is computed by
    a closed-form rule (e.g. a heat flow of fixed data); samples are derived.
    interpolation = "linear": piecewise-linear interpolation of coefficients
    between stored samples.
    """

    def __init__(self, times, samples: Optional[Sequence[SpectralField]] = None,
                 closure: Optional[Callable[[float], SpectralField]] = None,
                 interpolation: str = "linear"):
        times = np.asarray(times, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise DomainError("times must be a non-empty 1-D array")
        if times[0] < 0.0 or np.any(np.diff(times) <= 0.0):
            raise DomainError("times must be strictly increasing and nonnegative")
        if interpolation not in ("linear", "exact-closure"):
            raise DomainError(f"unknown interpolation tag {interpolation!r}")
        if interpolation == "exact-closure" and closure is None:
            raise DomainError("exact-closure trajectories need a closure")
        if interpolation == "linear" and samples is None:
            raise DomainError("linear trajectories need stored samples")
        if samples is not None:
            if len(samples) != times.size:
                raise DomainError("one sample per time required")
            g = samples[0].grid
            c = samples[0].components
            for s in samples[1:]:
                if s.grid != g or s.components != c:
                    raise GridMismatchError("samples must share grid and components")
        self.times = times
        self._samples = list(samples) if samples is not None else None
        self._closure = closure
        self.interpolation = interpolation

    @classmethod
    def from_closure(cls, times, closure):
        return cls(times, samples=None, closure=closure, interpolation="exact-closure")

    @classmethod
    def from_samples(cls, times, samples):
        return cls(times, samples=samples, interpolation="linear")

    @property
    def grid(self):
        if self._samples is not None:
            return self._samples[0].grid
        return self._closure(float(self.times[0])).grid

    def sample(self, i: int) -> SpectralField:
        if self._samples is not None:
            return self._samples[i]
        return self._closure(float(self.times[i]))

    def at(self, t: float) -> SpectralField:
        t = float(t)
        if self.interpolation == "exact-closure":
            return self._closure(t)
        times = self.times
        if t <= times[0]:
            return self._samples[0]
        if t >= times[-1]:
            return self._samples[-1]
        i = int(np.searchsorted(times, t, side="right")) - 1
        t0, t1 = times[i], times[i + 1]
        if t == t0:
            return self._samples[i]
        w = (t - t0) / (t1 - t0)
        a, b = self._samples[i], self._samples[i + 1]
        return SpectralField(a.grid, (1.0 - w) * a.coeffs + w * b.coeffs)

    def __len__(self):
        return self.times.size
