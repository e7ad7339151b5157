"""Dyadic frequency localization and every norm built on it.

Contains the smooth radial cutoff profile, the block operators, dyadic Besov
norms, the heat-flow characterization of negative-index Besov norms, and the
time-weighted mixed norm used by the perturbed-system fixed point.

On the discrete torus the localization operators are plain Fourier
multipliers; block j multiplies uhat(k) by profile(|k|/2^j) -
profile(|k|/2^{j-1}).
"""

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DomainError
from .field import SpectralField, TimeSampledField
from .grid import TorusGrid
from .operators import apply_heat, l2_norm, lp_norm


@dataclass(frozen=True)
class ChiProfile:
    """Smooth radial profile: 1 on [0, 1], 0 on [2, inf), C^inf bump blend
    in between, monotone nonincreasing."""

    label: str = "bump-blend"

    def __call__(self, r):
        r = np.asarray(r, dtype=np.float64)
        out = np.ones_like(r)
        out[r >= 2.0] = 0.0
        mid = (r > 1.0) & (r < 2.0)
        if np.any(mid):
            s = r[mid]
            a = np.exp(-1.0 / (2.0 - s))
            b = np.exp(-1.0 / (s - 1.0))
            out[mid] = a / (a + b)
        return out


DEFAULT_CHI = ChiProfile()


def block_range(grid: TorusGrid):
    """j = 0 covers |k| in [1, 2]; the top block covers the grid corners."""
    return 0, int(math.ceil(math.log2(grid.kmax_corner)))


@lru_cache(maxsize=512)
def _block_multiplier(grid: TorusGrid, j: int, chi: ChiProfile):
    kmag = grid.kmag
    scale = 2.0 ** j
    mult = chi(kmag / scale) - chi(kmag / (scale / 2.0))
    return np.ascontiguousarray(mult.ravel())


@lru_cache(maxsize=512)
def _lowpass_multiplier(grid: TorusGrid, j: int, chi: ChiProfile):
    return np.ascontiguousarray(chi(grid.kmag / 2.0 ** j).ravel())


def lp_block(u: SpectralField, j: int, chi: ChiProfile = DEFAULT_CHI) -> SpectralField:
    mult = _block_multiplier(u.grid, j, chi)
    out = kernels.scale_by_multiplier(u.coeffs.reshape(u.components, -1), mult)
    return SpectralField(u.grid, out.reshape(u.coeffs.shape))


def lp_lowpass(u: SpectralField, j: int, chi: ChiProfile = DEFAULT_CHI) -> SpectralField:
    mult = _lowpass_multiplier(u.grid, j, chi)
    out = kernels.scale_by_multiplier(u.coeffs.reshape(u.components, -1), mult)
    return SpectralField(u.grid, out.reshape(u.coeffs.shape))


@dataclass
class LPDecomposition:
    """Family of dyadic blocks of one source field."""

    grid: TorusGrid
    j_min: int
    j_max: int
    blocks: dict = dc_field(default_factory=dict)

    def reconstruct(self) -> SpectralField:
        acc = None
        for j in range(self.j_min, self.j_max + 1):
            acc = self.blocks[j] if acc is None else acc + self.blocks[j]
        return acc


def decompose(u: SpectralField, chi: ChiProfile = DEFAULT_CHI) -> LPDecomposition:
    j_min, j_max = block_range(u.grid)
    blocks = {j: lp_block(u, j, chi) for j in range(j_min, j_max + 1)}
    return LPDecomposition(u.grid, j_min, j_max, blocks)


# ---------------------------------------------------------------------------
# Besov norms

@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float

    def __post_init__(self):
        if not (1 <= self.p) or not (1 <= self.q):
            raise DomainError("Besov indices p, q must lie in [1, inf]")


def _lq_aggregate(values, q):
    values = np.asarray(values, dtype=np.float64)
    if q == np.inf:
        return float(np.max(values)) if values.size else 0.0
    return float(kernels.tree_sum(values ** q) ** (1.0 / q))


def besov_dyadic(u: SpectralField, params: BesovParams,
                 chi: ChiProfile = DEFAULT_CHI, oversample: int = 4) -> float:
    """|| 2^{js} ||Delta_j u||_{L^p} ||_{l^q} over the grid's block range."""
    j_min, j_max = block_range(u.grid)
    vals = []
    for j in range(j_min, j_max + 1):
        blk = lp_block(u, j, chi)
        vals.append(2.0 ** (j * params.s) * lp_norm(blk, params.p, oversample))
    return _lq_aggregate(vals, params.q)


@dataclass(frozen=True)
class HeatQuadrature:
    """Log-spaced time grid for the heat-flow norm quadrature."""

    t_min: float
    t_max: float
    n: int = 200

    def __post_init__(self):
        if self.t_min <= 0.0 or self.t_max <= self.t_min:
            raise DomainError("need 0 < t_min < t_max")
        if self.n < 8:
            raise DomainError("need at least 8 quadrature points")

    @classmethod
    def for_grid(cls, grid: TorusGrid, n: int = 200):
        return cls(1e-4 / grid.resolution ** 2, 1e2, n)

    @classmethod
    def for_frequency(cls, kmax: float, n: int = 256):
        """Resolve decay scales down to 1/kmax^2."""
        return cls(1e-6 / float(kmax) ** 2, 1e2, n)

    def times(self):
        return np.exp(np.linspace(np.log(self.t_min), np.log(self.t_max), self.n))


def heat_norm_from_samples(times, lp_values, s: float, q: float) -> float:
    """|| t^{s/2} g(t) ||_{L^q(dt/t)} from sampled g(t) = ||S(t)u||_{L^p}.

    Finite q integrates by trapezoid in log t; q = inf takes the grid max.
    """
    if s <= 0.0:
        raise DomainError("heat characterization needs s > 0")
    times = np.asarray(times, dtype=np.float64)
    g = np.asarray(lp_values, dtype=np.float64) * times ** (s / 2.0)
    if q == np.inf:
        return float(np.max(g))
    integrand = g ** q
    return float(np.trapezoid(integrand, x=np.log(times)) ** (1.0 / q))


def besov_heat(u: SpectralField, s: float, p: float, q: float,
               quad: HeatQuadrature | None = None, oversample: int = 4) -> float:
    """Negative-index norm B^{-s}_{p,q} via the heat flow (s > 0)."""
    if quad is None:
        quad = HeatQuadrature.for_grid(u.grid)
    times = quad.times()
    vals = [lp_norm(apply_heat(u, t), p, oversample) for t in times]
    return heat_norm_from_samples(times, vals, s, q)


# ---------------------------------------------------------------------------
# the weighted mixed norm of the fixed-point space

def cumulative_trapezoid(times, values):
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(values)
    if times.size > 1:
        dt = np.diff(times)
        out[1:] = np.cumsum(dt * 0.5 * (values[1:] + values[:-1]))
    return out


def x_lambda_norm(a: TimeSampledField, u0_weight, lam: float, p: float,
                  chi: ChiProfile = DEFAULT_CHI, oversample: int = 2) -> float:
    """Weighted mixed Besov norm of a trajectory.

    u0_weight holds ||u0(t)||_{L^inf}^2 on the trajectory's own time grid;
    the damping weight is exp(-lam * int_0^t u0_weight). Time norms use the
    trajectory grid (max / trapezoid), no inter-sample refinement.
    """
    if lam <= 0.0:
        raise DomainError("lambda must be positive")
    if not p > 3:
        raise DomainError("the weighted space needs p > 3")
    times = a.times
    u0_weight = np.asarray(u0_weight, dtype=np.float64)
    if u0_weight.shape != times.shape:
        raise DomainError("weight series must live on the trajectory time grid")
    wint = cumulative_trapezoid(times, u0_weight)
    damp = np.exp(-lam * wint)

    j_min, j_max = block_range(a.grid)
    nj = j_max - j_min + 1
    block_norms = np.zeros((nj, times.size))
    for i in range(times.size):
        f = a.sample(i)
        f_l = SpectralField(f.grid, f.coeffs * damp[i])
        for j in range(j_min, j_max + 1):
            block_norms[j - j_min, i] = lp_norm(lp_block(f_l, j, chi), p, oversample)

    total = 0.0
    for j in range(j_min, j_max + 1):
        row = block_norms[j - j_min]
        linf_t = float(np.max(row))
        l2_t_sq = float(np.trapezoid(row * row, x=times))
        total += 2.0 ** (-2 * j * (1.0 - 3.0 / p)) * (linf_t ** 2 + 2.0 ** (2 * j) * l2_t_sq)
    return float(np.sqrt(total))


def sup_besov_over_time(a: TimeSampledField, s: float, p: float, q: float,
                        chi: ChiProfile = DEFAULT_CHI, oversample: int = 2) -> float:
    """sup over samples of the dyadic B^s_{p,q} norm (diagnostic helper)."""
    best = 0.0
    for i in range(len(a)):
        val = besov_dyadic(a.sample(i), BesovParams(s, p, q), chi, oversample)
        best = max(best, val)
    return best


__all__ = [
    "ChiProfile", "DEFAULT_CHI", "BesovParams", "LPDecomposition",
    "HeatQuadrature", "lp_block", "lp_lowpass", "decompose", "block_range",
    "besov_dyadic", "besov_heat", "heat_norm_from_samples", "x_lambda_norm",
    "cumulative_trapezoid", "sup_besov_over_time",
]
