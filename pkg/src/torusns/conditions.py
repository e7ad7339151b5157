"""Example data construction and the quantitative admissibility checks.

Builds the large-data family

    u0(x) = ( N v0h(x_h) cos(N x3), -div_h v0h(x_h) sin(N x3) ),

with v0h a band-limited, horizontally divergence-free field, and evaluates
the three admissibility functionals, the derived parameters A and B, the
smallness ratio ladder, the sup-norm lower bound with its explicit constant
1/(4 pi sqrt(e)), and the scaling laws in N.

All time-infinite functionals here ride on the exact heat-flow closure of
the free evolution, so they are computed in the factored slab representation
(cost independent of N) with analytic head/tail corrections for the
truncated time integrals; the truncation data is reported, not discarded.
"""

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DomainError
from .field import SpectralField, TimeSampledField
from .grid import TorusGrid
from .lp import HeatQuadrature
from .slab import (SlabField, slab_add, slab_advect, slab_besov_heat,
                   slab_from_2d, slab_heat, slab_leray, slab_lp, slab_mean,
                   slab_q_form, slab_tilde, slab_to_field3)
from .solver import SolverConfig, solve_ns2d


@dataclass(frozen=True)
class ExampleSpec:
    """Parameters of one example datum."""

    N: int
    N0: int
    amplitude: float
    seed: int = 0
    horizontal_resolution: int = 32

    def __post_init__(self):
        if self.N0 < 1:
            raise DomainError("N0 must be a positive integer")
        if self.N <= 2 * self.N0:
            raise DomainError("need N > 2*N0 for spectral separation")
        if self.amplitude < 0:
            raise DomainError("amplitude must be nonnegative")

    def with_n(self, n: int, amplitude: float | None = None):
        return ExampleSpec(n, self.N0, self.amplitude if amplitude is None else amplitude,
                           self.seed, self.horizontal_resolution)


# ---------------------------------------------------------------------------
# horizontal data

def _band_stream_modes(n0: int, seed: int):
    """Deterministic stream-function coefficients on [-n0, n0]^2 \\ {0}.

    Drawn per mode from a counter-based generator, Hermitian by pairing, so
    the same seed gives the same field on any grid that can hold the band.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    modes = {}
    for k1 in range(-n0, n0 + 1):
        for k2 in range(-n0, n0 + 1):
            if (k1, k2) == (0, 0) or (k1, k2) in modes:
                continue
            z = complex(rng.standard_normal(), rng.standard_normal())
            modes[(k1, k2)] = z
            modes[(-k1, -k2)] = z.conjugate()
    return modes


def build_v0h(spec: ExampleSpec, grid2: TorusGrid | None = None) -> SpectralField:
    """Two-component divergence-free field with spectrum in [-N0, N0]^2.

    Generated as the perp-gradient of a random band-limited stream function,
    so horizontal divergence-freeness holds at coefficient level, then
    rescaled to the target L^2 norm.
    """
    if grid2 is None:
        grid2 = TorusGrid(2, spec.horizontal_resolution)
    if 2 * spec.N0 > grid2.dealias_cutoff:
        raise CapacityError("horizontal band does not fit the dealiased grid")
    psi = np.zeros((1,) + grid2.shape, dtype=np.complex128)
    n = grid2.resolution
    for (k1, k2), z in _band_stream_modes(spec.N0, spec.seed).items():
        psi[0, k1 % n, k2 % n] = z
    kx, ky = grid2.kvec
    v = np.concatenate([-1j * ky * psi, 1j * kx * psi], axis=0)
    out = SpectralField(grid2, v)
    from .operators import l2_norm

    nrm = l2_norm(out)
    if nrm > 0.0 and spec.amplitude > 0.0:
        out = out * (spec.amplitude / nrm)
    return out


def make_example_slab(spec: ExampleSpec, grid2: TorusGrid | None = None) -> SlabField:
    """The example datum in factored form: one vertical mode m = N."""
    v0h = build_v0h(spec, grid2)
    g = v0h.grid
    kx, ky = g.kvec
    div_h = 1j * kx * v0h.coeffs[0] + 1j * ky * v0h.coeffs[1]
    a = np.zeros((3,) + g.shape, dtype=np.complex128)
    b = np.zeros_like(a)
    a[0] = spec.N * v0h.coeffs[0]
    a[1] = spec.N * v0h.coeffs[1]
    b[2] = -div_h
    return SlabField(g, 3, {spec.N: (a, b)})


def make_example(spec: ExampleSpec, grid3: TorusGrid) -> SpectralField:
    """Materialize the example datum on a 3-D grid.

    The quadratic interactions live at vertical frequency 2N, so the datum is
    only admissible when 2N sits inside the dealiased band.
    """
    if grid3.dim != 3:
        raise DomainError("make_example targets a 3-D grid")
    if 2 * spec.N > grid3.dealias_cutoff:
        raise CapacityError(
            f"2N = {2 * spec.N} exceeds the dealias cutoff "
            f"{grid3.dealias_cutoff:.1f} of a resolution-{grid3.resolution} grid")
    if 2 * spec.N0 > grid3.dealias_cutoff:
        raise CapacityError("horizontal band does not fit the dealiased grid")
    slab = make_example_slab(spec, grid3.horizontal())
    return slab_to_field3(slab, grid3)


# ---------------------------------------------------------------------------
# free evolution and its interactions (all exact in t)

def free_evolution_slab(spec: ExampleSpec, t: float,
                        grid2: TorusGrid | None = None) -> SlabField:
    return slab_heat(make_example_slab(spec, grid2), t)


def _uf_cached(spec: ExampleSpec, grid2: TorusGrid):
    base = make_example_slab(spec, grid2)

    @lru_cache(maxsize=64)
    def at(t: float) -> SlabField:
        return slab_heat(base, t)

    return at


def _projected_self_interaction(uf_t: SlabField) -> SlabField:
    """P(u_F . grad u_F) at one time, in factored form."""
    return slab_leray(slab_advect(uf_t, uf_t))


def _log_times(lo: float, hi: float, n: int):
    return np.exp(np.linspace(np.log(lo), np.log(hi), n))


@dataclass
class TruncationInfo:
    t_hi: float
    head: float
    tail: float


def _l1_time_integral(times, values, decay_rate: float):
    """Trapezoid plus analytic head (flat integrand) and exponential tail."""
    times = np.asarray(times)
    values = np.asarray(values, dtype=np.float64)
    core = float(np.trapezoid(values, x=times))
    head = float(values[0] * times[0])
    tail = float(values[-1] / decay_rate) if decay_rate > 0 else 0.0
    return core + head + tail, TruncationInfo(float(times[-1]), head, tail)


# ---------------------------------------------------------------------------
# the three admissibility functionals

def check_h1(spec: ExampleSpec, n_time: int = 120, window: float = 40.0):
    """||mean(u0)||_{L^2} + int_0^inf ||M P(u_F . grad u_F)(t)||_{L^2} dt.

    The mean of the example datum vanishes identically; the interaction term
    decays like exp(-2 t N^2), which sets the quadrature window and the
    analytic tail bound.
    """
    grid2 = TorusGrid(2, spec.horizontal_resolution)
    uf = _uf_cached(spec, grid2)
    from .operators import l2_norm

    n2 = float(spec.N) ** 2
    times = _log_times(1e-6 / n2, window / n2, n_time)
    vals = [l2_norm(slab_mean(_projected_self_interaction(uf(t)))) for t in times]
    integral, trunc = _l1_time_integral(times, vals, 2.0 * n2)
    return integral, trunc


def check_h2(spec: ExampleSpec, n_quad: int = 128):
    """B^{-1}_{inf,2} norm of the oscillating part of the datum (heat flow).

    Every mode of the datum has |k|^2 >= N^2, so the heat integrand dies at
    rate 2 N^2 and the quadrature window can track it.
    """
    grid2 = TorusGrid(2, spec.horizontal_resolution)
    slab0 = make_example_slab(spec, grid2)
    n2 = float(spec.N) ** 2
    quad = HeatQuadrature(1e-6 / n2, 20.0 / n2, n_quad)
    return slab_besov_heat(slab0, 1.0, np.inf, 2.0, quad)


def _solve_u2d(spec: ExampleSpec, grid2: TorusGrid, window: float, n_steps: int):
    """Short-window 2-D solve: the example has mean-free data, so v0 = 0 and
    the flow is driven entirely by the interaction forcing."""
    uf = _uf_cached(spec, grid2)
    n2 = float(spec.N) ** 2
    t_hi = window / n2

    @lru_cache(maxsize=16)
    def f_at(t: float) -> SpectralField:
        return -1.0 * slab_mean(_projected_self_interaction(uf(t)))

    forcing = TimeSampledField.from_closure(np.array([0.0, t_hi]), f_at)
    v0 = SpectralField.zeros(grid2, 3)
    cfg = SolverConfig(dt=t_hi / n_steps, t_end=t_hi, snapshot_stride=1,
                       check_cfl=False)
    traj, _ = solve_ns2d(v0, forcing, cfg)
    return traj


@dataclass
class H3Parts:
    oscillating: float
    interaction: float
    total: float
    truncation: dict = dc_field(default_factory=dict)


def h3_parts(spec: ExampleSpec, p: float, n_outer: int = 64, n_inner: int = 72,
             window: float = 40.0, n2d_steps: int = 256) -> H3Parts:
    """The two pieces of the third functional and the norm of their sum.

    oscillating: (Id - M) P(u_F . grad u_F); interaction: Q(u_2D, u_F); both
    measured in L^1(R+; B^{-1+3/p}_{p,2}) with the heat characterization.
    """
    if not p > 3:
        raise DomainError("Besov index p must exceed 3")
    grid2 = TorusGrid(2, spec.horizontal_resolution)
    uf = _uf_cached(spec, grid2)
    u2d = _solve_u2d(spec, grid2, window, n2d_steps)

    n2 = float(spec.N) ** 2
    s = 1.0 - 3.0 / p
    # the slowest inner decay is exp(-2 tau N^2) (vertical mode N of the
    # interaction term), so 16/N^2 already buries the integrand
    inner = HeatQuadrature(1e-5 / n2, 16.0 / n2, n_inner)
    times = _log_times(1e-6 / n2, window / n2, n_outer)

    osc_vals = np.empty(n_outer)
    q_vals = np.empty(n_outer)
    tot_vals = np.empty(n_outer)
    for i, t in enumerate(times):
        uft = uf(float(t))
        osc = slab_tilde(_projected_self_interaction(uft))
        qt = slab_q_form(slab_from_2d(u2d.at(float(t))), uft)
        osc_vals[i] = slab_besov_heat(osc, s, p, 2.0, inner)
        q_vals[i] = slab_besov_heat(qt, s, p, 2.0, inner)
        tot_vals[i] = slab_besov_heat(slab_add(osc, qt), s, p, 2.0, inner)

    osc_int, osc_tr = _l1_time_integral(times, osc_vals, 2.0 * n2)
    q_int, q_tr = _l1_time_integral(times, q_vals, n2)
    tot_int, tot_tr = _l1_time_integral(times, tot_vals, n2)
    return H3Parts(osc_int, q_int, tot_int,
                   truncation={"oscillating": osc_tr, "interaction": q_tr,
                               "total": tot_tr})


def check_h3(spec: ExampleSpec, p: float, **kwargs) -> float:
    """Theorem-range guard: the smallness statement needs p in (6, inf)."""
    if not p > 6:
        raise DomainError(f"the smallness condition requires p > 6, got {p}")
    return h3_parts(spec, p, **kwargs).total


# ---------------------------------------------------------------------------
# lower bound and smallness report

LOWER_BOUND_CONSTANT = 1.0 / (4.0 * np.pi * np.sqrt(np.e))


def lower_bound_check(spec: ExampleSpec, n_quad: int = 128):
    """sup_t sqrt(t) ||S(t) u0^h||_{L^inf} against its explicit lower bound.

    The left side is a grid max over log-spaced times (an underestimate of
    the true sup, so a nonnegative margin is conservative); the right side
    carries the constant 1/(4 pi sqrt(e)).
    """
    if spec.N < spec.N0:
        raise DomainError("the lower bound derivation needs N >= N0")
    grid2 = TorusGrid(2, spec.horizontal_resolution)
    slab0 = make_example_slab(spec, grid2)
    # horizontal components only
    horiz = {m: (np.concatenate([a[:2], np.zeros_like(a[:1])]),
                 np.concatenate([b[:2], np.zeros_like(b[:1])]))
             for m, (a, b) in slab0.terms.items()}
    u0h = SlabField(grid2, 3, horiz)
    n2 = float(spec.N) ** 2
    quad = HeatQuadrature(1e-4 / n2, 50.0 / n2, n_quad)
    lhs = slab_besov_heat(u0h, 1.0, np.inf, np.inf, quad)
    from .operators import l2_norm

    rhs = LOWER_BOUND_CONSTANT * l2_norm(build_v0h(spec, grid2))
    return lhs, rhs, lhs - rhs


def smallness_exponent(a_value: float, c0: float) -> float:
    """C0 * A^2 (1 + A log(e + A))^2."""
    return c0 * a_value ** 2 * (1.0 + a_value * math.log(math.e + a_value)) ** 2


@dataclass
class HypothesisReport:
    """Everything the admissibility condition needs, plus context."""

    N: int
    N0: int
    amplitude: float
    p: float
    h1_value: float
    h2_value: float
    h3_value: float
    a_value: float
    b_value: float
    h3_oscillating: float
    h3_interaction: float
    lower_bound_lhs: float
    lower_bound_rhs: float
    lower_bound_margin: float
    ratio_ladder: dict
    log_smallness: dict
    predicted_a_trend: float
    predicted_b_trend: float
    truncation: dict

    def to_dict(self):
        return {
            "N": self.N, "N0": self.N0, "amplitude": self.amplitude, "p": self.p,
            "h1": self.h1_value, "h2": self.h2_value, "h3": self.h3_value,
            "A": self.a_value, "B": self.b_value,
            "h3_oscillating": self.h3_oscillating,
            "h3_interaction": self.h3_interaction,
            "lower_bound_lhs": self.lower_bound_lhs,
            "lower_bound_rhs": self.lower_bound_rhs,
            "lower_bound_margin": self.lower_bound_margin,
            "ratio_ladder": {repr(k): v for k, v in self.ratio_ladder.items()},
            "log_smallness": {repr(k): v for k, v in self.log_smallness.items()},
            "predicted_a_trend": self.predicted_a_trend,
            "predicted_b_trend": self.predicted_b_trend,
            "truncation": self.truncation,
        }


C0_LADDER = (0.1, 1.0, 10.0)


def smallness_report(spec: ExampleSpec, p: float = 8.0,
                     c0_ladder=C0_LADDER, **h3_kwargs) -> HypothesisReport:
    """Assemble A = max(h1, h2), B = h3 and the smallness ratio family.

    The universal constant of the admissibility statement is nonconstructive,
    so the ratio B exp(C0 A^2 (1 + A log(e+A))^2) * C0 is reported for a
    ladder of plausible C0 values, alongside the predicted large-N trends
    (log N)^{2/9} for A and N^{-1/4} for B; the trend values are printed next
    to the measured ones, never asserted against them.
    """
    if not p > 6:
        raise DomainError(f"the smallness condition requires p > 6, got {p}")
    h1, h1_trunc = check_h1(spec)
    h2 = check_h2(spec)
    parts = h3_parts(spec, p, **h3_kwargs)
    a_value = max(h1, h2)
    b_value = parts.total
    lhs, rhs, margin = lower_bound_check(spec)

    ladder = {}
    logs = {}
    for c0 in c0_ladder:
        expo = smallness_exponent(a_value, c0)
        logs[c0] = (math.log(b_value) if b_value > 0 else -math.inf) + expo
        ladder[c0] = b_value * math.exp(min(expo, 700.0)) * c0

    return HypothesisReport(
        N=spec.N, N0=spec.N0, amplitude=spec.amplitude, p=p,
        h1_value=h1, h2_value=h2, h3_value=parts.total,
        a_value=a_value, b_value=b_value,
        h3_oscillating=parts.oscillating, h3_interaction=parts.interaction,
        lower_bound_lhs=lhs, lower_bound_rhs=rhs, lower_bound_margin=margin,
        ratio_ladder=ladder, log_smallness=logs,
        predicted_a_trend=math.log(spec.N) ** (2.0 / 9.0),
        predicted_b_trend=float(spec.N) ** (-0.25),
        truncation={"h1": vars(h1_trunc),
                    "h3": {k: vars(v) for k, v in parts.truncation.items()}},
    )


# ---------------------------------------------------------------------------
# scaling study

@dataclass
class ScanRow:
    N: int
    h1: float
    h2: float
    h2_per_amp: float
    h3: float
    h3_oscillating: float
    h3_interaction: float
    a_value: float
    b_value: float
    lower_bound_margin: float


@dataclass
class ScanTable:
    rows: list
    slopes: dict

    def n_values(self):
        return [r.N for r in self.rows]


def _loglog_slope(ns, values):
    ns = np.asarray(ns, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    good = values > 0
    if good.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ns[good]), np.log(values[good]), 1)[0])


def scaling_study(template: ExampleSpec, n_list, p: float = 8.0,
                  amplitude_rule=None, **h3_kwargs) -> ScanTable:
    """Evaluate the functionals across an N ladder and fit log-log slopes.

    amplitude_rule: optional map N -> target ||v0h||_{L^2}; by default the
    horizontal field is held fixed so the pure N-exponents emerge.
    """
    rows = []
    for n in n_list:
        amp = template.amplitude if amplitude_rule is None else float(amplitude_rule(n))
        spec = template.with_n(int(n), amplitude=amp)
        h1, _ = check_h1(spec)
        h2 = check_h2(spec)
        parts = h3_parts(spec, p, **h3_kwargs)
        _, _, margin = lower_bound_check(spec)
        rows.append(ScanRow(
            N=int(n), h1=h1, h2=h2,
            h2_per_amp=h2 / amp if amp > 0 else float("nan"),
            h3=parts.total, h3_oscillating=parts.oscillating,
            h3_interaction=parts.interaction,
            a_value=max(h1, h2), b_value=parts.total,
            lower_bound_margin=margin,
        ))
    ns = [r.N for r in rows]
    slopes = {
        "h1": _loglog_slope(ns, [r.h1 for r in rows]),
        "h2_per_amp": _loglog_slope(ns, [r.h2_per_amp for r in rows]),
        "h3": _loglog_slope(ns, [r.h3 for r in rows]),
        "h3_oscillating": _loglog_slope(ns, [r.h3_oscillating for r in rows]),
        "h3_interaction": _loglog_slope(ns, [r.h3_interaction for r in rows]),
        "lower_bound_margin": _loglog_slope(ns, [r.lower_bound_margin for r in rows]),
    }
    return ScanTable(rows, slopes)
