"""Pseudo-spectral Navier-Stokes laboratory on the 2- and 3-torus.

Fourier fields with exact heat flow and Leray projection, dyadic and
heat-flow Besov norms, integrating-factor RK4 solvers for the full,
two-dimensional-with-forcing and perturbed systems, the u_F + u_2D + R
decomposition pipeline with its weighted-norm fixed point, and the
large-initial-data example family with its admissibility functionals.
"""

from .backend import NUMBA_ENABLED, backend_name
from .conditions import (ExampleSpec, HypothesisReport, build_v0h, check_h1,
                         check_h2, check_h3, h3_parts, lower_bound_check,
                         make_example, make_example_slab, scaling_study,
                         smallness_report)
from .errors import (BlowUpError, CapacityError, ContractViolationError,
                     DimensionError, DomainError, GridMismatchError,
                     TorusNSError, ValidationError)
from .field import SpectralField, TimeSampledField
from .grid import TorusGrid
from .lp import (DEFAULT_CHI, BesovParams, ChiProfile, HeatQuadrature,
                 LPDecomposition, besov_dyadic, besov_heat, decompose,
                 lp_block, lp_lowpass, x_lambda_norm)
from .operators import (advect, apply_heat, dealias, divergence,
                        divergence_defect, embed_2d, energy, horizontal_mean,
                        hs_norm, l2_inner, l2_norm, leray_project, linf_norm,
                        lp_norm, norm, q_form, random_field, tilde_part)
from .pipeline import (PicardResult, PipelineResult, build_f2d, build_uF,
                       picard_pns, run_pipeline)
from .solver import (DiagnosticsSeries, SolverConfig, e0_quantity, solve_ns2d,
                     solve_ns3d, solve_pns, step)

__version__ = "0.1.0"
