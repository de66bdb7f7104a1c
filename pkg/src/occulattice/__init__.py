"""Occupation-measure constants of symmetric transient random walks on Z^d.

The Green matrix ``G_A`` of a finite set ``A`` determines the exact law of the
total time spent in ``A``, its exponential tail rate and the growth constant
of the most visited translate of ``A``. This package computes those objects
and cross-checks them by simulation. It also follows the continuum limit
of the Perron eigenvalue.
"""

from .continuum import (
    DomainSpec,
    bessel_reference,
    convergence_study,
    discrete_lambda,
    lattice_cover,
    potential_density,
)
from .errors import OccuLatticeError
from .green import (
    GreenTable,
    escape_probability,
    green,
    green_mc_oracle,
    hit_probability,
)
from .law import OccupationLaw, ball_weights, occupation_law, occupation_pmf, occupation_survival, tail_asymptote
from .montecarlo import (
    SimConfig,
    estimate_tail_slope,
    limit_trend,
    simulate_occupation,
    sup_occupation,
)
from .spectral import (
    SiteSet,
    ball1,
    ball_constant,
    build_green_matrix,
    eigendecompose,
    lambda_max,
    limit_constant,
    neighbor_bound_check,
    origin_set,
    pair_set,
    sphere1,
    sphere_constant,
    two_point_constant,
)
from .walk import WalkSpec, builtin_srw, characteristic_function, covariance, srw, validate_walk

__version__ = "0.1.0"

__all__ = [
    "DomainSpec", "GreenTable", "OccuLatticeError", "OccupationLaw", "SimConfig", "SiteSet", "WalkSpec",
    "ball1", "ball_constant", "ball_weights", "bessel_reference", "build_green_matrix", "builtin_srw",
    "characteristic_function", "convergence_study", "covariance", "discrete_lambda", "eigendecompose",
    "escape_probability", "estimate_tail_slope", "green", "green_mc_oracle", "hit_probability",
    "lambda_max", "lattice_cover", "limit_constant", "limit_trend", "neighbor_bound_check",
    "occupation_law", "occupation_pmf", "occupation_survival", "origin_set", "pair_set",
    "potential_density", "simulate_occupation", "sphere1", "sphere_constant", "srw", "sup_occupation",
    "tail_asymptote", "two_point_constant", "validate_walk",
]
