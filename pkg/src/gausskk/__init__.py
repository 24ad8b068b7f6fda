"""Gaussian-space tools for convex bodies: shell densities and their increments,
weak learners, Hermite weights, and a membership-query lower-bound simulator."""
from __future__ import annotations

__version__ = "0.1.0"

from ._mc import DensityEstimate, Estimate, workers
from .bodies import (Body, BodyKind, CheckResult, ball, build_random_polytope, build_random_symmetric_polytope,
                     check_convexity, check_symmetry, contains, cube, cube_half_width, empty_set, full_space,
                     half_volume_cube, halfspace, halfspace_intersection, slab, slab_conjunction)
from .errors import ContractViolation, DegenerateInput, QueryBudgetExceeded
from .sampling import (Plane2D, RngStream, cap_mass, cap_ratio_check, chi_cdf, chi_quantile, sample_gaussian,
                       sample_plane, sample_sphere, solve_slab_width)

__all__ = [
    "__version__",
    "Estimate",
    "DensityEstimate",
    "workers",
    "Body",
    "BodyKind",
    "CheckResult",
    "ball",
    "cube",
    "cube_half_width",
    "half_volume_cube",
    "halfspace",
    "halfspace_intersection",
    "slab",
    "slab_conjunction",
    "full_space",
    "empty_set",
    "build_random_polytope",
    "build_random_symmetric_polytope",
    "check_convexity",
    "check_symmetry",
    "contains",
    "ContractViolation",
    "DegenerateInput",
    "QueryBudgetExceeded",
    "Plane2D",
    "RngStream",
    "cap_mass",
    "cap_ratio_check",
    "chi_cdf",
    "chi_quantile",
    "sample_gaussian",
    "sample_plane",
    "sample_sphere",
    "solve_slab_width",
]
