"""Finite-dimensional laboratory for quasiconcave interpolation on lattice couples."""

from clinterp.couple import (
    Couple,
    approximation_sequence,
    cl_norm,
    factorize,
    intersection_norm,
    parse_couple,
    phi_space_equivalence,
    sum_norm,
)
from clinterp.lattice import (
    LatticeSpec,
    LatticeVector,
    linf,
    lp,
    norm,
    parse_lattice,
    riesz_decompose,
    submeasure_lp,
    vector,
    weighted_lp,
)
from clinterp.operators import (
    OperatorSpec,
    k_constant,
    l_convexity_probe,
    op_norm,
    rho_pq,
    verify_interpolation,
    verify_sum_regular,
)
from clinterp.pathology import (
    PathologySpace,
    b_union,
    full_sphere,
    kinfty1_certificate,
    lp_norm_simple,
    minimal_cover_brute,
    submeasure,
)
from clinterp.quasiconcave import (
    InterpolationFunction,
    affine_power,
    bk_decompose,
    min_function,
    mirror,
    parse_phi,
    power,
    split_convex_part,
    verify_bk,
)

__version__ = "0.1.0"

__all__ = [
    "Couple",
    "InterpolationFunction",
    "LatticeSpec",
    "LatticeVector",
    "OperatorSpec",
    "PathologySpace",
    "affine_power",
    "approximation_sequence",
    "b_union",
    "bk_decompose",
    "cl_norm",
    "factorize",
    "full_sphere",
    "intersection_norm",
    "k_constant",
    "kinfty1_certificate",
    "l_convexity_probe",
    "linf",
    "lp",
    "lp_norm_simple",
    "min_function",
    "minimal_cover_brute",
    "mirror",
    "norm",
    "op_norm",
    "parse_couple",
    "parse_lattice",
    "parse_phi",
    "phi_space_equivalence",
    "power",
    "rho_pq",
    "riesz_decompose",
    "split_convex_part",
    "sum_norm",
    "submeasure",
    "submeasure_lp",
    "vector",
    "verify_bk",
    "verify_interpolation",
    "verify_sum_regular",
    "weighted_lp",
]
