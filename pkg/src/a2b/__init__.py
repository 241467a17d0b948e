"""Exact model of the rank two building for SL(3, Q) at a prime p.

Points are additive norms up to constant, flats and their boundary data are
rational frames and flags, and every predicate the package exposes is decided
in exact arithmetic. Floats appear only in rendering and reporting.
"""

from .exact import (
    INF,
    GeometryError,
    ParameterError,
    RadicalValue,
    SingularMatrix,
    compare_radical,
    compare_radical_vs_sqrt,
    elementary_divisors,
    is_prime,
    valuation,
)
from .core import (
    AngleValue,
    NormPoint,
    StabilizationError,
    angle,
    apply_gl,
    common_frame,
    comparison_angle,
    distance,
    distance2,
    geodesic_point,
    in_apartment,
    chart_weights,
    is_vertex,
    lattice_point,
    norm_point,
    points_equal,
    standard_point,
)

__version__ = "0.1.0"
