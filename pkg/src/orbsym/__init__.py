"""Symbolic reduction of central-force problems to a harmonic oscillator plus
a conservation law, with certified symmetry catalogs and a numerical orbit
oracle."""

from .expr import (
    Expr,
    ExprError,
    Role,
    Symbol,
    canonicalize,
    differentiate,
    equals,
    eval_numeric,
    parse_expression,
    substitute,
    to_infix,
    to_prefix,
)
from .problems import (
    ComponentEquations,
    ConservedQuantity,
    Family,
    ProblemSpec,
    conserved_quantities,
    equations_of_motion,
)
from .reduction import (
    ReducedSystem,
    ReductionError,
    WSystem,
    change_independent,
    nucci_eliminate,
    nucci_reduce,
    nucci_w_system,
    particular_solution,
    reduce_direct,
)
from .symmetry import (
    Generator,
    ProlongedField,
    back_transform,
    determining_residual,
    micz_catalog,
    micz_catalog_entries,
    prolong2,
    reduced_catalog,
)
from .numverify import (
    OrbitState,
    Trajectory,
    conserved_drift,
    estimate_frequency,
    integrate_orbit,
    oscillator_residual,
    symmetry_defect,
)

__version__ = "0.1.0"
