"""The five central-force problem families: equations of motion in polar
components and their conserved quantities.

All equations are written as canonical expressions equal to zero, in the
chart (t; r, angle) with time derivatives as derivative nodes.  Parameters
enter as symbols; numeric values live on ProblemSpec and are bound only by
the numerical verifier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .expr import (
    Deriv,
    Expr,
    ExprError,
    Role,
    Symbol,
    add,
    deriv,
    div,
    equals,
    mul,
    neg,
    pow_,
    sym,
)

# shared symbol inventory ----------------------------------------------------

T = sym("t", Role.INDEPENDENT)
R = sym("r", Role.DEPENDENT)
THETA = sym("theta", Role.DEPENDENT)
PHI = sym("phi", Role.DEPENDENT)

# independent variables of reduced charts (the angle doubles as the curve
# parameter after reduction, so it reappears with the independent role)
TH = sym("theta", Role.INDEPENDENT)
PH = sym("phi", Role.INDEPENDENT)
Y = sym("y", Role.INDEPENDENT)
X = sym("x", Role.INDEPENDENT)

U = sym("u", Role.DEPENDENT)
U1 = sym("u1", Role.DEPENDENT)
U2 = sym("u2", Role.DEPENDENT)
W1 = sym("w1", Role.DEPENDENT)
W2 = sym("w2", Role.DEPENDENT)
W3 = sym("w3", Role.DEPENDENT)
W4 = sym("w4", Role.DEPENDENT)

MU = sym("mu")
ALPHA = sym("alpha")
LAM = sym("lam")
NU = sym("nu")
L = sym("L")
L0 = sym("L0")
A = sym("A")
BETA = sym("beta")
SCONE = sym("S")  # sine of the cone half-angle (MICZ)

ETA = sym("eta", Role.BOUND)
SB = sym("s", Role.BOUND)

R_DOT = deriv(R, T)
R_DDOT = deriv(R, T, 2)
THETA_DOT = deriv(THETA, T)
THETA_DDOT = deriv(THETA, T, 2)
PHI_DOT = deriv(PHI, T)
PHI_DDOT = deriv(PHI, T, 2)


class Family(Enum):
    KEPLER = "kepler"
    KEPLER_DRAG = "kepler_drag"
    POWER_LAW = "power_law"
    CONE_DRAG = "cone_drag"
    MICZ = "micz"


class ProblemError(ExprError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    """One problem family plus numeric parameter values.

    alpha is the drag coefficient for KEPLER_DRAG and the (exact rational)
    force exponent for POWER_LAW.  g must be a positive function of t for
    CONE_DRAG, given as an expression in T.
    """

    family: Family
    mu: float = 1.0
    alpha: float | Fraction = 0
    lam: float = 0.0
    nu: float = 0.0
    g: Expr | None = None

    def __post_init__(self):
        if self.family == Family.CONE_DRAG and self.g is None:
            raise ProblemError("cone_drag requires g(t)")
        if self.family == Family.POWER_LAW:
            object.__setattr__(self, "alpha", Fraction(self.alpha))

    @property
    def micz_special_case(self) -> bool:
        """True when the inverse-cube coupling satisfies 2*nu = -lam^2."""
        return self.family == Family.MICZ and abs(2 * self.nu + self.lam**2) < 1e-12

    @property
    def angle(self) -> Symbol:
        return PHI if self.family == Family.MICZ else THETA

    def parameter_env(self) -> dict[Expr, float]:
        env: dict[Expr, float] = {MU: float(self.mu)}
        if self.family == Family.KEPLER_DRAG:
            env[ALPHA] = float(self.alpha)
        if self.family == Family.MICZ:
            env[LAM] = float(self.lam)
            env[NU] = float(self.nu)
        return env


@dataclass(frozen=True)
class ComponentEquations:
    radial: Expr
    transverse: Expr
    chart: tuple[Symbol, ...]


@dataclass(frozen=True)
class ConservedQuantity:
    name: str
    expression: Expr


def _cone_drag_factor(g: Expr) -> Expr:
    from .expr import differentiate

    g_dot = differentiate(g, T)
    return add(div(g_dot, mul(2, g)), div(mul(3, R_DOT), mul(2, R)))


def equations_of_motion(spec: ProblemSpec) -> ComponentEquations:
    """Radial and transverse components, canonicalized, as = 0 expressions."""
    f = spec.family
    if f == Family.KEPLER:
        radial = R_DDOT - R * THETA_DOT**2 + MU / R**2
        transverse = R * THETA_DDOT + 2 * R_DOT * THETA_DOT
        return ComponentEquations(radial, transverse, (T, R, THETA))
    if f == Family.KEPLER_DRAG:
        radial = R_DDOT - R * THETA_DOT**2 + ALPHA * R_DOT / R**2 + MU / R**2
        transverse = R * THETA_DDOT + 2 * R_DOT * THETA_DOT + ALPHA * THETA_DOT / R
        return ComponentEquations(radial, transverse, (T, R, THETA))
    if f == Family.POWER_LAW:
        exponent = Fraction(spec.alpha) + 1
        radial = R_DDOT - R * THETA_DOT**2 + MU * pow_(R, exponent)
        transverse = R * THETA_DDOT + 2 * R_DOT * THETA_DOT
        return ComponentEquations(radial, transverse, (T, R, THETA))
    if f == Family.CONE_DRAG:
        if spec.g is None:
            raise ProblemError("cone_drag requires g(t)")
        # the drag factor enters radially with the sign of the vector
        # equation of motion, matching the damped transverse component
        drag = _cone_drag_factor(spec.g)
        radial = R_DDOT - R * THETA_DOT**2 - drag * R_DOT + MU * spec.g * R
        transverse = (
            R * THETA_DDOT + 2 * R_DOT * THETA_DOT - drag * R * THETA_DOT
        )
        return ComponentEquations(radial, transverse, (T, R, THETA))
    if f == Family.MICZ:
        radial = (
            R_DDOT - SCONE**2 * R * PHI_DOT**2 + MU / R**2 + 2 * NU / R**3
        )
        transverse = R * PHI_DDOT + 2 * R_DOT * PHI_DOT
        return ComponentEquations(radial, transverse, (T, R, PHI))
    raise ProblemError(f"unknown family {f}")


def acceleration_rules(spec: ProblemSpec) -> dict[Expr, Expr]:
    """Second derivatives solved from the equations of motion (on-shell
    substitution rules)."""
    eqs = equations_of_motion(spec)
    ang = spec.angle
    rdd = deriv(R, T, 2)
    add_ = deriv(ang, T, 2)
    r_rhs = neg(eqs.radial - rdd)
    ang_rhs = neg(div(eqs.transverse - R * add_, R))
    return {rdd: r_rhs, add_: ang_rhs}


def conserved_quantities(spec: ProblemSpec) -> list[ConservedQuantity]:
    f = spec.family
    if f in (Family.KEPLER, Family.POWER_LAW):
        return [ConservedQuantity("L", R**2 * THETA_DOT)]
    if f == Family.KEPLER_DRAG:
        return [
            ConservedQuantity("L + alpha*theta", R**2 * THETA_DOT + ALPHA * THETA)
        ]
    if f == Family.CONE_DRAG:
        expr = R**2 * THETA_DOT * pow_(spec.g * R**3, Fraction(-1, 2))
        return [ConservedQuantity("A", expr)]
    if f == Family.MICZ:
        ell = R**2 * PHI_DOT
        return [
            ConservedQuantity("L", pow_(ell**2 - LAM**2, Fraction(1, 2))),
            ConservedQuantity("P", ell),
        ]
    raise ProblemError(f"unknown family {f}")


def conserved_drift_is_zero(spec: ProblemSpec, q: ConservedQuantity) -> bool:
    """Symbolic check: total time derivative of q vanishes on-shell."""
    from .expr import ZERO, canonicalize, differentiate, substitute

    dq = differentiate(q.expression, T)
    on_shell = substitute(dq, acceleration_rules(spec))
    return canonicalize(on_shell) == ZERO
