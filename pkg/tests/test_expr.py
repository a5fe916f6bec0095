import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from orbsym.expr import (
    Add,
    BoundVariableError,
    EvalError,
    ExprError,
    Mul,
    Neg,
    Pow,
    Rat,
    Role,
    Symbol,
    ZERO,
    ONE,
    add,
    canonicalize,
    cos_,
    deriv,
    differentiate,
    equals,
    eval_numeric,
    exp_,
    expi,
    expi_join,
    expi_split,
    free_symbols,
    integral,
    mul,
    neg,
    parse_expression,
    pow_,
    rat,
    sin_,
    substitute,
    sym,
    to_infix,
    to_prefix,
    total_derivative,
)

THETA = sym("theta", Role.INDEPENDENT)
T = sym("t", Role.INDEPENDENT)
Y = sym("y", Role.INDEPENDENT)
U = sym("u", Role.DEPENDENT)
U1 = sym("u1", Role.DEPENDENT)
U2 = sym("u2", Role.DEPENDENT)
W1 = sym("w1", Role.DEPENDENT)
R = sym("r", Role.DEPENDENT)
MU = sym("mu")
L = sym("L")
L0 = sym("L0")
LAM = sym("lam")
ALPHA = sym("alpha")
BETA = sym("beta")
S = sym("S")
ETA = sym("eta", Role.BOUND)
X = sym("x")


class TestDifferentiate:
    def test_table_derivative(self):
        assert differentiate(sin_(THETA), THETA) == cos_(THETA)

    def test_power_rule(self):
        e = MU - U2**2 / W1
        assert equals(differentiate(e, W1), U2**2 / W1**2)

    def test_chain_to_derivative_nodes(self):
        e = R**2 * deriv(U, T)
        d = differentiate(e, T)
        expected = 2 * R * deriv(R, T) * deriv(U, T) + R**2 * deriv(U, T, 2)
        assert equals(d, expected)

    def test_leibniz_matches_finite_differences(self):
        v = integral(sin_(THETA - ETA) * pow_(ALPHA * ETA + BETA, -2), ETA, THETA)
        dv = differentiate(v, THETA)
        env = {ALPHA: 1.0, BETA: 2.0}
        h = 1e-5
        fd = (
            eval_numeric(v, {**env, THETA: 1.0 + h})
            - eval_numeric(v, {**env, THETA: 1.0 - h})
        ) / (2 * h)
        an = eval_numeric(dv, {**env, THETA: 1.0})
        assert abs(fd - an) < 1e-6

    def test_bound_variable_rejected(self):
        v = integral(sin_(THETA - ETA), ETA, THETA)
        with pytest.raises(BoundVariableError):
            differentiate(v, ETA)

    def test_parameter_is_constant(self):
        assert differentiate(MU * L, THETA) == ZERO


class TestSubstitute:
    def test_shift_by_constant(self):
        e = deriv(U, THETA, 2) + U
        out = substitute(
            e, {U: U1 + MU * L**-2, deriv(U, THETA, 2): deriv(U1, THETA, 2)}
        )
        assert equals(out, deriv(U1, THETA, 2) + U1 + MU * L**-2)

    def test_inverse_radius(self):
        e = R**2 * deriv(U, T)
        out = substitute(e, {R: pow_(U2, -1)})
        assert equals(out, deriv(U, T) / U2**2)

    def test_monopole_cone_collapse(self):
        e = S**2 * (1 + LAM**2 * L**-2)
        out = substitute(e, {S: L * pow_(L**2 + LAM**2, Fraction(-1, 2))})
        assert out == ONE

    def test_bound_symbol_binding_rejected(self):
        with pytest.raises(ExprError):
            substitute(integral(ETA, ETA, THETA), {ETA: X})

    def test_capture_rejected(self):
        v = integral(sin_(X - ETA), ETA, THETA)
        with pytest.raises(ExprError):
            substitute(v, {X: ETA + 1})


class TestCanonicalize:
    def test_pythagorean_identity(self):
        assert canonicalize(sin_(THETA) ** 2 + cos_(THETA) ** 2) == ONE

    def test_additive_inverse(self):
        assert canonicalize(X + neg(X)) == ZERO

    def test_raw_nodes_lowered(self):
        raw = Neg(Add((X, Rat(Fraction(1)))))
        assert equals(canonicalize(raw), -1 - X + 1 - 1)

    def test_double_angle(self):
        assert equals(sin_(2 * THETA), 2 * sin_(THETA) * cos_(THETA))

    def test_order_reduction_identity_vs_numeric(self):
        y = Y
        w1p = deriv(W1, y)
        w1pp = deriv(W1, y, 2)
        lhs = U2**2 * (w1pp / W1**2 - 2 * w1p**2 / W1**3)
        rhs = neg(U2**2 * differentiate(differentiate(pow_(W1, -1), y), y))
        assert equals(lhs, rhs)
        import random

        rng = random.Random(0)
        for _ in range(100):
            env = {
                W1: rng.uniform(0.5, 2.0),
                U2: rng.uniform(-2.0, 2.0),
                w1p: rng.uniform(-1.0, 1.0),
                w1pp: rng.uniform(-1.0, 1.0),
            }
            assert abs(eval_numeric(lhs, env) - eval_numeric(rhs, env)) < 1e-9

    def test_sum_against_denominator(self):
        b = L**2 + LAM**2
        e = L**2 * pow_(b, -1) + LAM**2 * pow_(b, -1)
        assert canonicalize(e) == ONE

    def test_perfect_power_normalization(self):
        q = canonicalize((X + ONE) ** 2)
        assert equals(mul(pow_(q, -1), (X + ONE) ** 2), ONE)


class TestEvalNumeric:
    def test_simple(self):
        assert eval_numeric(MU * L**-2, {MU: 1.0, L: 2.0}) == 0.25

    def test_quadrature_cross_check(self):
        v = integral(sin_(THETA - ETA) * pow_(L0 - ALPHA * ETA, -2), ETA, THETA)
        env = {THETA: 1.0, L0: 2.0, ALPHA: 0.1}
        a = eval_numeric(v, env, quadrature_tol=1e-8)
        b = eval_numeric(v, env, quadrature_tol=5e-9)
        assert abs(a - b) < 1e-8

    def test_singularity(self):
        with pytest.raises(EvalError):
            eval_numeric(pow_(R, -1), {R: 0.0})

    def test_unbound(self):
        with pytest.raises(EvalError):
            eval_numeric(MU * L, {MU: 1.0})


class TestExpI:
    def test_split(self):
        re, im = expi_split(2 * expi(THETA))
        assert equals(re, 2 * cos_(THETA))
        assert equals(im, 2 * sin_(THETA))

    def test_product_collapses(self):
        assert expi(THETA) * expi(-THETA) == ONE

    def test_join_round_trip(self):
        e = 3 * X * expi(THETA)
        assert equals(expi_join(*expi_split(e)), e)

    def test_join_outside_domain_raises(self):
        # double angles expand on canonicalization; the join only covers
        # single-angle combinations
        e = expi(2 * THETA)
        with pytest.raises(ExprError):
            expi_join(*expi_split(e))

    def test_conjugate_join(self):
        e = expi(neg(THETA))
        assert equals(expi_join(*expi_split(e)), e)

    def test_split_through_integral(self):
        v = integral(R * expi(THETA), ETA, T)
        re, im = expi_split(v)
        assert equals(re, integral(R * cos_(THETA), ETA, T))
        assert equals(im, integral(R * sin_(THETA), ETA, T))


class TestSerialization:
    def test_prefix_forms(self):
        assert to_prefix(MU * L**-2) == "(* mu (^ L -2))"
        assert to_prefix(deriv(U1, THETA, 2) + U1) == "(+ u1 (deriv u1 theta 2))"
        assert to_prefix(rat(-1, 2)) == "-1/2"

    def test_prefix_stable_under_recanonicalization(self):
        e = canonicalize((X + 1) ** 2 * sin_(2 * THETA) - MU / L**2)
        assert to_prefix(canonicalize(e)) == to_prefix(e)

    def test_infix_uses_familiar_names(self):
        s = to_infix(MU * pow_(L**2 + LAM**2, -1))
        assert "μ" in s and "λ" in s


class TestParser:
    def test_exponential_decay(self):
        g = parse_expression("exp(-t)", {"t": T})
        assert g == exp_(neg(T))

    def test_arithmetic(self):
        e = parse_expression("2*t^2 - 1/2", {"t": T})
        assert equals(e, 2 * T**2 - rat(1, 2))

    def test_rejects_unknown_name(self):
        with pytest.raises(ExprError):
            parse_expression("exp(-q)", {"t": T})

    def test_rejects_garbage(self):
        with pytest.raises(ExprError):
            parse_expression("exp(-t", {"t": T})


# ---------------------------------------------------------------------------
# property tests


_leaves = st.sampled_from([X, MU, L, THETA, ONE, rat(2), rat(-1, 2), U1])


def _exprs(max_depth=8):
    return st.recursive(
        _leaves,
        lambda children: st.one_of(
            st.tuples(children, children).map(lambda ab: add(*ab)),
            st.tuples(children, children).map(lambda ab: mul(*ab)),
            children.map(lambda a: neg(a)),
            children.map(sin_),
            children.map(cos_),
            st.tuples(children, st.sampled_from([-2, -1, 2, 3])).map(
                lambda ae: pow_(ae[0], ae[1])
            ),
        ),
        max_leaves=max_depth,
    )


@settings(max_examples=80, deadline=None)
@given(_exprs())
def test_canonicalize_idempotent(e):
    c = canonicalize(e)
    assert canonicalize(c) == c


@settings(max_examples=60, deadline=None)
@given(_exprs(max_depth=5))
def test_equals_implies_numeric_equal(e):
    c = canonicalize(e)
    if not equals(e, c):  # pragma: no cover - equals is reflexive here
        return
    env = {X: 0.7, MU: 1.3, L: 1.1, THETA: 0.9, U1: 0.4}
    try:
        a = eval_numeric(e, env)
        b = eval_numeric(c, env)
    except EvalError:
        return
    assert abs(a - b) < 1e-9 * max(1.0, abs(a))


@settings(max_examples=60, deadline=None)
@given(_exprs(max_depth=5))
def test_differentiate_matches_finite_differences(e):
    d = differentiate(e, THETA)
    base = {X: 0.7, MU: 1.3, L: 1.1, U1: 0.4}
    h = 1e-6
    try:
        f1 = eval_numeric(e, {**base, THETA: 0.9 + h})
        f0 = eval_numeric(e, {**base, THETA: 0.9 - h})
        an = eval_numeric(d, {**base, THETA: 0.9})
    except EvalError:
        return
    fd = (f1 - f0) / (2 * h)
    scale = max(1.0, abs(an), abs(fd))
    assert abs(fd - an) / scale < 1e-4


@settings(max_examples=50, deadline=None)
@given(_exprs(max_depth=5), st.integers(-3, 3))
def test_substitution_commutes_with_differentiation_for_constants(e, c):
    lhs = differentiate(substitute(e, {MU: rat(c)}), THETA)
    rhs = substitute(differentiate(e, THETA), {MU: rat(c)})
    assert equals(lhs, rhs)


@settings(max_examples=60, deadline=None)
@given(_exprs(max_depth=6))
def test_differentiate_at_100_points(e):
    # spot agreement at several random points away from singularities
    import random

    d = differentiate(e, THETA)
    rng = random.Random(1)
    checked = 0
    for _ in range(10):
        env = {
            X: rng.uniform(0.5, 1.5),
            MU: rng.uniform(0.5, 1.5),
            L: rng.uniform(0.8, 1.6),
            U1: rng.uniform(-0.5, 0.5),
        }
        th = rng.uniform(0.3, 2.0)
        h = 1e-6
        try:
            f1 = eval_numeric(e, {**env, THETA: th + h})
            f0 = eval_numeric(e, {**env, THETA: th - h})
            an = eval_numeric(d, {**env, THETA: th})
        except EvalError:
            continue
        fd = (f1 - f0) / (2 * h)
        scale = max(1.0, abs(an), abs(fd))
        if abs(fd) > 1e6:  # steep spots amplify fd error
            continue
        assert abs(fd - an) / scale < 1e-4
        checked += 1
