import pytest

from orbsym.expr import ZERO, canonicalize, deriv, equals, substitute, to_prefix
from orbsym.problems import (
    ALPHA,
    Family,
    L,
    LAM,
    MU,
    NU,
    PHI,
    PHI_DOT,
    ProblemSpec,
    ProblemError,
    R,
    R_DDOT,
    R_DOT,
    SCONE,
    T,
    THETA,
    THETA_DOT,
    acceleration_rules,
    conserved_drift_is_zero,
    conserved_quantities,
    equations_of_motion,
)


class TestEquationsOfMotion:
    def test_kepler_components(self, kepler):
        eqs = equations_of_motion(kepler)
        assert equals(eqs.radial, R_DDOT - R * THETA_DOT**2 + MU / R**2)
        assert equals(eqs.transverse, R * deriv(THETA, T, 2) + 2 * R_DOT * THETA_DOT)

    def test_inverse_cube_is_kepler(self, kepler, power_law_cube):
        a = equations_of_motion(power_law_cube)
        b = equations_of_motion(kepler)
        assert equals(a.radial, b.radial)
        assert equals(a.transverse, b.transverse)

    def test_zero_drag_is_kepler(self, kepler):
        drag0 = equations_of_motion(ProblemSpec(Family.KEPLER_DRAG, alpha=0.0))
        kep = equations_of_motion(kepler)
        assert equals(substitute(drag0.radial, {ALPHA: 0}), kep.radial)
        assert equals(substitute(drag0.transverse, {ALPHA: 0}), kep.transverse)

    def test_monopole_radial_in_momentum_form(self, micz_special):
        # eliminating the angular rate via L = S r^2 phi' gives the
        # inverse-square-plus-inverse-cube radial equation
        eqs = equations_of_motion(micz_special)
        radial_L = substitute(eqs.radial, {PHI_DOT: L / (SCONE * R**2)})
        expected = R_DDOT - (L**2 + LAM**2) / R**3 + MU / R**2
        relation = substitute(radial_L, {NU: -(LAM**2) / 2})
        assert equals(relation, expected)

    def test_cone_drag_requires_g(self):
        with pytest.raises(ProblemError):
            ProblemSpec(Family.CONE_DRAG)

    def test_acceleration_rules_solve_equations(
        self, kepler, kepler_drag, power_law_quartic, cone_drag, micz_special
    ):
        for spec in (kepler, kepler_drag, power_law_quartic, cone_drag, micz_special):
            eqs = equations_of_motion(spec)
            rules = acceleration_rules(spec)
            assert canonicalize(substitute(eqs.radial, rules)) == ZERO
            assert canonicalize(substitute(eqs.transverse, rules)) == ZERO


class TestConservedQuantities:
    def test_kepler_momentum(self, kepler):
        (q,) = conserved_quantities(kepler)
        assert q.name == "L"
        assert equals(q.expression, R**2 * THETA_DOT)

    def test_drag_correction(self, kepler_drag):
        (q,) = conserved_quantities(kepler_drag)
        assert equals(q.expression, R**2 * THETA_DOT + ALPHA * THETA)

    def test_monopole_has_conserved_vector_magnitude(self, micz_special):
        names = {q.name for q in conserved_quantities(micz_special)}
        assert names == {"L", "P"}

    def test_all_quantities_conserved_symbolically(
        self, kepler, kepler_drag, power_law_quartic, cone_drag, micz_special, micz_general
    ):
        for spec in (
            kepler,
            kepler_drag,
            power_law_quartic,
            cone_drag,
            micz_special,
            micz_general,
        ):
            for q in conserved_quantities(spec):
                assert conserved_drift_is_zero(spec, q), (spec.family, q.name)

    def test_micz_magnitude_relation(self, micz_special):
        qs = {q.name: q for q in conserved_quantities(micz_special)}
        lhs = canonicalize(qs["P"].expression ** 2)
        rhs = canonicalize(qs["L"].expression ** 2 + LAM**2)
        assert equals(lhs, rhs)


class TestSpecialCaseDetection:
    def test_special_flag(self):
        assert ProblemSpec(Family.MICZ, lam=0.5, nu=-0.125).micz_special_case
        assert not ProblemSpec(Family.MICZ, lam=0.5, nu=0.1).micz_special_case
        assert ProblemSpec(Family.MICZ, lam=0.0, nu=0.0).micz_special_case
