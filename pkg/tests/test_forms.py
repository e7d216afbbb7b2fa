import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gcfol.calculus import random_form
from gcfol.coeff import CoeffFn, QI, I
from gcfol.errors import InvalidGenerator, ScenarioMismatch
from gcfol.forms import (
    LatticeGenerator,
    Scenario,
    certify_nowhere_zero,
    fibre_pfaffian,
    project_degree,
    pullback_affine,
    restrict_K,
    truncate,
    validate_generator,
    wedge,
)
from gcfol.scenario_io import load_bundled


def t4():
    return Scenario(4, "flat", 1)


def test_alternation_and_sign_rule():
    sc = t4()
    assert (sc.dz(0) * sc.dz(0)).is_zero()
    assert sc.eta(0) * sc.eta(1) == -(sc.eta(1) * sc.eta(0))
    assert wedge(sc.eta(0) * sc.eta(1), sc.eta(2) * sc.eta(3)) == sc.monomial(
        (sc.gen_eta(0), sc.gen_eta(1), sc.gen_eta(2), sc.gen_eta(3)))


def test_project_degree_examples():
    sc = t4()
    a = sc.dz(0) * sc.eta(0) + sc.dzb(0) * sc.eta(0)
    assert project_degree(a, (1, 0, 1)) == sc.dz(0) * sc.eta(0)
    f = sc.coeff(CoeffFn.cos(sc.shape, (1, 0, 0, 0)))
    b = (sc.eta(0) * sc.eta(1)).scale(f)
    assert project_degree(b, (0, 0, 2)) == b


def test_truncate_examples():
    sc = t4()
    for a, kept in [
        (sc.dz(0) * sc.dzb(0), True),
        (sc.dz(0) * sc.eta(0), False),
        (sc.eta(0) * sc.eta(1), False),
    ]:
        assert truncate(a) == (a if kept else sc.zero_form())


def test_restrict_K_examples():
    sc = t4()
    assert restrict_K(sc.dzb(0) * sc.eta(0)) == sc.dzb(0) * sc.eta(0)
    assert restrict_K(sc.dz(0) * sc.dzb(0)).is_zero()


def test_real_coordinate_coframe():
    sc = Scenario(2, "flat", 1)
    assert sc.dx(0) == (sc.dz(0) + sc.dzb(0)).scale(Fraction(1, 2))
    assert sc.dx(1) == (sc.dz(0) - sc.dzb(0)).scale(QI(0, Fraction(-1, 2)))
    assert sc.dx(0).is_real() and sc.dx(1).is_real()


def test_monodromy_pullbacks_of_bundled_example():
    sc = load_bundled("t4_over_c")
    shear, ident = sc.lattice
    assert pullback_affine(shear, sc.eta(1)) == sc.eta(1) - sc.eta(2)
    a = random_form(sc, random.Random(1))
    assert pullback_affine(ident, a) == a


def test_base_translation_pullback():
    sc = t4()
    x = sc.base_coordinate(0)
    a = (sc.eta(0) * sc.eta(2)).scale(x)
    back = LatticeGenerator((-1, 0))
    assert pullback_affine(back, a) == (sc.eta(0) * sc.eta(2)).scale(x - 1)


def test_generator_validation():
    sc = t4()
    with pytest.raises(InvalidGenerator):
        validate_generator(sc, LatticeGenerator((1, 0), ((2, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))))
    with pytest.raises(InvalidGenerator):
        validate_generator(sc, LatticeGenerator((1, 0), None, (Fraction(1, 3), 0, 0, 0)))


def test_mixing_scenarios_is_rejected():
    with pytest.raises(ScenarioMismatch):
        t4().eta(0) + Scenario(2, "flat", 1).eta(0)


def test_pfaffian_and_certificate():
    sc = load_bundled("t4_over_c")
    assert fibre_pfaffian(sc) == CoeffFn.const(sc.shape, 1)
    v = load_bundled("v_omega_torus")
    assert certify_nowhere_zero(fibre_pfaffian(v))
    degenerate = CoeffFn.cos(v.shape, None, (1, 0))
    assert not certify_nowhere_zero(degenerate)


@st.composite
def forms(draw, sc):
    return random_form(sc, random.Random(draw(st.integers(0, 10**6))))


SC = Scenario(2, "torus", 1, connection={(0, 0): CoeffFn.sin((2, 2, 0), (1, 0), (0, 1))})


@given(forms(SC), forms(SC), forms(SC))
@settings(max_examples=30, deadline=None)
def test_wedge_is_associative_and_graded_commutative(a, b, c):
    assert (a * b) * c == a * (b * c)
    for p in a.homogeneous_parts().values():
        for q in b.homogeneous_parts().values():
            (dp,) = p.total_degrees()
            (dq,) = q.total_degrees()
            assert p * q == (q * p).scale((-1) ** (dp * dq))


@given(forms(SC))
@settings(max_examples=30, deadline=None)
def test_projections_are_complete_and_conjugation_swaps_degrees(a):
    total = SC.zero_form()
    for deg in a.degrees():
        total = total + a.project_degree(deg)
    assert total == a
    assert a.real_part() + a.imag_part().scale(I) == a
    assert a.conjugate().conjugate() == a
    for (i, j, k) in a.degrees():
        assert a.project_degree((i, j, k)).conjugate() == a.conjugate().project_degree((j, i, k))


@given(forms(SC))
@settings(max_examples=30, deadline=None)
def test_restrict_K_decomposition(a):
    rest = a - a.restrict_K()
    assert all(i >= 1 for (i, _, _) in rest.degrees())
