import random
from fractions import Fraction

import pytest

from gcfol.calculus import (
    component,
    contract,
    curvature,
    d_K,
    d_S,
    exterior_d,
    nabla,
    partial_bar,
    random_coeff,
    random_form,
    split_d,
    theta,
    theta_plus,
    verify_relations,
)
from gcfol.coeff import CoeffFn, QI
from gcfol.errors import InvariantViolation
from gcfol.forms import Scenario
from gcfol.scenario_io import load_bundled


def flat_t4():
    return load_bundled("t4_over_c")


def curved_torus():
    sh = (2, 2, 0)
    return Scenario(2, "torus", 1, connection={
        (0, 0): CoeffFn.sin(sh, (1, 0), (0, 1)).scale(Fraction(1, 3)),
        (1, 1): CoeffFn.cos(sh, (0, 1), (1, 0)).scale(Fraction(1, 2)),
    })


def curved_flat():
    sc = Scenario(2, "flat", 2)
    x = [sc.base_coordinate(b) for b in range(4)]
    sc.connection = {(0, 0): x[2], (0, 3): CoeffFn.cos(sc.shape, (0, 1)).scale(Fraction(1, 4)), (1, 1): x[0]}
    return sc


def test_eta_closed_for_flat_connection():
    sc = flat_t4()
    for i in range(4):
        assert exterior_d(sc.eta(i)).is_zero()


def test_d_of_coordinate_term():
    sc = flat_t4()
    x = sc.base_coordinate(0)
    a = (sc.eta(0) * sc.eta(2)).scale(x)
    expected = ((sc.dz(0) + sc.dzb(0)).scale(Fraction(1, 2))) * sc.eta(0) * sc.eta(2)
    assert exterior_d(a) == expected


def test_bundled_example_components():
    sc = flat_t4()
    w = sc.omega()
    assert exterior_d(exterior_d(w)).is_zero()
    half_dzb13 = (sc.dzb(0) * sc.eta(0) * sc.eta(2)).scale(Fraction(1, 2))
    assert partial_bar(w) == half_dzb13
    assert partial_bar(w) == exterior_d(w).project_degree((0, 1, 2))
    assert d_S(w).is_zero()
    assert d_K(w) == half_dzb13
    assert d_K(w) == exterior_d(w).restrict_K()


def test_theta_plus_of_function_and_flat_theta():
    sc = flat_t4()
    rng = random.Random(3)
    f = sc.function(random_coeff(sc, rng))
    assert theta_plus(f).is_zero()
    for _ in range(5):
        assert theta(random_form(sc, rng)).is_zero()


def test_theta_is_tensorial():
    sc = curved_torus()
    rng = random.Random(4)
    for _ in range(5):
        f = random_coeff(sc, rng)
        assert theta(sc.eta(0).scale(f)) == theta(sc.eta(0)).scale(f)


def test_curvature_matches_theta_on_eta():
    sc = curved_flat()
    F = curvature(sc)
    for j in range(2):
        assert theta(sc.eta(j)) == -F[j]


@pytest.mark.parametrize("make", [flat_t4, curved_torus, curved_flat])
def test_nabla_squared(make):
    sc = make()
    rng = random.Random(5)
    for _ in range(4):
        a = random_form(sc, rng)
        assert nabla(nabla(a)) == -(d_S(theta(a)) + theta(d_S(a)))


@pytest.mark.parametrize("make", [flat_t4, curved_torus, curved_flat])
def test_d_K_squares_to_zero(make):
    sc = make()
    rng = random.Random(6)
    for _ in range(4):
        a = random_form(sc, rng)
        assert d_K(d_K(a)).is_zero()


def test_fast_d_S_agrees_with_split():
    for sc in (flat_t4(), curved_torus(), curved_flat()):
        rng = random.Random(7)
        for _ in range(5):
            a = random_form(sc, rng)
            assert d_S(a) == split_d(a).get("dS", sc.zero_form())


def test_components_sum_to_d():
    sc = curved_flat()
    rng = random.Random(8)
    for _ in range(5):
        a = random_form(sc, rng)
        total = sc.zero_form()
        for form in split_d(a).values():
            total = total + form
        assert total == exterior_d(a)


def test_unknown_operator():
    sc = flat_t4()
    with pytest.raises(ValueError):
        component(sc.eta(0), "bogus")


@pytest.mark.parametrize("make", [flat_t4, curved_torus, curved_flat])
def test_relation_suite_passes(make):
    rep = verify_relations(make(), trials=6, seed=1)
    assert rep.ok, rep.summary()
    assert all(count > 0 for count in rep.checked.values())


def test_relation_suite_catches_corrupted_structure_coefficient():
    sc = curved_torus()
    extra = sc.dz(0) * sc.dzb(0)
    bad_eta = {sc.gen_eta(0): CoeffFn.const(sc.shape, 1)}

    def corrupted(a):
        # adds dz^dzb to d(eta^1), extended as an antiderivation
        return exterior_d(a) + extra.wedge(contract(a, bad_eta))

    rep = verify_relations(sc, trials=6, seed=1, d=corrupted)
    assert not rep.ok
    assert rep.violation[1]


def test_unexpected_shift_is_an_invariant_violation():
    sc = flat_t4()

    def shifted(a):
        return a.wedge(sc.eta(0) * sc.eta(1) * sc.eta(2))

    with pytest.raises(InvariantViolation):
        split_d(sc.one() + sc.dz(0), d=shifted)


def test_curvature_override_replaces_theta():
    sc = load_bundled("flag_pointwise")
    F = curvature(sc)
    assert F[0] == sc.dz(0) * sc.dz(1) + sc.dzb(0) * sc.dzb(1)
    assert theta(sc.eta(0)) == -F[0]
    assert theta(sc.eta(1)) == -(sc.dz(0) * sc.dz(1)).scale(QI(0, 1)) + (sc.dzb(0) * sc.dzb(1)).scale(QI(0, 1))
