import random
import pytest

from gcfol.calculus import d_S, exterior_d, random_coeff, random_form
from gcfol.coeff import CoeffFn
from gcfol.cohomology import (
    CohClass,
    base_primitive,
    dS_class,
    dS_primitive,
    ddbar_class,
    gauss_manin,
    is_flat,
    is_pluriharmonic,
    truncated_primitive,
)
from gcfol.errors import NotClosed, NotExact, PreconditionError
from gcfol.forms import Scenario
from gcfol.scenario_io import load_bundled


def t4():
    return load_bundled("t4_over_c")


def test_class_of_fibre_constant_form_is_itself():
    sc = t4()
    assert dS_class(sc.omega()).rep == sc.omega()


def test_exact_and_harmonic_classes():
    sc = t4()
    e1 = CoeffFn.mode(sc.shape, (1, 0, 0, 0))
    assert dS_class(d_S(sc.eta(1).scale(e1))).is_zero()
    assert dS_class(sc.eta(0))
    with pytest.raises(NotClosed):
        dS_class(sc.eta(1).scale(e1))


def test_primitive_roundtrip():
    sc = t4()
    x = sc.base_coordinate(0)
    b0 = sc.eta(1).scale(x * CoeffFn.mode(sc.shape, (1, 0, 0, 0)))
    a = d_S(b0)
    b = dS_primitive(a)
    assert d_S(b) == a
    assert d_S(b - b0).is_zero()
    assert dS_primitive(sc.zero_form()).is_zero()


def test_harmonic_form_is_not_exact():
    sc = t4()
    w = sc.eta(0) * sc.eta(1)
    with pytest.raises(NotExact) as info:
        dS_primitive(w)
    assert info.value.residual == w


def test_gauss_manin_of_bundled_example():
    sc = t4()
    c = dS_class(sc.omega())
    gm = gauss_manin(c)
    assert gm.rep == sc.dx(0) * sc.eta(0) * sc.eta(2)
    assert is_pluriharmonic(c)
    assert not is_flat(c)


def test_flat_symplectic_scenarios():
    for name in ("flat_bundle", "closed_extension", "symplectic_bundle"):
        c = dS_class(load_bundled(name).omega())
        assert gauss_manin(c).is_zero()
        assert is_flat(c)


def test_v_omega_torus_not_pluriharmonic():
    sc = load_bundled("v_omega_torus")
    c = dS_class(sc.omega())
    assert not is_pluriharmonic(c)
    # the d d-bar of V times the fibre area class
    V = sc.omega().coefficient((sc.gen_eta(0), sc.gen_eta(1)))
    ddbarV = exterior_d(exterior_d(sc.function(V)).project_degree((0, 1, 0))).project_degree((1, 1, 0))
    assert ddbar_class(c).rep == ddbarV * sc.eta(0) * sc.eta(1)


def test_gauss_manin_squared_is_zero_in_cohomology():
    sc = Scenario(2, "torus", 1, connection={(0, 0): CoeffFn.sin((2, 2, 0), (1, 0), (0, 1))})
    rng = random.Random(2)
    for _ in range(5):
        c = CohClass((sc.eta(0) * sc.eta(1)).scale(random_coeff(sc, rng, fibre=False)))
        assert gauss_manin(gauss_manin(c)).is_zero()


def _closed_basic(sc, rng, degree):
    while True:
        a = random_form(sc, rng, max_terms=4, degree=degree - 1, fibre=False)
        a = a.filter(lambda deg: deg[2] == 0).real_part()
        r = exterior_d(a)
        if r:
            return r


@pytest.mark.parametrize("base", ["flat", "torus"])
def test_base_primitive(base):
    sc = Scenario(2, base, 2)
    rng = random.Random(11)
    for _ in range(4):
        r = _closed_basic(sc, rng, 3)
        b = base_primitive(r)
        assert exterior_d(b) == r


def test_base_primitive_torus_constant_not_exact():
    sc = Scenario(2, "torus", 2)
    with pytest.raises(NotExact):
        base_primitive(sc.dz(0) * sc.dzb(0) * sc.dz(1))


@pytest.mark.parametrize("base", ["flat", "torus"])
def test_truncated_primitive(base):
    sc = Scenario(2, base, 2)
    rng = random.Random(12)
    done = 0
    while done < 4:
        b0 = random_form(sc, rng, max_terms=3, degree=2, fibre=False)
        b0 = b0.filter(lambda deg: deg[2] == 0).truncate().real_part()
        if base == "torus":
            b0 = b0.map_coefficients(lambda c: c - c.base_average())
        r = exterior_d(b0)
        if not r:
            continue
        b = truncated_primitive(r)
        assert exterior_d(b) == r
        assert b.truncate() == b and b.is_real()
        done += 1


def test_truncated_primitive_preconditions():
    sc = Scenario(2, "flat", 2)
    with pytest.raises(PreconditionError):
        truncated_primitive(sc.dz(0) * sc.dzb(0) * sc.dzb(1))  # not real
    with pytest.raises(PreconditionError):
        truncated_primitive(sc.dz(0) * sc.dzb(0))
