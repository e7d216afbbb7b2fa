import random

import pytest
from hypothesis import given, settings, strategies as st

from gcfol.calculus import random_coeff
from gcfol.coeff import CoeffFn, QI
from gcfol.errors import ScenarioSemanticError, ScenarioSyntaxError
from gcfol.forms import Scenario
from gcfol.randomized import random_symplectic_scenario
from gcfol.scenario_io import (
    BUNDLED,
    ExpressionParser,
    format_coeff,
    load_bundled,
    parse_scenario,
    serialize_scenario,
)

MINIMAL = """
[bundle]
fibre_rank = 2
base = "flat"
base_dim = 2

[omega]
terms = [{ pair = [1, 2], coeff = "1" }]
"""


def test_bundled_example_contents():
    sc = load_bundled("t4_over_c")
    assert (sc.fibre_rank, sc.base_kind, sc.complex_dim) == (4, "flat", 1)
    w = sc.omega()
    x = sc.base_coordinate(0)
    assert w == sc.eta(0) * sc.eta(1) + sc.eta(2) * sc.eta(3) + (sc.eta(0) * sc.eta(2)).scale(x)
    assert len(sc.lattice) == 2


def test_empty_connection_is_flat():
    sc = parse_scenario(MINIMAL)
    assert sc.connection == {}


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_roundtrip(name):
    sc = load_bundled(name)
    again = parse_scenario(serialize_scenario(sc))
    assert again == sc
    assert again.fingerprint() == sc.fingerprint()


def test_random_scenarios_roundtrip():
    rng = random.Random(17)
    for _ in range(5):
        sc = random_symplectic_scenario(rng)
        assert parse_scenario(serialize_scenario(sc)) == sc


def test_degenerate_omega_rejected():
    text = MINIMAL.replace("fibre_rank = 2", "fibre_rank = 4")
    with pytest.raises(ScenarioSemanticError) as info:
        parse_scenario(text)
    assert info.value.invariant == "fibrewise nondegenerate"


def test_odd_rank_and_non_real_omega_rejected():
    with pytest.raises(ScenarioSemanticError) as info:
        parse_scenario(MINIMAL.replace("fibre_rank = 2", "fibre_rank = 3"))
    assert info.value.invariant == "fibre rank even"
    with pytest.raises(ScenarioSemanticError) as info:
        parse_scenario(MINIMAL.replace('coeff = "1"', 'coeff = "i"'))
    assert info.value.invariant == "omega real"


def test_syntax_error_has_location():
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario("[bundle]\nfibre_rank = = 2\n")
    assert info.value.line == 2 and info.value.column is not None


def test_bad_expression_located():
    text = MINIMAL.replace('coeff = "1"', 'coeff = "1 + cos(2*pi*q)"')
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario(text)
    assert info.value.line is not None


def test_expression_language():
    shape = (2, 0, 2)
    p = ExpressionParser(shape, "flat", {"x": "x1", "y": "x2"})
    x = CoeffFn.var(shape, "x1")
    assert p.parse("2*x**2 - y/3") == (x * x).scale(2) - CoeffFn.var(shape, "x2").scale(QI(1) / 3)
    assert p.parse("cos(2*pi*t1)") == CoeffFn.cos(shape, (1, 0))
    assert p.parse("exp(2*pi*i*(t1 - t2))") == CoeffFn.mode(shape, (1, -1))
    assert p.parse("(1/2 + 3*i) * sin(4*pi*t2)") == CoeffFn.sin(shape, (0, 2)).scale(QI(1) / 2 + QI(0, 3))
    assert p.parse("pi") == CoeffFn.const(shape, QI(1) / 2, 1)
    for bad in ("x**y", "cos(t1)", "sqrt(2)", "x/y", "exp(2*pi*t1)"):
        with pytest.raises(ScenarioSyntaxError):
            p.parse(bad)


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_format_then_parse_is_identity(seed):
    sc = Scenario(2, "torus", 1)
    f = random_coeff(sc, random.Random(seed))
    p = ExpressionParser(sc.shape, "torus")
    assert p.parse(format_coeff(f)) == f
