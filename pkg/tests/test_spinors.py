import random
from fractions import Fraction

import pytest
from sympy import QQ_I

from gcfol.calculus import d_K, exterior_d, partial_bar, random_form
from gcfol.coeff import I, QI
from gcfol.errors import DegenerateSpinor, DomainError, PreconditionError
from gcfol.forms import Scenario
from gcfol.obstruction import two_im
from gcfol.scenario_io import load_bundled
from gcfol.spinors import (
    PointAlgebra,
    annihilator,
    b_transform,
    canonical_spinor,
    check_H_constraints,
    clifford_act,
    clifford_exp,
    d_H,
    dH_closed,
    evaluate_form,
    is_isotropic,
    is_pure,
    pairing,
    random_points,
    real_rank_zero,
    type_at,
)

R2 = PointAlgebra(2, ["dx", "dy"])
C1 = PointAlgebra(2, ["dz", "dzb"], conj=[1, 0])


def vec(A, X=(), xi=()):
    """Vector from sparse ``{index: value}`` pairs."""
    v, w = A.zero_vector(), A.zero_vector()
    for g, c in dict(X).items():
        v[g] = A.coerce(c)
    for g, c in dict(xi).items():
        w[g] = A.coerce(c)
    return v, w


def test_contraction_and_wedging():
    assert clifford_act(vec(R2, {0: 1}), R2.spinor({(0, 1): 1})) == R2.spinor({(1,): 1})
    assert clifford_act(vec(R2, xi={0: 1}), R2.spinor({(): 1})) == R2.spinor({(0,): 1})


def test_clifford_identity_unit_vector():
    rho = R2.spinor({(): 3, (0,): QI(1, 2), (0, 1): -1})
    v = vec(R2, {0: 1}, {0: 1})
    assert clifford_act(v, clifford_act(v, rho)) == rho


def _random_scalar(rng):
    return QQ_I(Fraction(rng.randint(-3, 3), rng.randint(1, 2)), rng.randint(-2, 2))


def test_clifford_identity_random():
    rng = random.Random(0)
    A = PointAlgebra(4)
    for _ in range(50):
        v = ([_random_scalar(rng) for _ in range(4)], [_random_scalar(rng) for _ in range(4)])
        rho = A.spinor({tuple(sorted(rng.sample(range(4), rng.randint(0, 4)))): _random_scalar(rng)
                        for _ in range(4)})
        assert clifford_act(v, clifford_act(v, rho)) == rho.scale(pairing(v, v))


def test_annihilator_examples():
    L = annihilator(R2.spinor({(): 1}))
    assert L.dim == 2 and all(not any(xi) for _, xi in L.vectors())
    L = annihilator(C1.spinor({(0,): 1}))
    assert L.dim == 2
    assert L.basis == [[QQ_I(c, 0) for c in row] for row in ([0, 1, 0, 0], [0, 0, 1, 0])]
    assert annihilator(R2.spinor({(): 1, (0, 1): 1})).dim == 2
    with pytest.raises(DegenerateSpinor):
        annihilator(R2.spinor({}))


def test_purity_and_real_rank_examples():
    sympl = R2.spinor({(): 1, (0, 1): I})
    assert is_pure(sympl) and real_rank_zero(sympl) and type_at(sympl) == 0
    dz = C1.spinor({(0,): 1})
    assert is_pure(dz) and real_rank_zero(dz) and type_at(dz) == 1
    dx = R2.spinor({(0,): 1})
    assert is_pure(dx) and not real_rank_zero(dx)
    assert not real_rank_zero(R2.spinor({(): 1}))


def test_annihilators_are_isotropic():
    for rho in (R2.spinor({(): 1, (0, 1): I}), C1.spinor({(0,): 1}), R2.spinor({(0,): 1})):
        assert is_isotropic(annihilator(rho))


def test_clifford_exp_examples():
    sc = Scenario(2, "flat", 1)
    assert clifford_exp(sc.zero_form()) == sc.one()
    B = (sc.dx(0) * sc.dx(1)).scale(I)
    assert clifford_exp(B) == sc.one() + B
    t4 = Scenario(4, "flat", 1)
    w = t4.eta(0) * t4.eta(1) + t4.eta(2) * t4.eta(3)
    vol = t4.eta(0) * t4.eta(1) * t4.eta(2) * t4.eta(3)
    assert clifford_exp(w.scale(I)) == t4.one() + w.scale(I) - vol
    with pytest.raises(DomainError):
        clifford_exp(sc.dx(0))


def test_dH_closed_examples():
    sc = load_bundled("closed_extension")
    assert dH_closed(canonical_spinor(sc), sc.zero_form())
    c = Scenario(2, "flat", 1)
    assert dH_closed(c.dzb(0), c.zero_form())
    flat = load_bundled("flat_bundle")
    assert dH_closed(canonical_spinor(flat), flat.zero_form())
    x = c.base_coordinate(0)
    not_closed = (c.dx(1) * c.eta(0) * c.eta(1)).scale(x)
    with pytest.raises(PreconditionError):
        dH_closed(c.one(), not_closed)


def test_H_constraints_on_bundled_example():
    sc = load_bundled("t4_over_c")
    w = sc.omega()
    H = two_im(d_K(w))
    assert H.project_degree((0, 1, 2)) == partial_bar(w).scale(-I)
    assert check_H_constraints(w, H)
    assert dH_closed(canonical_spinor(sc), H)
    assert not check_H_constraints(w, sc.zero_form())
    assert not dH_closed(canonical_spinor(sc), sc.zero_form())


def _real_form(sc, rng, degree):
    return random_form(sc, rng, max_terms=3, degree=degree, max_freq=1, max_deg=1).real_part()


def test_b_transform_with_closed_B():
    sc = Scenario(2, "torus", 1)
    rng = random.Random(3)
    for _ in range(5):
        B = exterior_d(_real_form(sc, rng, 1))
        H = exterior_d(_real_form(sc, rng, 2))
        rho = random_form(sc, rng, max_terms=3, max_freq=1)
        assert d_H(b_transform(B, rho), H) == clifford_exp(B).wedge(d_H(rho, H))


def test_b_transform_with_non_closed_B_shifts_H_by_minus_dB():
    sc = Scenario(2, "flat", 1)
    rng = random.Random(4)
    checked = 0
    while checked < 5:
        B = _real_form(sc, rng, 2)
        if not exterior_d(B):
            continue
        H = exterior_d(_real_form(sc, rng, 2))
        rho = sc.one() + random_form(sc, rng, max_terms=3, max_freq=1)
        lhs = d_H(b_transform(B, rho), H - exterior_d(B))
        assert lhs == clifford_exp(B).wedge(d_H(rho, H))
        assert d_H(b_transform(B, rho), H + exterior_d(B)) != lhs
        checked += 1


def test_canonical_spinor_pointwise_on_bundled_example():
    sc = load_bundled("t4_over_c")
    rho = canonical_spinor(sc)
    for pt in list(sc.sample_points) + random_points(sc, random.Random(0), 3):
        val = evaluate_form(rho, pt)
        assert is_pure(val) and real_rank_zero(val) and type_at(val) == 1
