"""Random scenarios with a planted symplectic trivialization.

``omega = c * eta^1 ^ eta^2 (+ eta^3 ^ eta^4) + d_S mu`` has a fibre-constant
class, so ``nabla omega`` is d_S-exact and ``gamma = -P(delbar omega)``
(``P`` the fibre homotopy) gives ``nabla omega = -d_S(gamma + conj gamma)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .calculus import d_S, nabla, partial_bar, theta, theta_minus, theta_plus
from .coeff import CoeffFn, QI, I
from .cohomology import dS_primitive
from .errors import InvariantViolation
from .forms import GradedForm, Scenario, certify_nowhere_zero, fibre_pfaffian


def _real_trig(sc: Scenario, rng: random.Random, amp: Fraction, fibre=True, base=True, poly=0, most=2):
    p, q, r = sc.shape
    out = CoeffFn.zero(sc.shape)
    for _ in range(rng.randint(1, most)):
        n = tuple(rng.randint(-1, 1) for _ in range(p)) if fibre else (0,) * p
        m = tuple(rng.randint(-1, 1) for _ in range(q)) if base else (0,) * q
        e = [0] * r
        for _ in range(rng.randint(0, poly) if r else 0):
            e[rng.randrange(r)] += 1
        c = QI(amp * rng.randint(-2, 2), amp * rng.randint(-2, 2))
        t = CoeffFn(sc.shape, {(n, m, tuple(e), 0): c})
        out = out + t + t.conjugate()
    return out


def random_symplectic_scenario(rng: random.Random, base_kind=None, complex_dim=None) -> Scenario:
    """A nondegenerate fibre-dependent omega on a curved, fibre-dependent connection."""
    base_kind = base_kind or rng.choice(("flat", "torus"))
    k = complex_dim if complex_dim is not None else rng.choice((1, 2, 2))
    p = 2
    for _ in range(50):
        sc = Scenario(p, base_kind, k, name="random_symplectic")
        for i in range(p):
            for b in range(2 * k):
                if rng.random() < 0.5:
                    a = _real_trig(
                        sc, rng, Fraction(1, 3), poly=1 if base_kind == "flat" else 0, most=3 - k
                    )
                    if a:
                        sc.connection[(i, b)] = a
        c0 = rng.choice((1, 2, 3))
        mu = [_real_trig(sc, rng, Fraction(1, 60), base=base_kind == "torus") for _ in range(p)]
        w = sc.monomial((sc.gen_eta(0), sc.gen_eta(1)), c0)
        w = w + d_S(sum((sc.eta(i).scale(mu[i]) for i in range(p)), sc.zero_form()))
        sc.omega_terms = {}
        for mono, c in w.terms.items():
            i, j = mono[0] - 2 * k, mono[1] - 2 * k
            sc.omega_terms[(i, j)] = c
        if certify_nowhere_zero(fibre_pfaffian(sc)):
            return sc
    raise InvariantViolation("could not draw a certified nondegenerate omega")


@dataclass
class PlantedWitnesses:
    gamma: GradedForm
    alpha: GradedForm
    beta: GradedForm


def planted_witnesses(sc: Scenario) -> PlantedWitnesses:
    """``gamma``, ``alpha = i nabla(gamma - conj gamma) + i(theta_minus - theta_plus) omega``
    and ``beta = i Theta(gamma - conj gamma)``."""
    w = sc.omega()
    gamma = -dS_primitive(partial_bar(w))
    if nabla(w) != -d_S(gamma + gamma.conjugate()):
        raise InvariantViolation("planted trivialization does not satisfy nabla omega = -d_S(gamma + conj gamma)")
    diff = gamma - gamma.conjugate()
    alpha = (nabla(diff) + theta_minus(w) - theta_plus(w)).scale(I)
    beta = theta(diff).scale(I)
    return PlantedWitnesses(gamma, alpha, beta)
