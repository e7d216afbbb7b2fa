"""Pure spinors: Clifford action, annihilators and integrability tests.

Form-level operations (exponential, B-transform, d_H-closedness) are exact
on whole forms.  Purity and rank questions are answered pointwise by exact
linear algebra in the exterior algebra of one cotangent space.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from sympy import QQ_I, symbols
from sympy.polys.domains.gaussiandomains import GaussianRational
from sympy.polys.matrices import DomainMatrix

from .calculus import d_K, exterior_d, partial_bar, theta_minus, d_S
from .coeff import QI, I
from .errors import DegenerateSpinor, DomainError, InvariantViolation, PreconditionError
from .forms import GradedForm, Scenario, wedge_monomials

TAU = symbols("tau")
QQ_I_TAU = QQ_I.frac_field(TAU)


# -- form-level operations ---------------------------------------------------------


def clifford_exp(B: GradedForm) -> GradedForm:
    """``1 + B + B^2/2 + ...`` for an even form ``B``."""
    if any(d % 2 for d in B.total_degrees()):
        raise DomainError("the Clifford exponential needs an even-degree form")
    out = B.scenario.one()
    power = B.scenario.one()
    n = 1
    while True:
        power = power.wedge(B).scale(QI(Fraction(1, n)))
        if not power:
            return out
        out = out + power
        n += 1


def b_transform(B: GradedForm, rho: GradedForm) -> GradedForm:
    if B.total_degrees() - {2}:
        raise DomainError("B-transform needs a 2-form")
    if not B.is_real():
        raise DomainError("B-transform needs a real 2-form")
    return clifford_exp(B).wedge(rho)


def _require_closed_3form(H: GradedForm):
    if H.total_degrees() - {3}:
        raise DomainError("H must be a 3-form")
    if not H.is_real():
        raise DomainError("H must be real")
    if exterior_d(H):
        raise PreconditionError("H is not closed")


def d_H(rho: GradedForm, H: GradedForm) -> GradedForm:
    return exterior_d(rho) + H.wedge(rho)


def dH_closed(rho: GradedForm, H: GradedForm) -> bool:
    """``d rho + H ^ rho = 0`` for a closed real 3-form ``H``."""
    _require_closed_3form(H)
    return d_H(rho, H).is_zero()


def canonical_spinor(scenario: Scenario) -> GradedForm:
    """``e^{i omega} ^ dz^1 ^ ... ^ dz^k``."""
    return clifford_exp(scenario.omega().scale(I)).wedge(scenario.canonical_base_generator())


def h_constraint_parts(omega: GradedForm, H: GradedForm) -> dict:
    """Each degree equation as ``name -> residual`` (zero when it holds)."""
    return {
        "H^{0,0;3} = 0": H.project_degree((0, 0, 3)),
        "H^{0,1;2} = -i delbar omega": H.project_degree((0, 1, 2)) + partial_bar(omega).scale(I),
        "H^{0,2;1} = -i theta_minus omega": H.project_degree((0, 2, 1)) + theta_minus(omega).scale(I),
        "H^{0,3;0} = 0": H.project_degree((0, 3, 0)),
    }


def check_H_constraints(omega: GradedForm, H: GradedForm) -> bool:
    """Degree equations for H, cross-checked against ``H|_K + i d_K omega = 0``."""
    _require_closed_3form(H)
    if d_S(omega):
        raise PreconditionError("omega is not d_S-closed")
    degreewise = all(r.is_zero() for r in h_constraint_parts(omega, H).values())
    direct = (H.restrict_K() + d_K(omega).scale(I)).is_zero()
    if degreewise != direct:
        raise InvariantViolation("degreewise and direct forms of the H constraint disagree")
    return direct


# -- pointwise exterior algebra -----------------------------------------------------


def _conj_scalar(domain, c):
    if domain == QQ_I:
        return QQ_I(c.x, -c.y)
    field = domain.field
    ring = field.ring

    def conj_poly(p):
        return ring.from_dict({m: QQ_I(v.x, -v.y) for m, v in p.items()})

    return field.new(conj_poly(c.numer)) / field.new(conj_poly(c.denom))


def _laurent_to_domain(domain, value: dict):
    """``{tau power: QI}`` to an element of ``domain``."""
    if domain == QQ_I:
        if set(value) - {0}:
            raise DomainError("value involves 2*pi; use the tau field")
        c = value.get(0, QI(0))
        return QQ_I(c.re, c.im)
    field = domain.field
    ring = field.ring
    if not value:
        return domain.zero
    low = min(value)
    num = ring.from_dict({(k - low,): QQ_I(c.re, c.im) for k, c in value.items()})
    out = field.new(num)
    if low < 0:
        out = out / field.gens[0] ** (-low)
    elif low > 0:
        out = out * field.gens[0] ** low
    return out


class PointAlgebra:
    """Exterior algebra on ``n`` basis covectors with a conjugation permutation."""

    def __init__(self, n: int, names=None, conj=None, domain=QQ_I):
        self.n = n
        self.names = list(names) if names else [f"e{i + 1}" for i in range(n)]
        self.conj = tuple(conj) if conj is not None else tuple(range(n))
        self.domain = domain

    def coerce(self, c):
        K = self.domain
        if isinstance(c, QI):
            return _laurent_to_domain(K, {0: c}) if c else K.zero
        if isinstance(c, dict):
            return _laurent_to_domain(K, c)
        if isinstance(c, (int, Fraction)):
            return K.convert(QQ_I(c, 0)) if K != QQ_I else QQ_I(c, 0)
        if K != QQ_I and isinstance(c, GaussianRational):
            return K.convert_from(c, QQ_I)
        return c

    def spinor(self, terms: dict) -> "PointSpinor":
        clean = {}
        for mono, c in terms.items():
            c = self.coerce(c)
            if c:
                clean[tuple(mono)] = c
        return PointSpinor(self, clean)

    def covector(self, g: int, c=1) -> list:
        v = [self.domain.zero] * self.n
        v[g] = self.coerce(c)
        return v

    def zero_vector(self) -> list:
        return [self.domain.zero] * self.n


@dataclass
class PointSpinor:
    algebra: PointAlgebra
    terms: dict

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, PointSpinor) and self.terms == other.terms

    def scale(self, c):
        c = self.algebra.coerce(c)
        return PointSpinor(self.algebra, {m: v * c for m, v in self.terms.items() if v * c})

    def __add__(self, other):
        terms = dict(self.terms)
        for m, v in other.terms.items():
            s = terms.get(m, self.algebra.domain.zero) + v
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return PointSpinor(self.algebra, terms)

    def degrees(self):
        return {len(m) for m in self.terms}

    def __str__(self):
        if not self.terms:
            return "0"
        K = self.algebra.domain
        parts = []
        for mono in sorted(self.terms, key=lambda m: (len(m), m)):
            c = str(K.to_sympy(self.terms[mono]))
            name = "^".join(self.algebra.names[g] for g in mono) or "1"
            parts.append(f"({c})*{name}")
        return " + ".join(parts)


def clifford_act(v, rho: PointSpinor) -> PointSpinor:
    """``(X, xi) . rho = iota_X rho + xi ^ rho``; ``X`` is given in the dual basis."""
    X, xi = v
    K = rho.algebra.domain
    out = {}
    for mono, c in rho.terms.items():
        for pos, g in enumerate(mono):
            if X[g]:
                rest = mono[:pos] + mono[pos + 1:]
                w = c * X[g]
                out[rest] = out.get(rest, K.zero) + (w if pos % 2 == 0 else -w)
        for g, a in enumerate(xi):
            if not a:
                continue
            sign, m = wedge_monomials((g,), mono)
            if sign:
                w = c * a
                out[m] = out.get(m, K.zero) + (w if sign > 0 else -w)
    return PointSpinor(rho.algebra, {m: c for m, c in out.items() if c})


def pairing(v, w):
    """``<(X, xi), (Y, zeta)> = (xi(Y) + zeta(X)) / 2``."""
    X, xi = v
    Y, zeta = w
    s = sum((a * b for a, b in zip(xi, Y)), 0) + sum((a * b for a, b in zip(zeta, X)), 0)
    return s / 2


def _all_monos(n):
    for d in range(n + 1):
        yield from combinations(range(n), d)


@dataclass
class NullSubspace:
    algebra: PointAlgebra
    basis: list

    @property
    def dim(self):
        return len(self.basis)

    def vectors(self):
        n = self.algebra.n
        return [(b[:n], b[n:]) for b in self.basis]


def annihilator(rho: PointSpinor) -> NullSubspace:
    """Kernel of ``v -> v . rho`` on ``T_C + T*_C`` at the point."""
    if not rho:
        raise DegenerateSpinor("spinor vanishes at this point")
    A = rho.algebra
    K = A.domain
    n = A.n
    index = {m: i for i, m in enumerate(_all_monos(n))}
    cols = []
    for j in range(2 * n):
        X, xi = A.zero_vector(), A.zero_vector()
        if j < n:
            X[j] = K.one
        else:
            xi[j - n] = K.one
        img = clifford_act((X, xi), rho)
        col = [K.zero] * len(index)
        for m, c in img.terms.items():
            col[index[m]] = c
        cols.append(col)
    rows = [[cols[j][i] for j in range(2 * n)] for i in range(len(index))]
    M = DomainMatrix(rows, (len(index), 2 * n), K)
    ns = M.nullspace()
    basis = ns.to_list() if ns.shape[0] else []
    return NullSubspace(A, basis)


def conjugate_vector(A: PointAlgebra, vec: list) -> list:
    n = A.n
    out = [A.domain.zero] * (2 * n)
    for g in range(n):
        out[A.conj[g]] = _conj_scalar(A.domain, vec[g])
        out[n + A.conj[g]] = _conj_scalar(A.domain, vec[n + g])
    return out


def is_pure(rho: PointSpinor) -> bool:
    return annihilator(rho).dim == rho.algebra.n


def real_rank_zero(rho: PointSpinor) -> bool:
    """``L`` meets its conjugate only in zero."""
    L = annihilator(rho)
    if not L.basis:
        return True
    A = rho.algebra
    rows = L.basis + [conjugate_vector(A, b) for b in L.basis]
    M = DomainMatrix(rows, (len(rows), 2 * A.n), A.domain)
    return M.rank() == 2 * L.dim


def type_at(rho: PointSpinor) -> int:
    if not rho:
        raise DegenerateSpinor("spinor vanishes at this point")
    return min(rho.degrees())


def is_isotropic(L: NullSubspace) -> bool:
    vs = L.vectors()
    return all(not pairing(v, w) for v in vs for w in vs)


# -- evaluation of scenario forms ----------------------------------------------------


@dataclass(frozen=True)
class Point:
    """Fibre angles and base coordinates; angles must be quarter periods."""

    fibre: tuple
    base: tuple


def random_points(scenario: Scenario, rng, count: int) -> list:
    """Quarter-period angles; flat coordinates are small rationals inside the region."""
    lower = dict(scenario.region)
    pts = []
    for _ in range(count):
        fib = tuple(Fraction(rng.randrange(4), 4) for _ in range(scenario.fibre_rank))
        base = []
        for b in range(2 * scenario.complex_dim):
            if scenario.base_kind == "torus":
                base.append(Fraction(rng.randrange(4), 4))
            elif b in lower:
                base.append(Fraction(lower[b]) + Fraction(rng.randint(1, 6), rng.randint(1, 3)))
            else:
                base.append(Fraction(rng.randint(-6, 6), rng.randint(1, 3)))
        pts.append(Point(fib, tuple(base)))
    return pts


def scenario_algebra(scenario: Scenario, with_tau: bool) -> PointAlgebra:
    n = scenario.ngens
    return PointAlgebra(
        n,
        [scenario.gen_name(g) for g in range(n)],
        [scenario.conj_gen(g) for g in range(n)],
        QQ_I_TAU if with_tau else QQ_I,
    )


def evaluate_form(a: GradedForm, point: Point, with_tau=None) -> PointSpinor:
    sc = a.scenario
    if sc.base_kind == "torus":
        vals = {m: c.evaluate(point.fibre, point.base, ()) for m, c in a.terms.items()}
    else:
        vals = {m: c.evaluate(point.fibre, (), point.base) for m, c in a.terms.items()}
    if with_tau is None:
        with_tau = any(set(v) - {0} for v in vals.values())
    A = scenario_algebra(sc, with_tau)
    return A.spinor(vals)
