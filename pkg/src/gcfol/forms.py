"""Trigraded forms on a model fibre bundle, written in the adapted coframe.

The coframe generators are ordered ``dz^1..dz^k < dzb^1..dzb^k < eta^1..eta^p``
with ``eta^i = dt^i - A^i_b dx^b``.  A generator's family fixes its
trigrading: ``dz`` is (1,0;0), ``dzb`` is (0,1;0) and ``eta`` is (0,0;1).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .coeff import CoeffFn, QI, ZERO, ONE
from .errors import DomainError, InvalidGenerator, ScenarioMismatch, ScenarioSemanticError


@dataclass(frozen=True)
class LatticeGenerator:
    """Deck transformation ``(x, t) -> (x + translation, matrix @ t + shift)``.

    ``matrix[i][j]`` is the coefficient of ``eta^j`` in the pullback of ``eta^i``.
    """

    translation: tuple
    matrix: Optional[tuple] = None
    shift: Optional[tuple] = None

    def fibre_matrix(self, p):
        if self.matrix is None:
            return tuple(tuple(int(i == j) for j in range(p)) for i in range(p))
        return self.matrix


@dataclass(frozen=True)
class SolverSettings:
    degree_cap: Optional[int] = None
    trials: int = 20
    seed: int = 0


@dataclass(eq=True)
class Scenario:
    """A model bundle: torus fibre ``T^p`` over flat ``R^{2k}`` or torus ``T^{2k}``.

    ``connection`` maps ``(fibre index, real base index)`` to ``A^i_b``;
    ``omega_terms`` maps ``(i, j)`` with ``i < j`` to the coefficient of
    ``eta^i ^ eta^j``.  All indices are 0-based.
    """

    fibre_rank: int
    base_kind: str
    complex_dim: int
    connection: dict = field(default_factory=dict)
    omega_terms: dict = field(default_factory=dict)
    lattice: tuple = ()
    curvature_override: Optional[dict] = None
    region: tuple = ()
    sample_points: tuple = ()
    settings: SolverSettings = field(default_factory=SolverSettings)
    name: str = "scenario"
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.base_kind not in ("flat", "torus"):
            raise DomainError(f"base kind must be 'flat' or 'torus', not {self.base_kind!r}")
        if self.fibre_rank < 1 or self.complex_dim < 0:
            raise DomainError("fibre rank must be positive and base dimension nonnegative")

    def __hash__(self):
        return id(self)

    # -- coordinates --------------------------------------------------------

    @property
    def shape(self):
        p, k = self.fibre_rank, self.complex_dim
        return (p, 2 * k, 0) if self.base_kind == "torus" else (p, 0, 2 * k)

    @property
    def ngens(self):
        return 2 * self.complex_dim + self.fibre_rank

    @property
    def dim(self):
        return self.ngens

    def base_var(self, b: int) -> str:
        return ("u" if self.base_kind == "torus" else "x") + str(b + 1)

    def fibre_var(self, i: int) -> str:
        return f"t{i + 1}"

    def coeff(self, value) -> CoeffFn:
        if isinstance(value, CoeffFn):
            if value.shape != self.shape:
                raise ScenarioMismatch("coefficient belongs to a different scenario")
            return value
        return CoeffFn.const(self.shape, QI.coerce(value))

    def base_coordinate(self, b: int) -> CoeffFn:
        if self.base_kind != "flat":
            raise DomainError("torus-base angles are not global functions")
        return CoeffFn.var(self.shape, self.base_var(b))

    def z(self, a: int) -> CoeffFn:
        """Holomorphic coordinate ``z^a = x^{2a} + i x^{2a+1}`` on a flat base."""
        return self.base_coordinate(2 * a) + self.base_coordinate(2 * a + 1).scale(QI(0, 1))

    def A(self, i: int, b: int) -> CoeffFn:
        return self.connection.get((i, b)) or CoeffFn.zero(self.shape)

    # -- generators ---------------------------------------------------------

    def gen_dz(self, a):
        return a

    def gen_dzb(self, a):
        return self.complex_dim + a

    def gen_eta(self, i):
        return 2 * self.complex_dim + i

    def gen_name(self, g: int) -> str:
        k = self.complex_dim
        if g < k:
            return f"dz{g + 1}"
        if g < 2 * k:
            return f"dzb{g - k + 1}"
        return f"eta{g - 2 * k + 1}"

    def gen_by_name(self, name: str) -> int:
        for g in range(self.ngens):
            if self.gen_name(g) == name:
                return g
        raise DomainError(f"unknown coframe generator {name!r}")

    def gen_family(self, g: int) -> int:
        k = self.complex_dim
        return 0 if g < k else (1 if g < 2 * k else 2)

    def conj_gen(self, g: int) -> int:
        k = self.complex_dim
        if g < k:
            return g + k
        if g < 2 * k:
            return g - k
        return g

    # -- forms --------------------------------------------------------------

    def zero_form(self) -> "GradedForm":
        return GradedForm(self, {})

    def function(self, f) -> "GradedForm":
        return GradedForm(self, {(): self.coeff(f)})

    def one(self) -> "GradedForm":
        return self.function(1)

    def monomial(self, gens, coeff=1) -> "GradedForm":
        gens = tuple(self.gen_by_name(g) if isinstance(g, str) else g for g in gens)
        sign, mono = sort_monomial(gens)
        if sign == 0:
            return self.zero_form()
        return GradedForm(self, {mono: self.coeff(coeff).scale(sign)})

    def dz(self, a):
        return self.monomial((self.gen_dz(a),))

    def dzb(self, a):
        return self.monomial((self.gen_dzb(a),))

    def eta(self, i):
        return self.monomial((self.gen_eta(i),))

    def dx(self, b: int) -> "GradedForm":
        """Real base coframe ``dx^b`` in terms of ``dz`` and ``dzb``."""
        a, imag = divmod(b, 2)
        if not imag:
            return (self.dz(a) + self.dzb(a)).scale(QI(Fraction(1, 2)))
        return (self.dz(a) - self.dzb(a)).scale(QI(0, Fraction(-1, 2)))

    def omega(self) -> "GradedForm":
        out = self.zero_form()
        for (i, j), c in self.omega_terms.items():
            out = out + self.monomial((self.gen_eta(i), self.gen_eta(j)), c)
        return out

    def canonical_base_generator(self) -> "GradedForm":
        """``dz^1 ^ ... ^ dz^k``, a closed generator of the base canonical bundle."""
        return self.monomial(tuple(self.gen_dz(a) for a in range(self.complex_dim)))

    def with_connection(self, connection: dict) -> "Scenario":
        return replace(self, connection=dict(connection))

    # -- identity -----------------------------------------------------------

    def fingerprint(self) -> str:
        from .scenario_io import serialize_scenario
        return hashlib.sha256(serialize_scenario(self).encode()).hexdigest()[:16]


@lru_cache(maxsize=None)
def sort_monomial(gens: tuple):
    """Sort generators with sign; returns ``(0, ())`` on a repeated generator."""
    gens = list(gens)
    sign = 1
    for i in range(1, len(gens)):
        j = i
        while j > 0 and gens[j - 1] > gens[j]:
            gens[j - 1], gens[j] = gens[j], gens[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(gens, gens[1:]):
        if a == b:
            return 0, ()
    return sign, tuple(gens)


@lru_cache(maxsize=None)
def wedge_monomials(a: tuple, b: tuple):
    if not a:
        return 1, b
    if not b:
        return 1, a
    sb = set(b)
    if any(x in sb for x in a):
        return 0, ()
    inversions = 0
    for x in a:
        for y in b:
            if x > y:
                inversions += 1
    return (-1 if inversions % 2 else 1), tuple(sorted(a + b))


@lru_cache(maxsize=None)
def _mono_degree(mono: tuple, k: int):
    i = j = s = 0
    for g in mono:
        if g < k:
            i += 1
        elif g < 2 * k:
            j += 1
        else:
            s += 1
    return (i, j, s)


class GradedForm:
    """Immutable finite sum of ``CoeffFn * coframe monomial`` on one scenario."""

    __slots__ = ("scenario", "terms", "_hash")

    def __init__(self, scenario: Scenario, terms=None):
        self.scenario = scenario
        self.terms = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, scenario, terms):
        obj = cls.__new__(cls)
        obj.scenario = scenario
        obj.terms = terms
        obj._hash = None
        return obj

    def _check(self, other):
        if not isinstance(other, GradedForm):
            raise TypeError(f"expected GradedForm, got {type(other).__name__}")
        if other.scenario is not self.scenario:
            raise ScenarioMismatch("forms belong to different scenarios")

    # -- linear structure ---------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, Fraction, QI, CoeffFn)):
            other = self.scenario.function(other)
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            if s is None:
                terms[m] = c
            else:
                s = s + c
                if s:
                    terms[m] = s
                else:
                    del terms[m]
        return GradedForm._raw(self.scenario, terms)

    __radd__ = __add__

    def __neg__(self):
        return GradedForm._raw(self.scenario, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, QI, CoeffFn)):
            other = self.scenario.function(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "GradedForm":
        """Multiply by a scalar or a coefficient function."""
        if isinstance(c, CoeffFn):
            if c.shape != self.scenario.shape:
                raise ScenarioMismatch("coefficient belongs to a different scenario")
            return GradedForm(self.scenario, {m: v * c for m, v in self.terms.items()})
        c = QI.coerce(c)
        if not c:
            return GradedForm._raw(self.scenario, {})
        return GradedForm._raw(self.scenario, {m: v.scale(c) for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, GradedForm):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def wedge(self, other: "GradedForm") -> "GradedForm":
        self._check(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                sign, m = wedge_monomials(m1, m2)
                if not sign:
                    continue
                v = c1 * c2
                if sign < 0:
                    v = -v
                s = terms.get(m)
                terms[m] = v if s is None else s + v
        return GradedForm(self.scenario, terms)

    # -- structure ----------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, GradedForm):
            return self.scenario is other.scenario and self.terms == other.terms
        if isinstance(other, int) and other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def mono_degree(self, mono) -> tuple:
        return _mono_degree(mono, self.scenario.complex_dim)

    def degrees(self) -> set:
        return {self.mono_degree(m) for m in self.terms}

    def total_degrees(self) -> set:
        return {len(m) for m in self.terms}

    def homogeneous_parts(self) -> dict:
        out = {}
        for m, c in self.terms.items():
            out.setdefault(self.mono_degree(m), {})[m] = c
        return {d: GradedForm._raw(self.scenario, t) for d, t in out.items()}

    def filter(self, predicate) -> "GradedForm":
        return GradedForm._raw(self.scenario, {
            m: c for m, c in self.terms.items() if predicate(self.mono_degree(m))
        })

    def project_degree(self, deg) -> "GradedForm":
        deg = tuple(deg)
        return self.filter(lambda d: d == deg)

    def project_nk(self, n: int, s: int) -> "GradedForm":
        """Projection to the real bidegree ``(n; s)``."""
        return self.filter(lambda d: d[0] + d[1] == n and d[2] == s)

    def truncate(self) -> "GradedForm":
        return self.filter(lambda d: d[0] >= 1 and d[1] >= 1)

    def restrict_K(self) -> "GradedForm":
        return self.filter(lambda d: d[0] == 0)

    def in_truncated_span(self) -> bool:
        """Every term has at least one holomorphic base degree."""
        return all(d[0] >= 1 for d in self.degrees())

    def conjugate(self) -> "GradedForm":
        sc = self.scenario
        terms = {}
        for m, c in self.terms.items():
            sign, m2 = sort_monomial(tuple(sc.conj_gen(g) for g in m))
            v = c.conjugate()
            terms[m2] = v if sign > 0 else -v
        return GradedForm._raw(sc, terms)

    def is_real(self) -> bool:
        return self == self.conjugate()

    def real_part(self) -> "GradedForm":
        return (self + self.conjugate()).scale(QI(Fraction(1, 2)))

    def imag_part(self) -> "GradedForm":
        return (self - self.conjugate()).scale(QI(0, Fraction(-1, 2)))

    def fibre_average(self) -> "GradedForm":
        return GradedForm(self.scenario, {m: c.fibre_average() for m, c in self.terms.items()})

    def map_coefficients(self, fn) -> "GradedForm":
        return GradedForm(self.scenario, {m: fn(c) for m, c in self.terms.items()})

    def coefficient(self, gens) -> CoeffFn:
        gens = tuple(self.scenario.gen_by_name(g) if isinstance(g, str) else g for g in gens)
        sign, mono = sort_monomial(gens)
        c = self.terms.get(mono)
        if c is None or not sign:
            return CoeffFn.zero(self.scenario.shape)
        return c if sign > 0 else -c

    def has_fibre_dependence(self) -> bool:
        return any(c.depends_on_fibre() for c in self.terms.values())

    def poly_degree(self) -> int:
        return max((c.poly_degree() for c in self.terms.values()), default=0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def __repr__(self):
        return f"GradedForm({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            name = "^".join(self.scenario.gen_name(g) for g in m)
            cs = str(c)
            if not name:
                parts.append(cs)
            elif cs == "1":
                parts.append(name)
            elif cs == "-1":
                parts.append("-" + name)
            else:
                parts.append(f"({cs})*{name}")
        return " + ".join(parts)


def wedge(a: GradedForm, b: GradedForm) -> GradedForm:
    return a.wedge(b)


def project_degree(a: GradedForm, deg) -> GradedForm:
    return a.project_degree(deg)


def truncate(a: GradedForm) -> GradedForm:
    return a.truncate()


def restrict_K(a: GradedForm) -> GradedForm:
    return a.restrict_K()


def wedge_power(a: GradedForm, n: int) -> GradedForm:
    out = a.scenario.one()
    for _ in range(n):
        out = out.wedge(a)
    return out


def fibre_volume(scenario: Scenario) -> GradedForm:
    return scenario.monomial(tuple(scenario.gen_eta(i) for i in range(scenario.fibre_rank)))


def fibre_pfaffian(scenario: Scenario) -> CoeffFn:
    """Coefficient of ``eta^1 ^ ... ^ eta^p`` in ``omega^(p/2) / (p/2)!``."""
    p = scenario.fibre_rank
    if p % 2:
        raise ScenarioSemanticError("fibre rank even", f"fibre rank {p} is odd")
    h = p // 2
    top = wedge_power(scenario.omega().project_degree((0, 0, 2)), h)
    fact = 1
    for j in range(2, h + 1):
        fact *= j
    vol = tuple(scenario.gen_eta(i) for i in range(p))
    return top.terms.get(vol, CoeffFn.zero(scenario.shape)).scale(QI(Fraction(1, fact)))


# 2*pi lies strictly between these bounds.
TAU_LO = Fraction(314159, 50000)
TAU_HI = Fraction(314160, 50000)


def _tau_interval(k):
    lo, hi = TAU_LO ** k, TAU_HI ** k
    return (lo, hi) if lo <= hi else (hi, lo)


def certify_nowhere_zero(f: CoeffFn, region=()) -> bool:
    """Sufficient test that a real function never vanishes (on ``region``).

    Handles constant functions, trigonometric sums dominated by their mean,
    and affine polynomials on half-spaces ``x_b > c``.
    """
    if not f.is_real() or f.is_zero():
        return False
    p, q, r = f.shape
    flat = any(any(key[2]) for key in f.terms)
    angular = any(any(key[0]) or any(key[1]) for key in f.terms)
    if not flat:
        lo = hi = Fraction(0)
        slack = Fraction(0)
        for (n, m, e, k), c in f.terms.items():
            tlo, thi = _tau_interval(k)
            if not any(n) and not any(m):
                # mean value is real
                a, b = c.re * tlo, c.re * thi
                lo += min(a, b)
                hi += max(a, b)
            else:
                slack += (abs(c.re) + abs(c.im)) * thi
        return lo - slack > 0 or hi + slack < 0
    if angular or f.tau_powers() != {0} or f.poly_degree() > 1:
        return False
    lower = {b: Fraction(c) for b, c in region}
    a = Fraction(0)
    slopes = {}
    for (n, m, e, k), c in f.terms.items():
        if not any(e):
            a = c.re
        else:
            slopes[e.index(1)] = c.re
    if any(b not in lower for b in slopes):
        return False
    signs = {v > 0 for v in slopes.values()}
    if len(signs) > 1:
        return False
    edge = a + sum(v * lower[b] for b, v in slopes.items())
    return edge >= 0 if signs == {True} else edge <= 0


# -- affine pullback ---------------------------------------------------------


def _int_det(matrix) -> Fraction:
    rows = [[Fraction(v) for v in row] for row in matrix]
    n = len(rows)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if rows[r][c]), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            rows[c], rows[piv] = rows[piv], rows[c]
            det = -det
        det *= rows[c][c]
        for r in range(c + 1, n):
            f = rows[r][c] / rows[c][c]
            if f:
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[c])]
    return det


def validate_generator(scenario: Scenario, gen: LatticeGenerator):
    p, k2 = scenario.fibre_rank, 2 * scenario.complex_dim
    if len(gen.translation) != k2:
        raise InvalidGenerator(f"translation needs {k2} components")
    m = gen.fibre_matrix(p)
    if len(m) != p or any(len(row) != p for row in m):
        raise InvalidGenerator(f"fibre matrix must be {p}x{p}")
    if any(Fraction(v).denominator != 1 for row in m for v in row):
        raise InvalidGenerator("fibre matrix must have integer entries")
    if abs(_int_det(m)) != 1:
        raise InvalidGenerator("fibre matrix is not invertible over the integers")
    if gen.shift is not None:
        if len(gen.shift) != p or any((Fraction(s) * 4).denominator != 1 for s in gen.shift):
            raise InvalidGenerator("fibre shift must be quarter periods")
    if scenario.base_kind == "torus":
        if any((Fraction(c) * 4).denominator != 1 for c in gen.translation):
            raise InvalidGenerator("torus-base translations must be quarter periods")


def pullback_coefficient(scenario: Scenario, gen: LatticeGenerator, f: CoeffFn) -> CoeffFn:
    """``f o g`` for the deck transformation ``g``."""
    p = scenario.fibre_rank
    m = gen.fibre_matrix(p)
    if scenario.base_kind == "torus":
        return f.substitute_angles(m, gen.shift, gen.translation)
    g = f.substitute_angles(m, gen.shift, None)
    images = [scenario.base_coordinate(b) + Fraction(c) for b, c in enumerate(gen.translation)]
    return g.substitute_flat(images)


def pullback_affine(gen: LatticeGenerator, a: GradedForm) -> GradedForm:
    """Pull a form back along a lattice generator.

    ``g^* eta^i = sum_j M_ij eta^j + sum_b (sum_j M_ij A^j_b - A^i_b o g) dx^b``,
    which reduces to the linear substitution when the connection is invariant.
    """
    sc = a.scenario
    validate_generator(sc, gen)
    p = sc.fibre_rank
    m = gen.fibre_matrix(p)
    cache = sc._cache.setdefault(("pullback_gens", gen), {})
    if not cache:
        for g in range(sc.ngens):
            if sc.gen_family(g) < 2:
                cache[g] = sc.monomial((g,))
                continue
            i = g - 2 * sc.complex_dim
            img = sc.zero_form()
            for j in range(p):
                if m[i][j]:
                    img = img + sc.eta(j).scale(m[i][j])
            for b in range(2 * sc.complex_dim):
                c = CoeffFn.zero(sc.shape)
                for j in range(p):
                    if m[i][j]:
                        c = c + sc.A(j, b).scale(m[i][j])
                c = c - pullback_coefficient(sc, gen, sc.A(i, b))
                if c:
                    img = img + sc.dx(b).scale(c)
            cache[g] = img
    out = sc.zero_form()
    for mono, c in a.terms.items():
        piece = sc.function(pullback_coefficient(sc, gen, c))
        for g in mono:
            piece = piece.wedge(cache[g])
        out = out + piece
    return out


def connection_is_invariant(gen: LatticeGenerator, scenario: Scenario) -> bool:
    """``g^* eta^i = sum_j M_ij eta^j`` for every ``i``."""
    validate_generator(scenario, gen)
    m = gen.fibre_matrix(scenario.fibre_rank)
    for i in range(scenario.fibre_rank):
        expected = scenario.zero_form()
        for j in range(scenario.fibre_rank):
            if m[i][j]:
                expected = expected + scenario.eta(j).scale(m[i][j])
        if pullback_affine(gen, scenario.eta(i)) != expected:
            return False
    return True
