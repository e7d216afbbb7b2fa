"""Exterior derivative in the adapted coframe and its graded components.

``d`` is computed once, directly in ``{dz, dzb, eta}``; each of the operators
``del, delbar, theta_plus, theta_zero, theta_minus, d_S`` is the part of
``d`` that shifts the trigrading by a fixed amount.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .coeff import CoeffFn, QI
from .errors import InvariantViolation
from .forms import GradedForm, Scenario, sort_monomial, wedge_monomials

SHIFTS = {
    "del": (1, 0, 0),
    "delbar": (0, 1, 0),
    "theta_plus": (2, 0, -1),
    "theta_zero": (1, 1, -1),
    "theta_minus": (0, 2, -1),
    "dS": (0, 0, 1),
}
_BY_SHIFT = {v: k for k, v in SHIFTS.items()}
THETA_OPS = ("theta_plus", "theta_zero", "theta_minus")

HALF = QI(Fraction(1, 2))
HALF_I = QI(0, Fraction(1, 2))


# -- d on functions and generators --------------------------------------------


def _horizontal(sc: Scenario, f: CoeffFn, dt: list, b: int) -> CoeffFn:
    """Horizontal lift ``X_b f = d_b f + A^i_b d_{t_i} f``."""
    out = f.differentiate(sc.base_var(b))
    for i, g in enumerate(dt):
        if g:
            a = sc.connection.get((i, b))
            if a:
                out = out + a * g
    return out


def d_function(sc: Scenario, f: CoeffFn) -> dict:
    """``df`` as a map ``generator -> coefficient``."""
    out = {}
    p, k = sc.fibre_rank, sc.complex_dim
    dt = [f.differentiate(sc.fibre_var(i)) for i in range(p)]
    for i, g in enumerate(dt):
        if g:
            out[sc.gen_eta(i)] = g
    for a in range(k):
        xr = _horizontal(sc, f, dt, 2 * a)
        xi = _horizontal(sc, f, dt, 2 * a + 1)
        if not xr and not xi:
            continue
        z = (xr + xi.scale(QI(0, -1))).scale(HALF)
        zb = (xr + xi.scale(QI(0, 1))).scale(HALF)
        if z:
            out[sc.gen_dz(a)] = z
        if zb:
            out[sc.gen_dzb(a)] = zb
    return out


def _d_generator(sc: Scenario, g: int) -> GradedForm:
    """``d(dz) = 0`` and ``d(eta^i) = -sum_b dA^i_b ^ dx^b``."""
    cache = sc._cache.setdefault("d_gen", {})
    if g not in cache:
        out = sc.zero_form()
        if sc.gen_family(g) == 2:
            i = g - 2 * sc.complex_dim
            for b in range(2 * sc.complex_dim):
                a = sc.connection.get((i, b))
                if not a:
                    continue
                da = GradedForm(sc, {(h,): c for h, c in d_function(sc, a).items()})
                out = out - da.wedge(sc.dx(b))
        cache[g] = out
    return cache[g]


def _d_monomial(sc: Scenario, mono: tuple) -> GradedForm:
    cache = sc._cache.setdefault("d_mono", {})
    if mono not in cache:
        out = sc.zero_form()
        for pos, g in enumerate(mono):
            dg = _d_generator(sc, g)
            if not dg:
                continue
            left = sc.monomial(mono[:pos]) if pos else sc.one()
            right = sc.monomial(mono[pos + 1:])
            piece = left.wedge(dg).wedge(right)
            out = out + (piece if pos % 2 == 0 else -piece)
        cache[mono] = out
    return cache[mono]


def _d_term(sc: Scenario, mono: tuple, c: CoeffFn, acc: dict):
    for g, v in d_function(sc, c).items():
        sign, m = wedge_monomials((g,), mono)
        if sign:
            _acc(acc, m, v if sign > 0 else -v)
    for m, v in _d_monomial(sc, mono).terms.items():
        _acc(acc, m, c * v)


def _acc(acc, m, v):
    s = acc.get(m)
    acc[m] = v if s is None else s + v


def exterior_d(a: GradedForm) -> GradedForm:
    """The exterior derivative of ``a`` written in the adapted coframe."""
    sc = a.scenario
    acc = {}
    for mono, c in a.terms.items():
        _d_term(sc, mono, c, acc)
    return GradedForm(sc, acc)


def split_d(a: GradedForm, d=None) -> dict:
    """Decompose ``d a`` by trigrading shift: ``{operator name: form}``.

    ``d`` may be replaced by another operator (used for negative controls).
    """
    sc = a.scenario
    out = {}
    if d is None:
        buckets = {}
        for mono, c in a.terms.items():
            acc = {}
            _d_term(sc, mono, c, acc)
            deg = a.mono_degree(mono)
            for m, v in acc.items():
                d2 = a.mono_degree(m)
                shift = (d2[0] - deg[0], d2[1] - deg[1], d2[2] - deg[2])
                _acc(buckets.setdefault(shift, {}), m, v)
    else:
        buckets = {}
        for deg, part in a.homogeneous_parts().items():
            for m, v in d(part).terms.items():
                d2 = a.mono_degree(m)
                shift = (d2[0] - deg[0], d2[1] - deg[1], d2[2] - deg[2])
                _acc(buckets.setdefault(shift, {}), m, v)
    for shift, terms in buckets.items():
        form = GradedForm(sc, terms)
        if not form:
            continue
        name = _BY_SHIFT.get(shift)
        if name is None:
            raise InvariantViolation(f"d produced an unexpected degree shift {shift}")
        out[name] = form
    if sc.curvature_override is not None and d is None:
        for name in THETA_OPS:
            out.pop(name, None)
        for name, form in split_theta_tensor(a).items():
            out[name] = form
    return out


def component(a: GradedForm, op: str) -> GradedForm:
    if op not in SHIFTS:
        raise ValueError(f"unknown operator {op!r}; expected one of {sorted(SHIFTS)}")
    return split_d(a).get(op, a.scenario.zero_form())


def partial(a):
    return component(a, "del")


def partial_bar(a):
    return component(a, "delbar")


def theta_plus(a):
    return component(a, "theta_plus")


def theta_zero(a):
    return component(a, "theta_zero")


def theta_minus(a):
    return component(a, "theta_minus")


def d_S(a: GradedForm) -> GradedForm:
    """Fibre derivative ``sum_i d_{t_i} c eta^i ^``; generator differentials never shift by (0,0,1)."""
    sc = a.scenario
    acc = {}
    for mono, c in a.terms.items():
        for i in range(sc.fibre_rank):
            v = c.differentiate(sc.fibre_var(i))
            if not v:
                continue
            sign, m = wedge_monomials((sc.gen_eta(i),), mono)
            if sign:
                _acc(acc, m, v if sign > 0 else -v)
    return GradedForm(sc, acc)


def nabla(a: GradedForm) -> GradedForm:
    parts = split_d(a)
    z = a.scenario.zero_form()
    return parts.get("del", z) + parts.get("delbar", z)


def theta(a: GradedForm) -> GradedForm:
    parts = split_d(a)
    out = a.scenario.zero_form()
    for name in THETA_OPS:
        out = out + parts.get(name, out.scenario.zero_form())
    return out


def d_K(a: GradedForm) -> GradedForm:
    return exterior_d(a).restrict_K()


# -- curvature ------------------------------------------------------------------


def curvature(sc: Scenario) -> list:
    """``F^j``, the (2;0) forms with ``Theta(eta^j) = -F^j``."""
    if sc.curvature_override is not None:
        out = [sc.zero_form() for _ in range(sc.fibre_rank)]
        for (j, gens), c in sc.curvature_override.items():
            out[j] = out[j] + sc.monomial(gens, c)
        return out
    return [-(_d_generator(sc, sc.gen_eta(j)).project_nk(2, 0)) for j in range(sc.fibre_rank)]


def theta_from_tensor(a: GradedForm, F: list) -> GradedForm:
    """The derivation ``Theta`` with ``Theta(eta^j) = -F^j``, zero on ``dz``, ``dzb`` and functions."""
    sc = a.scenario
    out = sc.zero_form()
    eta0 = 2 * sc.complex_dim
    for mono, c in a.terms.items():
        for pos, g in enumerate(mono):
            if g < eta0 or not F[g - eta0]:
                continue
            left = sc.monomial(mono[:pos]) if pos else sc.one()
            right = sc.monomial(mono[pos + 1:])
            piece = left.wedge(-F[g - eta0]).wedge(right).scale(c)
            out = out + (piece if pos % 2 == 0 else -piece)
    return out


def split_theta_tensor(a: GradedForm) -> dict:
    F = curvature(a.scenario)
    out = {}
    for deg, part in a.homogeneous_parts().items():
        img = theta_from_tensor(part, F)
        for name in THETA_OPS:
            s = SHIFTS[name]
            piece = img.project_degree((deg[0] + s[0], deg[1] + s[1], deg[2] + s[2]))
            if piece:
                out[name] = out.get(name, a.scenario.zero_form()) + piece
    return out


# -- contraction ----------------------------------------------------------------


def contract(a: GradedForm, images: dict) -> GradedForm:
    """Interior product by a vector field given on generators.

    ``images`` maps a generator index to the coefficient ``iota_V(generator)``;
    missing generators contract to zero.
    """
    sc = a.scenario
    terms = {}
    for mono, c in a.terms.items():
        for pos, g in enumerate(mono):
            v = images.get(g)
            if not v:
                continue
            rest = mono[:pos] + mono[pos + 1:]
            val = c * v
            _acc(terms, rest, val if pos % 2 == 0 else -val)
    return GradedForm(sc, terms)


# -- random forms ----------------------------------------------------------------


def random_coeff(sc: Scenario, rng: random.Random, max_terms=3, max_freq=2, max_deg=2,
                 fibre=True, real=False) -> CoeffFn:
    p, q, r = sc.shape
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        n = tuple(rng.randint(-max_freq, max_freq) for _ in range(p)) if fibre else (0,) * p
        m = tuple(rng.randint(-max_freq, max_freq) for _ in range(q))
        e = [0] * r
        for _ in range(rng.randint(0, max_deg) if r else 0):
            e[rng.randrange(r)] += 1
        c = QI(rng.randint(-3, 3), rng.randint(-3, 3))
        terms[(n, m, tuple(e), 0)] = c
    f = CoeffFn(sc.shape, terms)
    if real:
        f = f + f.conjugate()
    return f


def random_form(sc: Scenario, rng: random.Random, max_terms=8, degree=None, **kw) -> GradedForm:
    """Random form with bounded frequencies, polynomial degree and term count."""
    n = sc.ngens
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        size = degree if degree is not None else rng.randint(0, n)
        mono = tuple(sorted(rng.sample(range(n), min(size, n))))
        terms[mono] = random_coeff(sc, rng, **kw)
    return GradedForm(sc, terms)


def random_homogeneous(sc: Scenario, rng: random.Random, deg, max_terms=4, **kw) -> GradedForm:
    k, p = sc.complex_dim, sc.fibre_rank
    i, j, s = deg
    terms = {}
    for _ in range(max_terms):
        mono = tuple(sorted(
            rng.sample(range(k), i)
            + [k + x for x in rng.sample(range(k), j)]
            + [2 * k + x for x in rng.sample(range(p), s)]
        ))
        terms[mono] = random_coeff(sc, rng, **kw)
    return GradedForm(sc, terms)


# -- relation verifier ------------------------------------------------------------


@dataclass
class RelationReport:
    ok: bool
    trials: int
    checked: dict = field(default_factory=dict)
    violation: tuple = None

    def summary(self) -> str:
        if self.ok:
            return f"all {len(self.checked)} relations hold on {self.trials} random forms"
        name, form = self.violation
        return f"violation of {name}: residual {form}"


class _Op:
    """Operator bundle built on a (possibly substituted) exterior derivative."""

    def __init__(self, d=None):
        self.d = d

    def __call__(self, name, a):
        if name == "d":
            return exterior_d(a) if self.d is None else self.d(a)
        if name == "nabla":
            p = split_d(a, self.d)
            return p.get("del", a.scenario.zero_form()) + p.get("delbar", a.scenario.zero_form())
        if name == "Theta":
            p = split_d(a, self.d)
            out = a.scenario.zero_form()
            for n in THETA_OPS:
                out = out + p.get(n, out.scenario.zero_form())
            return out
        return split_d(a, self.d).get(name, a.scenario.zero_form())

    def anti(self, x, y, a):
        return self(x, self(y, a)) + self(y, self(x, a))

    def sq(self, x, a):
        return self(x, self(x, a))


def relation_table(op: _Op):
    """Name -> function of a form that must vanish identically."""
    return {
        "d^2": lambda a: op.sq("d", a),
        "AC1": lambda a: op.sq("del", a) + op.anti("theta_plus", "dS", a),
        "AC1bar": lambda a: op.sq("delbar", a) + op.anti("theta_minus", "dS", a),
        "AC2": lambda a: op.anti("del", "delbar", a) + op.anti("theta_zero", "dS", a),
        "AC3": lambda a: op.anti("theta_plus", "theta_minus", a) + op.sq("theta_zero", a),
        "AC4": lambda a: op.anti("theta_plus", "delbar", a) + op.anti("theta_zero", "del", a),
        "AC4bar": lambda a: op.anti("theta_minus", "del", a) + op.anti("theta_zero", "delbar", a),
        "[del,dS]": lambda a: op.anti("del", "dS", a),
        "[delbar,dS]": lambda a: op.anti("delbar", "dS", a),
        "[theta_plus,theta_zero]": lambda a: op.anti("theta_plus", "theta_zero", a),
        "[theta_minus,theta_zero]": lambda a: op.anti("theta_minus", "theta_zero", a),
        "[del,theta_plus]": lambda a: op.anti("del", "theta_plus", a),
        "[delbar,theta_minus]": lambda a: op.anti("delbar", "theta_minus", a),
        "dS^2": lambda a: op.sq("dS", a),
        "theta_plus^2": lambda a: op.sq("theta_plus", a),
        "theta_minus^2": lambda a: op.sq("theta_minus", a),
        "nabla^2+dS.Theta+Theta.dS": lambda a: op.sq("nabla", a) + op.anti("dS", "Theta", a),
        "[nabla,Theta]": lambda a: op.anti("nabla", "Theta", a),
        "Theta^2": lambda a: op.sq("Theta", a),
        "[nabla,dS]": lambda a: op.anti("nabla", "dS", a),
    }


def ac5_residual(op: _Op, a: GradedForm) -> GradedForm:
    """Harmonic part of ``(del delbar + delbar del) a`` for a ``d_S``-closed ``a``."""
    return op.anti("del", "delbar", a).fibre_average()


def random_closed(sc: Scenario, rng: random.Random, op: _Op = None, **kw) -> GradedForm:
    """``d_S b + h`` with ``h`` fibre-constant, hence ``d_S``-closed."""
    op = op or _Op()
    b = random_form(sc, rng, max_terms=4, **kw)
    h = random_form(sc, rng, max_terms=3, fibre=False, **kw)
    return op("dS", b) + h


def verify_relations(scenario: Scenario, trials: int = 20, seed: int = 0, d=None) -> RelationReport:
    """Check every quadratic relation on ``trials`` random forms.

    Passing ``d`` substitutes the exterior derivative, which lets tests plant
    a corrupted operator and watch the verifier catch it.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = random.Random(seed)
    op = _Op(d)
    table = relation_table(op)
    report = RelationReport(ok=True, trials=trials, checked={name: 0 for name in table})
    report.checked["AC5 (cohomology)"] = 0
    for _ in range(trials):
        a = random_form(scenario, rng, max_terms=4)
        for name, rel in table.items():
            r = rel(a)
            if r:
                report.ok = False
                report.violation = (name, r)
                return report
            report.checked[name] += 1
        c = random_closed(scenario, rng, op)
        if op("dS", c):
            report.ok = False
            report.violation = ("d_S-closed sample", op("dS", c))
            return report
        r = ac5_residual(op, c)
        if r:
            report.ok = False
            report.violation = ("AC5 (cohomology)", r)
            return report
        report.checked["AC5 (cohomology)"] += 1
    return report
