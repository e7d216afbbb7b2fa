"""Fibrewise d_S-cohomology on torus fibres and base homotopy operators.

On a torus fibre ``d_S`` acts on the Fourier mode ``n`` as
``2*pi*i * (sum_i n_i eta^i) ^``, so contraction with ``sum_i n_i d/d eta^i``
divided by ``2*pi*i*|n|^2`` is an exact homotopy away from the zero mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import exterior_d, nabla, d_S, partial, partial_bar
from .coeff import CoeffFn, QI
from .errors import InvariantViolation, NotClosed, NotExact, PreconditionError
from .forms import GradedForm, Scenario


@dataclass(frozen=True)
class CohClass:
    """A d_S-class stored by its fibre-constant representative."""

    rep: GradedForm

    def is_zero(self) -> bool:
        return self.rep.is_zero()

    def __bool__(self):
        return not self.is_zero()

    @property
    def scenario(self):
        return self.rep.scenario

    def degrees(self):
        return self.rep.degrees()

    def __str__(self):
        return "0" if self.is_zero() else f"[{self.rep}]"


def _require_closed(a: GradedForm):
    r = d_S(a)
    if r:
        raise NotClosed(f"form is not d_S-closed; d_S gives {r}")


def dS_class(a: GradedForm) -> CohClass:
    _require_closed(a)
    return CohClass(a.fibre_average())


def fibre_homotopy(a: GradedForm) -> GradedForm:
    """Apply the Koszul homotopy mode by mode; the zero mode maps to zero."""
    sc = a.scenario
    eta0 = 2 * sc.complex_dim
    acc = {}
    for mono, c in a.terms.items():
        for (n, m, e, k), v in c.terms.items():
            norm = sum(x * x for x in n)
            if not norm:
                continue
            for pos, g in enumerate(mono):
                if g < eta0:
                    continue
                ni = n[g - eta0]
                if not ni:
                    continue
                # v * n_i / (i |n|^2), one power of tau fewer
                w = v * QI(0, Fraction(-ni, norm))
                if pos % 2:
                    w = -w
                rest = mono[:pos] + mono[pos + 1:]
                key = (n, m, e, k - 1)
                slot = acc.setdefault(rest, {})
                s = slot.get(key)
                slot[key] = w if s is None else s + w
    return GradedForm(sc, {mono: CoeffFn(sc.shape, t) for mono, t in acc.items()})


def dS_primitive(a: GradedForm) -> GradedForm:
    """``b`` with ``d_S b = a``; raises NotExact carrying the harmonic part."""
    _require_closed(a)
    h = a.fibre_average()
    if h:
        raise NotExact(h, "d_S-closed form has a nonzero harmonic part")
    b = fibre_homotopy(a)
    if d_S(b) != a:
        raise InvariantViolation("fibre homotopy failed to invert d_S")
    return b


def gauss_manin(c: CohClass) -> CohClass:
    """Apply ``nabla`` to the representative and project to harmonic forms."""
    img = nabla(c.rep)
    try:
        return dS_class(img)
    except NotClosed as exc:
        raise InvariantViolation(f"nabla of a d_S-closed form is not d_S-closed: {exc}")


def ddbar_class(c: CohClass) -> CohClass:
    """``[del delbar rep]``, cross-checked against ``-[delbar del rep]``."""
    a = dS_class(partial(partial_bar(c.rep)))
    b = dS_class(partial_bar(partial(c.rep)))
    if a.rep != -b.rep:
        raise InvariantViolation("del delbar + delbar del is not zero in d_S-cohomology")
    return a


def is_pluriharmonic(c: CohClass) -> bool:
    return ddbar_class(c).is_zero()


def is_flat(c: CohClass) -> bool:
    flat = gauss_manin(c).is_zero()
    if flat and not is_pluriharmonic(c):
        raise InvariantViolation("flat class that is not pluriharmonic")
    return flat


# -- vertical splitting ----------------------------------------------------------


def split_vertical(a: GradedForm) -> dict:
    """Write ``a = sum_J a_J ^ eta^J`` with ``a_J`` free of ``eta``."""
    sc = a.scenario
    eta0 = 2 * sc.complex_dim
    out = {}
    for mono, c in a.terms.items():
        cut = next((p for p, g in enumerate(mono) if g >= eta0), len(mono))
        out.setdefault(mono[cut:], {})[mono[:cut]] = c
    return {J: GradedForm(sc, t) for J, t in out.items()}


def join_vertical(sc: Scenario, parts: dict) -> GradedForm:
    out = sc.zero_form()
    for J, form in parts.items():
        out = out + form.wedge(sc.monomial(J))
    return out


def is_basic(a: GradedForm) -> bool:
    eta0 = 2 * a.scenario.complex_dim
    return all(not any(g >= eta0 for g in m) for m in a.terms) and not a.has_fibre_dependence()


# -- base homotopies -------------------------------------------------------------


def _check_basic_closed(r: GradedForm):
    if not is_basic(r):
        raise PreconditionError("expected a basic form (no eta, no fibre dependence)")
    if exterior_d(r):
        raise NotClosed("basic form is not closed")


def base_primitive(r: GradedForm) -> GradedForm:
    """A real primitive of a closed basic form of positive degree.

    Flat base: radial homotopy ``iota_E / weight`` on homogeneous pieces.
    Torus base: Fourier homotopy ``iota_V / (2 pi i |m|^2)`` with ``V = m``;
    a nonzero constant zero mode is not exact and raises NotExact.
    """
    sc = r.scenario
    _check_basic_closed(r)
    k = sc.complex_dim
    if sc.base_kind == "flat":
        zs = [sc.z(a) for a in range(k)]
        out = sc.zero_form()
        for mono, c in r.terms.items():
            for deg, piece in c.split_flat_degree().items():
                w = deg + len(mono)
                piece = piece.scale(QI(Fraction(1, w)))
                for pos, g in enumerate(mono):
                    img = zs[g] if g < k else zs[g - k].conjugate()
                    rest = mono[:pos] + mono[pos + 1:]
                    t = GradedForm(sc, {rest: piece * img})
                    out = out + (t if pos % 2 == 0 else -t)
        return out
    zero = GradedForm(sc, {m: c.base_average() for m, c in r.terms.items()})
    if zero:
        raise NotExact(zero, "closed basic form has a nonzero constant part on the torus base")
    acc = {}
    for mono, c in r.terms.items():
        for (n, m, e, tk), v in c.terms.items():
            norm = sum(x * x for x in m)
            for pos, g in enumerate(mono):
                a = g if g < k else g - k
                iv = QI(m[2 * a], m[2 * a + 1] if g < k else -m[2 * a + 1])
                if not iv:
                    continue
                w = v * iv * QI(0, Fraction(-1, norm))
                if pos % 2:
                    w = -w
                rest = mono[:pos] + mono[pos + 1:]
                slot = acc.setdefault(rest, {})
                key = (n, m, e, tk - 1)
                s = slot.get(key)
                slot[key] = w if s is None else s + w
    return GradedForm(sc, {mono: CoeffFn(sc.shape, t) for mono, t in acc.items()})


def _holomorphic_homotopy(P: GradedForm) -> GradedForm:
    """``gamma`` with ``del gamma = P`` for a del-closed pure (q,0) basic form, q >= 1."""
    sc = P.scenario
    k = sc.complex_dim
    if sc.base_kind == "flat":
        # reinterpret coordinate slots (2a, 2a+1) as (z^a, zbar^a)
        Z = [CoeffFn.var(sc.shape, sc.base_var(b)) for b in range(2 * k)]
        to_zw, back = [], []
        for a in range(k):
            zz, ww = Z[2 * a], Z[2 * a + 1]
            to_zw.append((zz + ww).scale(QI(Fraction(1, 2))))
            to_zw.append((zz - ww).scale(QI(0, Fraction(-1, 2))))
            back.append(sc.z(a))
            back.append(sc.z(a).conjugate())
        out = sc.zero_form()
        for mono, c in P.terms.items():
            cz = c.substitute_flat(to_zw)
            by_hol = {}
            for key, v in cz.terms.items():
                hol = sum(key[2][0::2])
                by_hol.setdefault(hol, {})[key] = v
            for hol, t in by_hol.items():
                piece = CoeffFn(sc.shape, t).scale(QI(Fraction(1, hol + len(mono))))
                for pos, g in enumerate(mono):
                    rest = mono[:pos] + mono[pos + 1:]
                    f = (piece * Z[2 * g]).substitute_flat(back)
                    t2 = GradedForm(sc, {rest: f})
                    out = out + (t2 if pos % 2 == 0 else -t2)
        return out
    acc = {}
    for mono, c in P.terms.items():
        for (n, m, e, tk), v in c.terms.items():
            if not any(m):
                continue
            # xi_a = (m_{2a} - i m_{2a+1}) / 2 and W = conj(xi)
            norm = Fraction(sum(x * x for x in m), 4)
            for pos, g in enumerate(mono):
                wa = QI(Fraction(m[2 * g], 2), Fraction(m[2 * g + 1], 2))
                if not wa:
                    continue
                w = v * wa * QI(0, -1 / norm)
                if pos % 2:
                    w = -w
                rest = mono[:pos] + mono[pos + 1:]
                slot = acc.setdefault(rest, {})
                key = (n, m, e, tk - 1)
                s = slot.get(key)
                slot[key] = w if s is None else s + w
    return GradedForm(sc, {mono: CoeffFn(sc.shape, t) for mono, t in acc.items()})


def truncated_primitive(r: GradedForm) -> GradedForm:
    """Real ``b`` with ``db = r`` and every term of ``b`` of degree (i,j), i, j >= 1.

    ``r`` must be basic, real, closed, truncated and of degree >= 3.
    """
    sc = r.scenario
    if not r:
        return sc.zero_form()
    if r.truncate() != r:
        raise PreconditionError("form is not in the truncated complex")
    if min(r.total_degrees()) < 3:
        raise PreconditionError("truncated primitives are only constructed in degree >= 3")
    if not r.is_real():
        raise PreconditionError("expected a real form")
    b = base_primitive(r)
    b = b.real_part()
    for q in sorted(b.total_degrees()):
        P = b.project_degree((q, 0, 0))
        if not P:
            continue
        if sc.base_kind == "torus":
            const = GradedForm(sc, {m: c.base_average() for m, c in P.terms.items()})
            if const:
                b = b - const - const.conjugate()
                P = P - const
        if not P:
            continue
        if partial(P):
            raise InvariantViolation("pure holomorphic part of the primitive is not del-closed")
        gamma = _holomorphic_homotopy(P)
        if partial(gamma) != P:
            raise InvariantViolation("holomorphic homotopy failed")
        dg = exterior_d(gamma)
        b = b - dg - dg.conjugate()
    if b.truncate() != b or exterior_d(b) != r or not b.is_real():
        raise InvariantViolation("truncated primitive failed its own checks")
    return b
