"""Obstruction forms, the three-step solver and reconstruction of H.

Writing ``alpha`` for the (1,1;1) part and ``beta`` for the (2,1;0)+(1,2;0)
part of a candidate, the equation ``-2 Im(d d_K omega) = d(alpha + beta)``
splits by degree into

    (A)  Phi^A = d_S alpha
    (B)  Phi^B = nabla alpha + d_S beta
    (C)  Phi^C = Theta alpha + nabla beta

and the solver works through them in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import sympy

from .calculus import (exterior_d, d_K, d_S, nabla, partial, partial_bar, split_d, theta,
                       theta_minus, theta_plus)
from .coeff import CoeffFn, QI, I
from .cohomology import (CohClass, dS_class, dS_primitive, is_basic, split_vertical,
                         truncated_primitive)
from .errors import (GcfolError, InvariantViolation, NotExact, PreconditionError,
                     ScenarioSemanticError)
from .forms import (GradedForm, Scenario, certify_nowhere_zero, fibre_pfaffian, pullback_affine)
from .spinors import Point, canonical_spinor, check_H_constraints, dH_closed, evaluate_form

GENERALIZED_COMPLEX = "GeneralizedComplex"
OBSTRUCTED = "Obstructed"
INCOMPLETE = "SolverIncomplete"

POINTWISE_NOTE = (
    "pointwise mode: the curvature tensor is supplied by hand, so only the value of "
    "Phi^C at sample points is computed; the global class and its integral over a "
    "compact base are not reproducible in this exact framework"
)


@dataclass
class StageFailure:
    verdict: str
    stage: str
    residual: Optional[GradedForm] = None
    detail: str = ""


@dataclass
class ObstructionReport:
    scenario: Scenario
    verdict: str
    stage: Optional[str] = None
    phi: dict = field(default_factory=dict)
    classes: dict = field(default_factory=lambda: {"A": None, "B": None, "C": None})
    alpha: Optional[GradedForm] = None
    beta: Optional[GradedForm] = None
    H: Optional[GradedForm] = None
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    pointwise: list = field(default_factory=list)
    degree_cap: Optional[int] = None

    @property
    def label(self) -> str:
        if self.verdict == GENERALIZED_COMPLEX:
            return self.verdict
        return f"{self.verdict}({self.stage})"

    @property
    def positive(self) -> bool:
        return self.verdict == GENERALIZED_COMPLEX

    @property
    def exit_code(self) -> int:
        return {GENERALIZED_COMPLEX: 0, OBSTRUCTED: 1, INCOMPLETE: 2}[self.verdict]

    def class_text(self, stage: str) -> str:
        c = self.classes.get(stage)
        if c is None:
            return "pending"
        return str(c)


# -- input validation ---------------------------------------------------------------


def validate_scenario(sc: Scenario):
    """Raise ScenarioSemanticError naming the first violated invariant."""
    if sc.fibre_rank % 2:
        raise ScenarioSemanticError("fibre rank even", f"fibre rank {sc.fibre_rank} is odd")
    for key, a in sc.connection.items():
        if not a.is_real():
            raise ScenarioSemanticError("connection real", f"A{key} is not real")
        if sc.base_kind == "torus" and a.poly_degree():
            raise ScenarioSemanticError("coefficients periodic", f"A{key} is polynomial on a torus base")
    w = sc.omega()
    if not w.is_real():
        raise ScenarioSemanticError("omega real", str(w))
    if d_S(w):
        raise ScenarioSemanticError("omega d_S-closed", str(d_S(w)))
    pf = fibre_pfaffian(sc)
    if not certify_nowhere_zero(pf, sc.region):
        raise ScenarioSemanticError("fibrewise nondegenerate", f"top fibre power coefficient {pf}")
    if sc.curvature_override is not None:
        for (j, gens), c in sc.curvature_override.items():
            if not 0 <= j < sc.fibre_rank:
                raise ScenarioSemanticError("curvature tensor indices", f"fibre index {j}")
        F = [sc.zero_form() for _ in range(sc.fibre_rank)]
        for (j, gens), c in sc.curvature_override.items():
            F[j] = F[j] + sc.monomial(gens, c)
        for f in F:
            if f.degrees() - {(2, 0, 0), (1, 1, 0), (0, 2, 0)} or not f.is_real():
                raise ScenarioSemanticError("curvature tensor real horizontal 2-form", str(f))


# -- obstruction forms ----------------------------------------------------------------


def neg_two_im(y: GradedForm) -> GradedForm:
    """``-2 Im(y) = i (y - conj y)``."""
    return (y - y.conjugate()).scale(I)


def two_im(y: GradedForm) -> GradedForm:
    return (y - y.conjugate()).scale(QI(0, -1))


def phi_forms(omega: GradedForm, cross_check: bool = True):
    """``(Phi^A, Phi^B, Phi^C)`` for a real d_S-closed ``omega``."""
    sc = omega.scenario
    if d_S(omega):
        raise PreconditionError("omega is not d_S-closed")
    if not omega.is_real():
        raise PreconditionError("omega is not real")
    tp, tm = theta_plus(omega), theta_minus(omega)
    db, dd = partial_bar(omega), partial(omega)
    phiA = (partial(db) - partial_bar(dd)).scale(I)
    phiB = (nabla(tm - tp) + theta(db - dd)).scale(I)
    phiC = theta(tm - tp).scale(I)
    for name, form, n, s in (("A", phiA, 2, 2), ("B", phiB, 3, 1), ("C", phiC, 4, 0)):
        if form.project_nk(n, s) != form:
            raise InvariantViolation(f"Phi^{name} has the wrong degree")
        if not form.is_real():
            raise InvariantViolation(f"Phi^{name} is not real")
    if cross_check and sc.curvature_override is None:
        direct = neg_two_im(exterior_d(d_K(omega)))
        if phiA + phiB + phiC != direct:
            raise InvariantViolation("obstruction components do not sum to -2 Im(d d_K omega)")
    return phiA, phiB, phiC


# -- steps -----------------------------------------------------------------------------


def step_A(phiA: GradedForm):
    """``alpha`` with ``d_S alpha = Phi^A``, or a failure carrying ``[Phi^A]``."""
    try:
        alpha = dS_primitive(phiA)
    except NotExact as exc:
        return StageFailure(OBSTRUCTED, "A", exc.residual, "harmonic part of Phi^A is nonzero")
    if alpha and (alpha.degrees() - {(1, 1, 1)} or not alpha.is_real()):
        raise InvariantViolation("step A produced alpha outside the real (1,1;1) forms")
    return alpha


def step_B(phiB: GradedForm, alpha: GradedForm):
    """``(alpha + alpha', beta)`` with ``Phi^B = nabla(alpha + alpha') + d_S beta``."""
    sc = phiB.scenario
    R = phiB - nabla(alpha)
    if d_S(R):
        raise InvariantViolation("Phi^B - nabla alpha is not d_S-closed")
    harmonic = R.fibre_average()
    alpha_p = sc.zero_form()
    residual = sc.zero_form()
    for J, Rj in split_vertical(harmonic).items():
        if len(J) != 1:
            raise InvariantViolation("harmonic part of Phi^B - nabla alpha is not of vertical degree 1")
        if exterior_d(Rj):
            raise InvariantViolation("harmonic part is not closed along the base")
        try:
            aj = truncated_primitive(Rj)
        except NotExact as exc:
            residual = residual + exc.residual.wedge(sc.monomial(J))
            continue
        alpha_p = alpha_p + aj.wedge(sc.monomial(J))
    if residual:
        return StageFailure(OBSTRUCTED, "B", residual, "harmonic base class is not exact")
    beta = dS_primitive(R - nabla(alpha_p))
    alpha_t = alpha + alpha_p
    if phiB != nabla(alpha_t) + d_S(beta):
        raise InvariantViolation("step B witnesses fail condition (B)")
    return alpha_t, beta


def _laurent_from_sympy(expr):
    """Laurent polynomial in tau as ``{power: QI}``, or None if not of that shape."""
    tau = sympy.Symbol("tau")
    num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))
    den_poly = sympy.Poly(den, tau)
    if len(den_poly.terms()) != 1:
        return None
    (dpow,), dcoef = den_poly.terms()[0]
    out = {}
    for (k,), c in sympy.Poly(sympy.expand(num), tau).terms():
        c = sympy.nsimplify(c / dcoef)
        re, im = sympy.re(c), sympy.im(c)
        if not (re.is_Rational and im.is_Rational):
            return None
        out[k - dpow] = QI(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))
    return out


def _laurent_to_sympy(value: dict):
    tau = sympy.Symbol("tau")
    return sum((sympy.Rational(c.re.numerator, c.re.denominator)
                + sympy.I * sympy.Rational(c.im.numerator, c.im.denominator)) * tau ** k
               for k, c in value.items())


def _constant_part(a: GradedForm) -> dict:
    """Constant-coefficient part as ``{mono: {tau power: QI}}``."""
    out = {}
    for mono, c in a.terms.items():
        for (n, m, e, k), v in c.terms.items():
            if not any(n) and not any(m) and not any(e):
                out.setdefault(mono, {})[k] = v
    return out


def _search_alpha_prime(r: GradedForm, h: GradedForm):
    """Constant ``alpha' = sum_j c_j ^ eta^j`` with ``[Theta alpha' + nabla beta'] = [h]``."""
    sc = r.scenario
    k, p = sc.complex_dim, sc.fibre_rank
    basis = []
    for j in range(p):
        for a in range(k):
            for b in range(k):
                basis.append(sc.monomial((sc.gen_dz(a), sc.gen_dzb(b), sc.gen_eta(j))))
    images = []
    for form in basis:
        bp = -dS_primitive(nabla(form))
        images.append((form, bp, theta(form) + nabla(bp)))
    rows = sorted({m for _, _, img in images for m in _constant_part(img.fibre_average())}
                  | set(_constant_part(h)))
    if not rows:
        return None
    target = _constant_part(h)
    M = sympy.Matrix([[_laurent_to_sympy(_constant_part(img.fibre_average()).get(m, {}))
                       for _, _, img in images] for m in rows])
    rhs = sympy.Matrix([_laurent_to_sympy(target.get(m, {})) for m in rows])
    try:
        sol, params = M.gauss_jordan_solve(rhs)
    except ValueError:
        return None
    sol = sol.subs({s: 0 for s in params})
    alpha_p = sc.zero_form()
    beta_p = sc.zero_form()
    for (form, bp, _), v in zip(images, sol):
        value = _laurent_from_sympy(v)
        if value is None:
            return "incomplete"
        for kk, c in value.items():
            f = CoeffFn.const(sc.shape, c, kk)
            alpha_p = alpha_p + form.scale(f)
            beta_p = beta_p + bp.scale(f)
    return alpha_p.real_part(), beta_p.real_part()


def step_C(phiC: GradedForm, alpha: GradedForm, beta: GradedForm, degree_cap=None):
    """Final ``(alpha, beta)`` satisfying (A), (B) and (C), or a failure."""
    sc = phiC.scenario
    r = phiC - theta(alpha) - nabla(beta)
    if r.project_nk(4, 0) != r or d_S(r) or not is_basic(r):
        raise InvariantViolation("step C residual is not a basic d_S-closed (4;0) form")
    if exterior_d(r):
        raise InvariantViolation("step C residual is not closed")
    try:
        b2 = truncated_primitive(r)
        return alpha, beta + b2
    except NotExact as exc:
        h = exc.residual
    found = _search_alpha_prime(r, h)
    if found is None:
        # the search covers constant alpha' only, so failure is not a proof of obstruction
        return StageFailure(INCOMPLETE, "C", h, "no constant alpha' absorbs the base class")
    if found == "incomplete":
        return StageFailure(INCOMPLETE, "C", h, "alpha' solution is not a Laurent polynomial in 2*pi")
    alpha_p, beta_p = found
    r2 = r - theta(alpha_p) - nabla(beta_p)
    if not is_basic(r2) or exterior_d(r2):
        return StageFailure(INCOMPLETE, "C", h, "corrected residual is not basic")
    try:
        b2 = truncated_primitive(r2)
    except NotExact as exc:
        return StageFailure(INCOMPLETE, "C", exc.residual, "corrected residual still not exact")
    return alpha + alpha_p, beta + beta_p + b2


# -- reconstruction and checks --------------------------------------------------------


def reconstruct_H(omega: GradedForm, alpha: GradedForm, beta: GradedForm) -> GradedForm:
    return two_im(d_K(omega)) + alpha + beta


def conditions(phi, alpha, beta) -> dict:
    phiA, phiB, phiC = phi
    return {
        "condition A": phiA == d_S(alpha),
        "condition B": phiB == nabla(alpha) + d_S(beta),
        "condition C": phiC == theta(alpha) + nabla(beta),
    }


def check_equivariance(scenario: Scenario, forms=()) -> bool:
    """Every lattice generator fixes omega, the connection and ``forms``."""
    if not scenario.lattice:
        return True
    from .forms import connection_is_invariant
    w = scenario.omega()
    for g in scenario.lattice:
        if not connection_is_invariant(g, scenario):
            return False
        if pullback_affine(g, w) != w:
            return False
        for f in forms:
            if f is not None and pullback_affine(g, f) != f:
                return False
    return True


def calabi_yau_check(scenario: Scenario, H: GradedForm) -> bool:
    """``e^{i omega} ^ dz^1 ^ ... ^ dz^k`` is d_H-closed."""
    return dH_closed(canonical_spinor(scenario), H)


def pointwise_phiC(scenario: Scenario, points=None):
    """Values of ``Phi^C`` at sample points as ``(point, pointwise form)``."""
    _, _, phiC = phi_forms(scenario.omega(), cross_check=False)
    pts = points if points is not None else scenario.sample_points
    return phiC, [(pt, evaluate_form(phiC, pt)) for pt in pts]


def decide(scenario: Scenario, degree_cap=None) -> ObstructionReport:
    """Run the solver and re-verify any positive verdict."""
    sc = scenario
    validate_scenario(sc)
    cap = degree_cap if degree_cap is not None else sc.settings.degree_cap
    if cap is None:
        cap = max([c.poly_degree() for c in sc.connection.values()]
                  + [c.poly_degree() for c in sc.omega_terms.values()] + [0]) + 2
    report = ObstructionReport(sc, INCOMPLETE, degree_cap=cap)
    omega = sc.omega()
    if sc.lattice and not check_equivariance(sc):
        raise ScenarioSemanticError("lattice preserves scenario data", "a generator moves omega or the connection")

    if sc.curvature_override is not None:
        phiC, values = pointwise_phiC(sc)
        report.phi = {"C": phiC}
        report.stage = "C"
        report.pointwise = values
        report.checks["Phi^C nonzero at every sample point"] = bool(values) and all(
            bool(v) and v.degrees() == {4} for _, v in values)
        report.notes.append(POINTWISE_NOTE)
        return report

    phi = phi_forms(omega)
    report.phi = dict(zip("ABC", phi))

    def fail(f: StageFailure):
        report.verdict = f.verdict
        report.stage = f.stage
        report.classes[f.stage] = CohClass(f.residual) if f.residual is not None else None
        if f.detail:
            report.notes.append(f.detail)
        return report

    alpha = step_A(phi[0])
    if isinstance(alpha, StageFailure):
        return fail(alpha)
    report.classes["A"] = CohClass(sc.zero_form())
    out = step_B(phi[1], alpha)
    if isinstance(out, StageFailure):
        return fail(out)
    report.classes["B"] = CohClass(sc.zero_form())
    out = step_C(phi[2], *out, degree_cap=cap)
    if isinstance(out, StageFailure):
        return fail(out)
    report.classes["C"] = CohClass(sc.zero_form())
    alpha, beta = out
    H = reconstruct_H(omega, alpha, beta)

    checks = report.checks
    checks.update(conditions(phi, alpha, beta))
    checks["dH = 0"] = not exterior_d(H)
    checks["H constraints"] = check_H_constraints(omega, H)
    checks["truncated exactness"] = neg_two_im(exterior_d(d_K(omega))) == exterior_d(alpha + beta)
    checks["Calabi-Yau generator d_H-closed"] = calabi_yau_check(sc, H)
    failed = [k for k, v in checks.items() if not v]
    if failed:
        raise InvariantViolation(f"positive verdict failed re-verification: {failed}")
    if sc.lattice:
        checks["equivariance"] = check_equivariance(sc, (alpha, beta, H))
        if not checks["equivariance"]:
            report.stage = "C"
            report.alpha, report.beta, report.H = alpha, beta, H
            report.notes.append("witnesses solve the equations on the cover but are not lattice-invariant")
            return report
    report.verdict = GENERALIZED_COMPLEX
    report.alpha, report.beta, report.H = alpha, beta, H
    return report
