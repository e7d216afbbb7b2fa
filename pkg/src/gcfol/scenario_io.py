"""Reading and writing scenario files.

A scenario file is TOML with the sections ``[bundle]``, ``[connection]``,
``[omega]``, ``[lattice]``, ``[overrides]`` and ``[solver]``.  Coefficients
are written in a small expression language: integers, ``i``, ``pi``, base
coordinates, ``cos``/``sin``/``exp`` of integer multiples of ``2*pi*angle``
(``exp`` takes ``2*pi*i*angle``), sums, products, division by constants and
integer powers.
"""

from __future__ import annotations

import ast
import re
from fractions import Fraction
from importlib import resources
from pathlib import Path

import tomli

from .coeff import CoeffFn, QI, ONE
from .errors import DomainError, GcfolError, ScenarioSemanticError, ScenarioSyntaxError
from .forms import LatticeGenerator, Scenario, SolverSettings, sort_monomial
from .spinors import Point

SECTIONS = ("bundle", "connection", "omega", "lattice", "overrides", "solver")


class _Located(Exception):
    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


# -- expression evaluation ------------------------------------------------------------


def _laurent_add(a, b):
    out = dict(a)
    for k, v in b.items():
        s = out.get(k, QI(0)) + v
        if s:
            out[k] = s
        else:
            out.pop(k, None)
    return out


def _laurent_mul(a, b):
    out = {}
    for k1, v1 in a.items():
        for k2, v2 in b.items():
            out = _laurent_add(out, {k1 + k2: v1 * v2})
    return out


class _Affine:
    """``const + sum_v coeff_v * v`` over angle variables, scalars Laurent in tau."""

    def __init__(self, const=None, coeffs=None):
        self.const = const or {}
        self.coeffs = coeffs or {}

    def is_scalar(self):
        return not self.coeffs

    def __add__(self, other):
        coeffs = dict(self.coeffs)
        for v, c in other.coeffs.items():
            coeffs[v] = _laurent_add(coeffs.get(v, {}), c)
        return _Affine(_laurent_add(self.const, other.const), coeffs)

    def neg(self):
        m = {0: QI(-1)}
        return _Affine(_laurent_mul(self.const, m), {v: _laurent_mul(c, m) for v, c in self.coeffs.items()})

    def times_scalar(self, s):
        return _Affine(_laurent_mul(self.const, s), {v: _laurent_mul(c, s) for v, c in self.coeffs.items()})


class ExpressionParser:
    """Evaluate an expression to a CoeffFn for a given scenario shape."""

    def __init__(self, shape, base_kind, aliases=None):
        self.shape = shape
        self.base_kind = base_kind
        self.aliases = aliases or {}

    def parse(self, text: str) -> CoeffFn:
        """Parse one expression; errors carry the column within ``text``."""
        try:
            return self._parse(text)
        except _Located as exc:
            col = getattr(exc.node, "col_offset", None)
            raise ScenarioSyntaxError(str(exc), None, None if col is None else col + 1) from None

    def _parse(self, text: str) -> CoeffFn:
        try:
            tree = ast.parse(text.strip(), mode="eval")
        except SyntaxError as exc:
            raise _Located(f"cannot parse expression {text!r}: {exc.msg}") from None
        return self._eval(tree.body)

    # -- helpers --

    def _name(self, name):
        return self.aliases.get(name, name)

    def _is_angle(self, name):
        return len(name) > 1 and name[0] in "tu" and name[1:].isdigit()

    def _scalar(self, node) -> dict:
        aff = self._affine(node)
        if not aff.is_scalar():
            raise _Located("angles may only appear inside cos, sin or exp", node)
        return aff.const

    def _affine(self, node) -> _Affine:
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, int):
                raise _Located(f"unsupported literal {node.value!r}; use integers and fractions", node)
            return _Affine({0: QI(node.value)} if node.value else {})
        if isinstance(node, ast.Name):
            name = self._name(node.id)
            if name == "i":
                return _Affine({0: QI(0, 1)})
            if name == "pi":
                return _Affine({1: QI(Fraction(1, 2))})
            if self._is_angle(name):
                try:
                    CoeffFn.zero(self.shape).differentiate(name)
                except DomainError as exc:
                    raise _Located(str(exc), node) from None
                return _Affine({}, {name: {0: ONE}})
            raise _Located(f"name {node.id!r} is not allowed inside an angle argument", node)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self._affine(node.operand)
            return v.neg() if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Add):
                return self._affine(node.left) + self._affine(node.right)
            if isinstance(node.op, ast.Sub):
                return self._affine(node.left) + self._affine(node.right).neg()
            if isinstance(node.op, ast.Mult):
                a, b = self._affine(node.left), self._affine(node.right)
                if a.is_scalar():
                    return b.times_scalar(a.const)
                if b.is_scalar():
                    return a.times_scalar(b.const)
                raise _Located("angle arguments must be linear", node)
            if isinstance(node.op, ast.Div):
                a, b = self._affine(node.left), self._affine(node.right)
                if not b.is_scalar():
                    raise _Located("division by an angle", node)
                return a.times_scalar(self._invert(b.const, node))
            if isinstance(node.op, ast.Pow):
                a = self._affine(node.left)
                n = self._int_exponent(node.right)
                if not a.is_scalar():
                    raise _Located("powers of angles are not allowed", node)
                return _Affine(self._laurent_pow(a.const, n, node))
        raise _Located(f"unsupported syntax {type(node).__name__}", node)

    def _int_exponent(self, node) -> int:
        neg = False
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            neg, node = True, node.operand
        if isinstance(node, ast.Constant) and isinstance(node.value, int) and not isinstance(node.value, bool):
            return -node.value if neg else node.value
        raise _Located("exponents must be integer literals", node)

    def _invert(self, s: dict, node):
        if len(s) != 1:
            raise _Located("division is only allowed by a single-term constant", node)
        (k, c), = s.items()
        return {-k: QI(1) / c}

    def _laurent_pow(self, s, n, node):
        if n < 0:
            s, n = self._invert(s, node), -n
        out = {0: ONE}
        for _ in range(n):
            out = _laurent_mul(out, s)
        return out

    def _const(self, s: dict) -> CoeffFn:
        out = CoeffFn.zero(self.shape)
        for k, c in s.items():
            out = out + CoeffFn.const(self.shape, c, k)
        return out

    def _trig(self, node) -> CoeffFn:
        fname = node.func.id
        if len(node.args) != 1 or node.keywords:
            raise _Located(f"{fname} takes one argument", node)
        aff = self._affine(node.args[0])
        if aff.const:
            raise _Located(f"{fname} argument must not have a constant phase", node)
        unit = QI(0, 1) if fname == "exp" else QI(1)
        p, q, _ = self.shape
        n, m = [0] * p, [0] * q
        for var, c in aff.coeffs.items():
            if not c:
                continue
            if set(c) != {1}:
                raise _Located(f"{fname} argument must be an integer multiple of 2*pi{'*i' if fname == 'exp' else ''} times an angle", node)
            v = c[1] / unit
            if v.im or v.re.denominator != 1:
                raise _Located(f"{fname} argument must be an integer multiple of 2*pi{'*i' if fname == 'exp' else ''} times an angle", node)
            idx = int(var[1:]) - 1
            (n if var[0] == "t" else m)[idx] = int(v.re)
        n, m = tuple(n), tuple(m)
        if fname == "exp":
            return CoeffFn.mode(self.shape, n, m)
        return (CoeffFn.cos if fname == "cos" else CoeffFn.sin)(self.shape, n, m)

    def _eval(self, node) -> CoeffFn:
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("cos", "sin", "exp"):
            return self._trig(node)
        if isinstance(node, ast.Call):
            raise _Located("only cos, sin and exp may be called", node)
        if isinstance(node, ast.Name):
            name = self._name(node.id)
            if name in ("i", "pi"):
                return self._const(self._scalar(node))
            if self._is_angle(name):
                raise _Located(f"angle {node.id} may only appear inside cos, sin or exp", node)
            try:
                return CoeffFn.var(self.shape, name)
            except DomainError as exc:
                raise _Located(str(exc), node) from None
        if isinstance(node, ast.Constant):
            return self._const(self._scalar(node))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self._eval(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Add):
                return self._eval(node.left) + self._eval(node.right)
            if isinstance(node.op, ast.Sub):
                return self._eval(node.left) - self._eval(node.right)
            if isinstance(node.op, ast.Mult):
                return self._eval(node.left) * self._eval(node.right)
            if isinstance(node.op, ast.Div):
                den = self._eval(node.right)
                if len(den.terms) != 1 or not den.is_constant():
                    raise _Located("division is only allowed by a single-term constant", node)
                (key, c), = den.terms.items()
                return self._eval(node.left) * CoeffFn.const(self.shape, QI(1) / c, -key[3])
            if isinstance(node.op, ast.Pow):
                n = self._int_exponent(node.right)
                base = self._eval(node.left)
                if n < 0:
                    if len(base.terms) != 1 or not base.is_constant():
                        raise _Located("negative powers need a single-term constant base", node)
                    (key, c), = base.terms.items()
                    base, n = CoeffFn.const(self.shape, QI(1) / c, -key[3]), -n
                return base ** n
        raise _Located(f"unsupported syntax {type(node).__name__}", node)


# -- serialization of coefficients -----------------------------------------------------


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(c: QI) -> str:
    if not c.im:
        return f"({_frac(c.re)})"
    if not c.re:
        return f"({_frac(c.im)})*i"
    return f"(({_frac(c.re)})+({_frac(c.im)})*i)"


def format_coeff(f: CoeffFn) -> str:
    if not f.terms:
        return "0"
    p, q, r = f.shape
    parts = []
    for (n, m, e, k), c in f.sorted_terms():
        factors = [format_scalar(c)]
        if k:
            factors.append(f"(2*pi)**{k}" if k > 0 else f"(2*pi)**({k})")
        for l, a in enumerate(e):
            if a:
                factors.append(f"x{l + 1}" + (f"**{a}" if a > 1 else ""))
        phase = [f"{v}*t{j + 1}" for j, v in enumerate(n) if v] + [f"{v}*u{j + 1}" for j, v in enumerate(m) if v]
        if phase:
            factors.append("exp(2*pi*i*(" + " + ".join(phase) + "))")
        parts.append("*".join(factors))
    return " + ".join(parts)


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_scenario(sc: Scenario) -> str:
    lines = ["[bundle]", f"name = {_q(sc.name)}", f"fibre_rank = {sc.fibre_rank}",
             f"base = {_q(sc.base_kind)}", f"base_dim = {2 * sc.complex_dim}", "", "[connection]"]
    for (i, b) in sorted(sc.connection):
        f = sc.connection[(i, b)]
        if f:
            lines.append(f"A{i + 1}_{b + 1} = {_q(format_coeff(f))}")
    lines += ["", "[omega]", "terms = ["]
    for (i, j) in sorted(sc.omega_terms):
        f = sc.omega_terms[(i, j)]
        if f:
            lines.append(f"  {{ pair = [{i + 1}, {j + 1}], coeff = {_q(format_coeff(f))} }},")
    lines.append("]")
    if sc.lattice:
        lines += ["", "[lattice]", "generators = ["]
        for g in sc.lattice:
            item = [f"translation = [{', '.join(_q(_frac(Fraction(c))) for c in g.translation)}]"]
            if g.matrix is not None:
                rows = ", ".join("[" + ", ".join(str(int(v)) for v in row) + "]" for row in g.matrix)
                item.append(f"matrix = [{rows}]")
            if g.shift is not None:
                item.append(f"shift = [{', '.join(_q(_frac(Fraction(c))) for c in g.shift)}]")
            lines.append("  { " + ", ".join(item) + " },")
        lines.append("]")
    if sc.curvature_override is not None or sc.sample_points or sc.region:
        lines += ["", "[overrides]"]
        if sc.curvature_override is not None:
            lines.append("curvature = [")
            for (j, gens), c in sorted(sc.curvature_override.items()):
                names = ", ".join(_q(sc.gen_name(g)) for g in gens)
                lines.append(f"  {{ fibre = {j + 1}, pair = [{names}], coeff = {_q(format_scalar(c))} }},")
            lines.append("]")
        if sc.sample_points:
            lines.append("sample_points = [")
            for pt in sc.sample_points:
                fib = ", ".join(_q(_frac(Fraction(v))) for v in pt.fibre)
                base = ", ".join(_q(_frac(Fraction(v))) for v in pt.base)
                lines.append(f"  {{ fibre = [{fib}], base = [{base}] }},")
            lines.append("]")
        if sc.region:
            lines.append("region = [")
            for b, lower in sc.region:
                lines.append(f"  {{ coordinate = {_q(sc.base_var(b))}, lower = {_q(_frac(Fraction(lower)))} }},")
            lines.append("]")
    s = sc.settings
    lines += ["", "[solver]"]
    if s.degree_cap is not None:
        lines.append(f"degree_cap = {s.degree_cap}")
    lines += [f"trials = {s.trials}", f"seed = {s.seed}", ""]
    return "\n".join(lines)


# -- parsing ---------------------------------------------------------------------------


def _locate(text: str, needle: str):
    """1-based line and column of the first occurrence of a quoted value."""
    for quote in ('"' + needle + '"', "'" + needle + "'"):
        idx = text.find(quote)
        if idx >= 0:
            line = text.count("\n", 0, idx) + 1
            col = idx - (text.rfind("\n", 0, idx) + 1) + 2
            return line, col
    return None, None


def _key_line(text: str, key: str):
    m = re.search(rf"^\s*{re.escape(key)}\s*=", text, re.M)
    if not m:
        return None
    return text.count("\n", 0, m.start()) + 1


def _rational(value, what, text):
    try:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        pass
    line, col = _locate(text, str(value)) if isinstance(value, str) else (None, None)
    raise ScenarioSyntaxError(f"{what}: expected a rational number, got {value!r}", line, col)


def _expect(cond, message, text, key=None):
    if not cond:
        raise ScenarioSyntaxError(message, _key_line(text, key) if key else None)


def parse_scenario(text: str, validate: bool = True) -> Scenario:
    """Parse scenario text; raises ScenarioSyntaxError or ScenarioSemanticError."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        msg = getattr(exc, "msg", None) or re.sub(r"\s*\(at line.*\)$", "", str(exc))
        raise ScenarioSyntaxError(msg, line, col) from None
    for key in doc:
        _expect(key in SECTIONS, f"unknown section [{key}]", text)
    bundle = doc.get("bundle")
    _expect(isinstance(bundle, dict), "missing [bundle] section", text)
    p = bundle.get("fibre_rank")
    _expect(isinstance(p, int) and not isinstance(p, bool) and p >= 1,
            "bundle.fibre_rank must be a positive integer", text, "fibre_rank")
    kind = bundle.get("base", "flat")
    _expect(kind in ("flat", "torus"), "bundle.base must be 'flat' or 'torus'", text, "base")
    bdim = bundle.get("base_dim", 2)
    _expect(isinstance(bdim, int) and not isinstance(bdim, bool) and bdim >= 0 and bdim % 2 == 0,
            "bundle.base_dim must be an even nonnegative integer (real dimension)", text, "base_dim")
    name = str(bundle.get("name", "scenario"))
    sc = Scenario(p, kind, bdim // 2, name=name)
    aliases = {}
    if kind == "flat" and bdim == 2:
        aliases = {"x": "x1", "y": "x2"}
    parser = ExpressionParser(sc.shape, kind, aliases)

    def expr(value, what):
        if isinstance(value, int) and not isinstance(value, bool):
            value = str(value)
        if not isinstance(value, str):
            raise ScenarioSyntaxError(f"{what}: expected an expression string, got {value!r}")
        try:
            return parser._parse(value)
        except _Located as exc:
            line, col = _locate(text, value)
            if exc.node is not None and col is not None:
                col += getattr(exc.node, "col_offset", 0)
            raise ScenarioSyntaxError(f"{what}: {exc}", line, col) from None
        except GcfolError as exc:
            line, col = _locate(text, value)
            raise ScenarioSyntaxError(f"{what}: {exc}", line, col) from None

    conn = doc.get("connection", {})
    _expect(isinstance(conn, dict), "[connection] must be a table", text)
    for key, value in conn.items():
        m = re.fullmatch(r"A(\d+)_(\d+)", key)
        _expect(m is not None, f"connection key {key!r} must look like A<fibre>_<base>", text, key)
        i, b = int(m.group(1)) - 1, int(m.group(2)) - 1
        _expect(0 <= i < p and 0 <= b < bdim, f"connection index out of range in {key}", text, key)
        f = expr(value, f"connection {key}")
        if f:
            sc.connection[(i, b)] = f

    omega = doc.get("omega", {})
    _expect(isinstance(omega, dict), "[omega] must be a table", text)
    for item in omega.get("terms", []):
        _expect(isinstance(item, dict) and "pair" in item and "coeff" in item,
                "omega terms need 'pair' and 'coeff'", text, "terms")
        pair = item["pair"]
        _expect(isinstance(pair, list) and len(pair) == 2 and all(isinstance(v, int) for v in pair),
                "omega pair must be two fibre indices", text, "terms")
        i, j = pair[0] - 1, pair[1] - 1
        _expect(0 <= i < p and 0 <= j < p and i != j, f"omega pair {pair} out of range", text, "terms")
        f = expr(item["coeff"], f"omega pair {pair}")
        if i > j:
            i, j, f = j, i, -f
        total = sc.omega_terms.get((i, j), CoeffFn.zero(sc.shape)) + f
        if total:
            sc.omega_terms[(i, j)] = total
        else:
            sc.omega_terms.pop((i, j), None)

    gens = []
    for item in doc.get("lattice", {}).get("generators", []):
        _expect(isinstance(item, dict) and "translation" in item, "lattice generators need a translation", text, "generators")
        tr = tuple(_rational(v, "translation", text) for v in item["translation"])
        mat = item.get("matrix")
        if mat is not None:
            _expect(all(isinstance(r, list) and all(isinstance(v, int) for v in r) for r in mat),
                    "lattice matrix must be a list of integer rows", text, "generators")
            mat = tuple(tuple(r) for r in mat)
        shift = item.get("shift")
        if shift is not None:
            shift = tuple(_rational(v, "shift", text) for v in shift)
        gens.append(LatticeGenerator(tr, mat, shift))
    sc.lattice = tuple(gens)

    ov = doc.get("overrides", {})
    if "curvature" in ov:
        curv = {}
        for item in ov["curvature"]:
            _expect(isinstance(item, dict) and {"fibre", "pair", "coeff"} <= set(item),
                    "curvature entries need fibre, pair and coeff", text, "curvature")
            j = item["fibre"] - 1
            _expect(0 <= j < p, "curvature fibre index out of range", text, "curvature")
            try:
                gs = tuple(sc.gen_by_name(g) for g in item["pair"])
            except DomainError as exc:
                raise ScenarioSyntaxError(f"curvature: {exc}", _key_line(text, "curvature")) from None
            _expect(len(gs) == 2 and all(sc.gen_family(g) < 2 for g in gs),
                    "curvature pair must be two base generators", text, "curvature")
            sign, mono = sort_monomial(gs)
            _expect(sign != 0, "curvature pair repeats a generator", text, "curvature")
            c = expr(item["coeff"], "curvature coefficient")
            cv = c.constant_value()
            _expect(cv is not None, "curvature coefficients must be constants", text, "curvature")
            key = (j, mono)
            total = curv.get(key, QI(0)) + (cv if sign > 0 else -cv)
            if total:
                curv[key] = total
            else:
                curv.pop(key, None)
        sc.curvature_override = curv
    pts = []
    for item in ov.get("sample_points", []):
        fib = tuple(_rational(v, "sample point", text) for v in item.get("fibre", []))
        base = tuple(_rational(v, "sample point", text) for v in item.get("base", []))
        _expect(len(fib) == p and len(base) == bdim, "sample point has the wrong number of coordinates",
                text, "sample_points")
        for v in fib + (base if kind == "torus" else ()):
            _expect((v * 4).denominator == 1, "sample angles must be multiples of 1/4", text, "sample_points")
        pts.append(Point(fib, base))
    sc.sample_points = tuple(pts)
    region = []
    for item in ov.get("region", []):
        name = aliases.get(item.get("coordinate"), item.get("coordinate"))
        _expect(kind == "flat" and isinstance(name, str) and re.fullmatch(r"x\d+", name or "") is not None
                and 1 <= int(name[1:]) <= bdim, "region coordinate must be a flat base coordinate", text, "region")
        region.append((int(name[1:]) - 1, _rational(item.get("lower"), "region lower bound", text)))
    sc.region = tuple(region)

    solver = doc.get("solver", {})
    cap = solver.get("degree_cap")
    _expect(cap is None or (isinstance(cap, int) and cap >= 0), "degree_cap must be a nonnegative integer", text, "degree_cap")
    trials = solver.get("trials", 20)
    seed = solver.get("seed", 0)
    _expect(isinstance(trials, int) and trials >= 1, "trials must be a positive integer", text, "trials")
    _expect(isinstance(seed, int), "seed must be an integer", text, "seed")
    sc.settings = SolverSettings(cap, trials, seed)

    if validate:
        from .forms import validate_generator
        from .obstruction import validate_scenario
        for g in sc.lattice:
            validate_generator(sc, g)
        validate_scenario(sc)
    return sc


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


BUNDLED = ("t4_over_c", "closed_extension", "v_omega_halfplane", "v_omega_torus",
           "symplectic_bundle", "flag_pointwise", "flat_bundle")


def bundled_path(name: str) -> Path:
    if not name.endswith(".scn"):
        name += ".scn"
    return Path(str(resources.files("gcfol") / "scenarios" / name))


def load_bundled(name: str) -> Scenario:
    return load_scenario(bundled_path(name))
