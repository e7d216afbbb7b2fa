"""Exact coefficient functions on model total spaces.

A :class:`CoeffFn` is a finite sum of terms

    c * tau**k * exp(2*pi*i*(n.t + m.u)) * x**e

where ``t`` are fibre angles, ``u`` torus-base angles, ``x`` flat-base
coordinates, ``c`` a Gaussian rational and ``tau`` stands for the real
transcendental ``2*pi``.  Angles have period 1, so differentiating a
Fourier mode multiplies by ``i*n*tau``; keeping ``tau`` symbolic means no
arithmetic ever leaves Q(i)[tau, 1/tau].
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from gmpy2 import mpq

from .errors import DomainError, NotInvertibleMode, ScenarioMismatch


_MPQ = type(mpq(0))


class QI:
    """Gaussian rational ``re + i*im``; parts are exact gmpy2 rationals."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if type(re) is _MPQ else mpq(re)
        self.im = im if type(im) is _MPQ else mpq(im)

    @classmethod
    def coerce(cls, value) -> "QI":
        if isinstance(value, QI):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value, 0)
        if isinstance(value, complex):
            raise DomainError("floating-point complex numbers are not exact; use QI")
        raise TypeError(f"cannot interpret {value!r} as a Gaussian rational")

    def __add__(self, other):
        if type(other) is not QI:
            other = QI.coerce(other)
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = QI.coerce(other)
        return QI(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return QI.coerce(other) - self

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __mul__(self, other):
        if type(other) is not QI:
            other = QI.coerce(other)
        if not self.im and not other.im:
            return QI(self.re * other.re, 0)
        return QI(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QI.coerce(other)
        if not other:
            raise ZeroDivisionError("division by zero Gaussian rational")
        if not other.im:
            return QI(self.re / other.re, self.im / other.re)
        norm = other.re * other.re + other.im * other.im
        return QI((self.re * other.re + self.im * other.im) / norm,
                  (self.im * other.re - self.re * other.im) / norm)

    def __rtruediv__(self, other):
        return QI.coerce(other) / self

    def __pow__(self, n: int):
        result = QI(1)
        base = self if n >= 0 else QI(1) / self
        for _ in range(abs(n)):
            result = result * base
        return result

    def conjugate(self) -> "QI":
        return QI(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Rational)):
            return not self.im and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"QI({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return "i" if self.im == 1 else ("-i" if self.im == -1 else f"{self.im}*i")
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*i)"


I = QI(0, 1)
ZERO = QI(0)
ONE = QI(1)
_I_POWERS = (QI(1), QI(0, 1), QI(-1), QI(0, -1))


def _add_tuples(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _neg_tuple(a):
    return tuple(-x for x in a)


class CoeffFn:
    """Immutable exact function on the model total space.

    ``shape = (p, q, r)`` fixes the number of fibre angles, torus-base
    angles and flat-base coordinates.  ``terms`` maps ``(n, m, e, k)`` to a
    nonzero :class:`QI`.
    """

    __slots__ = ("shape", "terms", "_hash")

    def __init__(self, shape, terms=None):
        self.shape = tuple(shape)
        clean = {}
        if terms:
            for key, c in terms.items():
                c = QI.coerce(c)
                if c:
                    clean[key] = c
        self.terms = clean
        self._hash = None

    # -- construction -------------------------------------------------------

    @classmethod
    def _raw(cls, shape, terms):
        obj = cls.__new__(cls)
        obj.shape = shape
        obj.terms = terms
        obj._hash = None
        return obj

    def _zero_key(self):
        p, q, r = self.shape
        return ((0,) * p, (0,) * q, (0,) * r, 0)

    @classmethod
    def zero(cls, shape):
        return cls(shape)

    @classmethod
    def const(cls, shape, c=1, tau_power=0):
        p, q, r = shape
        return cls(shape, {((0,) * p, (0,) * q, (0,) * r, tau_power): QI.coerce(c)})

    @classmethod
    def var(cls, shape, name: str):
        """The flat coordinate ``x_k`` as a function."""
        kind, idx = parse_var(shape, name)
        if kind != "x":
            raise DomainError(f"{name} is an angle; use CoeffFn.mode for Fourier terms")
        p, q, r = shape
        e = [0] * r
        e[idx] = 1
        return cls(shape, {((0,) * p, (0,) * q, tuple(e), 0): ONE})

    @classmethod
    def mode(cls, shape, fibre=None, base=None, c=1):
        """``c * exp(2*pi*i*(fibre.t + base.u))``."""
        p, q, r = shape
        n = tuple(fibre) if fibre is not None else (0,) * p
        m = tuple(base) if base is not None else (0,) * q
        if len(n) != p or len(m) != q:
            raise DomainError("frequency vector has the wrong length")
        return cls(shape, {(n, m, (0,) * r, 0): QI.coerce(c)})

    @classmethod
    def cos(cls, shape, fibre=None, base=None):
        a = cls.mode(shape, fibre, base, QI(Fraction(1, 2)))
        return a + a.conjugate()

    @classmethod
    def sin(cls, shape, fibre=None, base=None):
        a = cls.mode(shape, fibre, base, QI(0, Fraction(-1, 2)))
        return a + a.conjugate()

    # -- ring structure -----------------------------------------------------

    def _check(self, other):
        if self.shape != other.shape:
            raise ScenarioMismatch(f"coefficient shapes differ: {self.shape} vs {other.shape}")

    def _lift(self, other):
        if isinstance(other, CoeffFn):
            self._check(other)
            return other
        return CoeffFn.const(self.shape, QI.coerce(other))

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for key, c in other.terms.items():
            s = terms.get(key)
            if s is None:
                terms[key] = c
            else:
                s = s + c
                if s:
                    terms[key] = s
                else:
                    del terms[key]
        return CoeffFn._raw(self.shape, terms)

    __radd__ = __add__

    def __neg__(self):
        return CoeffFn._raw(self.shape, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def scale(self, c) -> "CoeffFn":
        c = QI.coerce(c)
        if not c:
            return CoeffFn._raw(self.shape, {})
        return CoeffFn._raw(self.shape, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, CoeffFn):
            return self.scale(other)
        self._check(other)
        if len(self.terms) == 1 and not other.terms:
            return other
        terms = {}
        for (n1, m1, e1, k1), c1 in self.terms.items():
            for (n2, m2, e2, k2), c2 in other.terms.items():
                key = (_add_tuples(n1, n2), _add_tuples(m1, m2), _add_tuples(e1, e2), k1 + k2)
                v = c1 * c2
                s = terms.get(key)
                terms[key] = v if s is None else s + v
        return CoeffFn(self.shape, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise DomainError("negative powers are not in the ring")
        result = CoeffFn.const(self.shape, 1)
        for _ in range(n):
            result = result * self
        return result

    def conjugate(self) -> "CoeffFn":
        return CoeffFn._raw(self.shape, {
            (_neg_tuple(n), _neg_tuple(m), e, k): c.conjugate()
            for (n, m, e, k), c in self.terms.items()
        })

    # -- predicates ---------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self) -> bool:
        return self == self.conjugate()

    def is_constant(self) -> bool:
        zk = self._zero_key()[:3]
        return all(key[:3] == zk for key in self.terms)

    def constant_value(self):
        """The Gaussian rational value when the function is a plain constant, else None."""
        if not self.terms:
            return ZERO
        if len(self.terms) == 1:
            key, c = next(iter(self.terms.items()))
            if key == self._zero_key():
                return c
        return None

    def depends_on_fibre(self) -> bool:
        return any(any(n) for (n, _, _, _) in self.terms)

    def __eq__(self, other):
        if isinstance(other, CoeffFn):
            return self.shape == other.shape and self.terms == other.terms
        if isinstance(other, (int, Rational, QI)):
            return self == CoeffFn.const(self.shape, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.shape, frozenset(self.terms.items())))
        return self._hash

    # -- calculus -----------------------------------------------------------

    def differentiate(self, var: str) -> "CoeffFn":
        kind, idx = parse_var(self.shape, var)
        return self._diff(kind, idx)

    def _diff(self, kind, idx):
        terms = {}
        for (n, m, e, k), c in self.terms.items():
            if kind == "x":
                if e[idx]:
                    e2 = e[:idx] + (e[idx] - 1,) + e[idx + 1:]
                    terms[(n, m, e2, k)] = c * e[idx]
            else:
                freq = n[idx] if kind == "t" else m[idx]
                if freq:
                    terms[(n, m, e, k + 1)] = c * QI(0, freq)
        return CoeffFn._raw(self.shape, terms)

    def fibre_average(self) -> "CoeffFn":
        """Keep the terms with zero fibre frequency."""
        return CoeffFn._raw(self.shape, {
            key: c for key, c in self.terms.items() if not any(key[0])
        })

    def base_average(self) -> "CoeffFn":
        """Keep the terms with zero torus-base frequency."""
        return CoeffFn._raw(self.shape, {
            key: c for key, c in self.terms.items() if not any(key[1])
        })

    def mode_primitive(self, var: str) -> "CoeffFn":
        """Exact primitive in ``var``: division by frequency for angles,
        polynomial antiderivative for flat coordinates."""
        kind, idx = parse_var(self.shape, var)
        terms = {}
        for (n, m, e, k), c in self.terms.items():
            if kind == "x":
                e2 = e[:idx] + (e[idx] + 1,) + e[idx + 1:]
                terms[(n, m, e2, k)] = c / (e[idx] + 1)
            else:
                freq = n[idx] if kind == "t" else m[idx]
                if not freq:
                    raise NotInvertibleMode(f"term with zero frequency in {var} has no periodic primitive")
                terms[(n, m, e, k - 1)] = c / QI(0, freq)
        return CoeffFn._raw(self.shape, terms)

    # -- decomposition ------------------------------------------------------

    def split_fibre_modes(self) -> dict:
        out = {}
        for key, c in self.terms.items():
            out.setdefault(key[0], {})[key] = c
        return {n: CoeffFn._raw(self.shape, t) for n, t in out.items()}

    def split_base_modes(self) -> dict:
        out = {}
        for key, c in self.terms.items():
            out.setdefault(key[1], {})[key] = c
        return {m: CoeffFn._raw(self.shape, t) for m, t in out.items()}

    def split_flat_degree(self) -> dict:
        out = {}
        for key, c in self.terms.items():
            out.setdefault(sum(key[2]), {})[key] = c
        return {d: CoeffFn._raw(self.shape, t) for d, t in out.items()}

    def poly_degree(self) -> int:
        return max((sum(key[2]) for key in self.terms), default=0)

    def max_frequency(self) -> int:
        return max((max((abs(v) for v in key[0] + key[1]), default=0) for key in self.terms), default=0)

    def tau_powers(self) -> set:
        return {key[3] for key in self.terms}

    # -- substitution -------------------------------------------------------

    def substitute_angles(self, fibre_matrix=None, fibre_shift=None, base_shift=None) -> "CoeffFn":
        """Pull back along ``t -> M t + s`` and ``u -> u + c`` (shifts in quarter periods)."""
        p, q, r = self.shape
        terms = {}
        for (n, m, e, k), c in self.terms.items():
            phase = Fraction(0)
            if fibre_matrix is not None:
                n2 = tuple(sum(n[i] * fibre_matrix[i][j] for i in range(p)) for j in range(p))
            else:
                n2 = n
            if fibre_shift is not None:
                phase += sum(Fraction(a) * b for a, b in zip(n, fibre_shift))
            if base_shift is not None:
                phase += sum(Fraction(a) * b for a, b in zip(m, base_shift))
            c2 = c * quarter_phase(phase)
            key = (n2, m, e, k)
            s = terms.get(key)
            terms[key] = c2 if s is None else s + c2
        return CoeffFn(self.shape, terms)

    def substitute_flat(self, images) -> "CoeffFn":
        """Replace each flat coordinate ``x_l`` by the function ``images[l]``."""
        p, q, r = self.shape
        if len(images) != r:
            raise DomainError("need one image per flat coordinate")
        cache = {}

        def power(l, a):
            if (l, a) not in cache:
                cache[(l, a)] = images[l] ** a
            return cache[(l, a)]

        result = CoeffFn.zero(self.shape)
        for (n, m, e, k), c in self.terms.items():
            piece = CoeffFn(self.shape, {(n, m, (0,) * r, k): c})
            for l, a in enumerate(e):
                if a:
                    piece = piece * power(l, a)
            result = result + piece
        return result

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t=(), u=(), x=()) -> dict:
        """Exact value at a point as a Laurent polynomial ``{tau_power: QI}``.

        Angles must be multiples of 1/4 so that every exponential is a power of i.
        """
        out = {}
        for (n, m, e, k), c in self.terms.items():
            phase = sum(Fraction(a) * b for a, b in zip(n, t)) + sum(Fraction(a) * b for a, b in zip(m, u))
            v = c * quarter_phase(phase)
            for xv, a in zip(x, e):
                if a:
                    v = v * (Fraction(xv) ** a)
            s = out.get(k)
            out[k] = v if s is None else s + v
        return {k: v for k, v in out.items() if v}

    def approx(self, t=(), u=(), x=()) -> complex:
        """Floating-point value, for display only."""
        import cmath
        import math
        total = 0j
        for (n, m, e, k), c in self.terms.items():
            phase = sum(a * float(b) for a, b in zip(n, t)) + sum(a * float(b) for a, b in zip(m, u))
            v = complex(float(c.re), float(c.im)) * cmath.exp(2j * math.pi * phase) * (2 * math.pi) ** k
            for xv, a in zip(x, e):
                v *= float(xv) ** a
            total += v
        return total

    # -- display ------------------------------------------------------------

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0][3], kv[0][2], kv[0][0], kv[0][1]))

    def __repr__(self):
        return f"CoeffFn({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        p, q, r = self.shape
        parts = []
        for (n, m, e, k), c in self.sorted_terms():
            factors = []
            if k:
                factors.append("tau" if k == 1 else f"tau^{k}")
            for l, a in enumerate(e):
                if a:
                    factors.append(f"x{l + 1}" + (f"^{a}" if a > 1 else ""))
            phase = _linear_str([("t", v) for v in n] + [("u", v) for v in m])
            if phase:
                factors.append(f"e({phase})")
            body = "*".join(factors)
            if not body:
                parts.append(str(c))
            elif c == 1:
                parts.append(body)
            elif c == -1:
                parts.append("-" + body)
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts).replace("+ -", "- ")


def _linear_str(coeffs):
    out = []
    counters = {"t": 0, "u": 0}
    for kind, v in coeffs:
        counters[kind] += 1
        if v:
            name = f"{kind}{counters[kind]}"
            out.append(name if v == 1 else (f"-{name}" if v == -1 else f"{v}{name}"))
    return "+".join(out).replace("+-", "-")


def quarter_phase(phase) -> QI:
    """``exp(2*pi*i*phase)`` for phase a multiple of 1/4."""
    q = Fraction(phase) * 4
    if q.denominator != 1:
        raise DomainError(f"angle phase {phase} is not a quarter period; value would leave Q(i)")
    return _I_POWERS[q.numerator % 4]


@lru_cache(maxsize=None)
def parse_var(shape, name: str):
    """Map ``t<i>``, ``u<j>`` or ``x<k>`` (1-based) to ``(kind, 0-based index)``."""
    p, q, r = shape
    if len(name) >= 2 and name[0] in "tux" and name[1:].isdigit():
        kind, idx = name[0], int(name[1:]) - 1
        bound = {"t": p, "u": q, "x": r}[kind]
        if 0 <= idx < bound:
            return kind, idx
    raise DomainError(f"unknown coordinate {name!r} for coefficient shape {shape}")
