"""Exact sparse multivariate polynomials over the rationals.

Coefficients are :class:`fractions.Fraction`; a polynomial is a mapping from
exponent tuples to nonzero coefficients, tied to a :class:`Ring` that names
the variables and optionally assigns them integer weights.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Iterator, Mapping, Sequence

Rational = Fraction
Monomial = tuple


class RingMismatch(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.column = col


@dataclass(frozen=True)
class Ring:
    names: tuple[str, ...]
    weights: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.weights is not None and len(self.weights) != len(self.names):
            raise ValueError("one weight per variable required")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate variable names")

    @property
    def nvars(self) -> int:
        return len(self.names)

    def wdeg(self, mono: Sequence[int]) -> int:
        if self.weights is None:
            return sum(mono)
        return sum(e * w for e, w in zip(mono, self.weights))

    def index(self, name: str) -> int:
        return self.names.index(name)

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return self.const(1)

    def const(self, c) -> "Poly":
        c = Fraction(c)
        return Poly(self, {(0,) * self.nvars: c} if c else {})

    def var(self, i: int | str) -> "Poly":
        if isinstance(i, str):
            i = self.index(i)
        e = [0] * self.nvars
        e[i] = 1
        return Poly(self, {tuple(e): Fraction(1)})

    def gens(self) -> list["Poly"]:
        return [self.var(i) for i in range(self.nvars)]

    def monomial(self, exps: Sequence[int], coeff=1) -> "Poly":
        if len(exps) != self.nvars:
            raise ValueError("exponent vector length does not match ring")
        c = Fraction(coeff)
        return Poly(self, {tuple(exps): c} if c else {})

    def linear(self, coeffs: Sequence) -> "Poly":
        """Linear form sum(c_i * x_i)."""
        terms = {}
        for i, c in enumerate(coeffs):
            c = Fraction(c)
            if c:
                e = [0] * self.nvars
                e[i] = 1
                terms[tuple(e)] = c
        return Poly(self, terms)

    def order_key(self, mono: Sequence[int]):
        return (self.wdeg(mono), tuple(mono))


class Poly:
    """Immutable sparse polynomial.  Terms never store a zero coefficient."""

    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: Ring, terms: Mapping[tuple, Fraction] | None = None,
                 *, homogeneous: int | None = None):
        self.ring = ring
        if terms is None:
            terms = {}
        self.terms = {m: c for m, c in terms.items() if c}
        self._hash = None
        if homogeneous is not None and not self.is_homogeneous(homogeneous):
            raise ValueError(f"polynomial is not homogeneous of degree {homogeneous}")

    # construction helpers -------------------------------------------------

    @classmethod
    def _raw(cls, ring: Ring, terms: dict) -> "Poly":
        p = cls.__new__(cls)
        p.ring = ring
        p.terms = terms
        p._hash = None
        return p

    # basic protocol -------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.ring.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"Poly({format_poly(self)})"

    def __str__(self):
        return format_poly(self)

    def items(self) -> Iterator[tuple[tuple, Fraction]]:
        """Terms in canonical (graded-lex descending) order."""
        for m in sorted(self.terms, key=self.ring.order_key, reverse=True):
            yield m, self.terms[m]

    def coeff(self, mono: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(mono), Fraction(0))

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms.get((0,) * self.ring.nvars, Fraction(0))

    def degrees(self) -> set[int]:
        return {self.ring.wdeg(m) for m in self.terms}

    def degree(self) -> int:
        return max(self.degrees(), default=-1)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        ds = self.degrees()
        if not ds:
            return True
        if len(ds) != 1:
            return False
        return degree is None or ds == {degree}

    def _check(self, other: "Poly"):
        if self.ring != other.ring:
            raise RingMismatch(f"ring mismatch: {self.ring.names} vs {other.ring.names}")

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t = dict(self.terms)
        for m, c in other.terms.items():
            v = t.get(m, 0) + c
            if v:
                t[m] = v
            else:
                t.pop(m, None)
        return Poly._raw(self.ring, t)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if len(self.terms) > len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        t: dict = {}
        get = t.get
        for mb, cb in b.items():
            for ma, ca in a.items():
                m = tuple(x + y for x, y in zip(ma, mb))
                t[m] = get(m, 0) + ca * cb
        return Poly._raw(self.ring, {m: c for m, c in t.items() if c})

    __rmul__ = __mul__

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return self.ring.zero()
        return Poly._raw(self.ring, {m: v * c for m, v in self.terms.items()})

    def __truediv__(self, c):
        return self.scale(1 / Fraction(c))

    def __pow__(self, m: int):
        return poly_pow(self, m)

    # calculus / evaluation --------------------------------------------------

    def diff(self, i: int | str) -> "Poly":
        return poly_diff(self, i)

    def __call__(self, *point):
        return poly_eval(self, point)

    def homogeneous_part(self, degree: int) -> "Poly":
        return Poly._raw(self.ring, {m: c for m, c in self.terms.items()
                                     if self.ring.wdeg(m) == degree})


def _ring_of(a: Poly, b: Poly) -> Ring:
    a._check(b)
    return a.ring


def poly_arith(a: Poly, b: Poly, op: str) -> Poly:
    _ring_of(a, b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def _linear_coeffs(p: Poly) -> list[Fraction] | None:
    """Coefficient vector if p is a homogeneous linear form, else None."""
    n = p.ring.nvars
    out = [Fraction(0)] * n
    for m, c in p.terms.items():
        if sum(m) != 1:
            return None
        out[m.index(1)] = c
    return out


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _linear_pow(ring: Ring, coeffs: list[Fraction], m: int) -> Poly:
    # multinomial expansion over the support only
    support = [i for i, c in enumerate(coeffs) if c]
    if not support:
        return ring.one() if m == 0 else ring.zero()
    # integer numerators over a common denominator keep the inner loop in ints
    den = 1
    for i in support:
        den = den * coeffs[i].denominator // _gcd(den, coeffs[i].denominator)
    nums = [int(coeffs[i] * den) for i in support]
    powers = [[1] * (m + 1) for _ in support]
    for k, a in enumerate(nums):
        for e in range(1, m + 1):
            powers[k][e] = powers[k][e - 1] * a
    fm = factorial(m)
    scale = Fraction(1, den ** m)
    n = ring.nvars
    terms = {}
    for comp in _compositions(m, len(support)):
        c = fm
        for e in comp:
            c //= factorial(e)
        for k, e in enumerate(comp):
            c *= powers[k][e]
        if c:
            exps = [0] * n
            for k, e in zip(support, comp):
                exps[k] = e
            terms[tuple(exps)] = c * scale
    return Poly._raw(ring, terms)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def poly_pow(p: Poly, m: int) -> Poly:
    if m < 0:
        raise ValueError("negative exponent")
    if m == 0:
        return p.ring.one()
    if m == 1:
        return p
    lin = _linear_coeffs(p)
    if lin is not None:
        return _linear_pow(p.ring, lin, m)
    result = p.ring.one()
    base = p
    while m:
        if m & 1:
            result = result * base
        m >>= 1
        if m:
            base = base * base
    return result


def poly_diff(p: Poly, i: int | str) -> Poly:
    if isinstance(i, str):
        i = p.ring.index(i)
    if not 0 <= i < p.ring.nvars:
        raise IndexError("variable index out of range")
    t = {}
    for m, c in p.terms.items():
        e = m[i]
        if e:
            t[m[:i] + (e - 1,) + m[i + 1:]] = c * e
    return Poly._raw(p.ring, t)


def poly_eval(p: Poly, point: Sequence) -> Fraction:
    n = p.ring.nvars
    if len(point) != n:
        raise ValueError(f"point has {len(point)} coordinates, ring has {n}")
    pt = [Fraction(v) for v in point]
    cache = [dict() for _ in range(n)]

    def pw(i, e):
        d = cache[i]
        v = d.get(e)
        if v is None:
            v = d[e] = pt[i] ** e
        return v

    total = Fraction(0)
    for m, c in p.terms.items():
        v = c
        for i, e in enumerate(m):
            if e:
                v *= pw(i, e)
        total += v
    return total


def poly_substitute(p: Poly, images: Sequence[Poly], target: Ring | None = None) -> Poly:
    """Compose p with images[i] in place of variable i."""
    if len(images) != p.ring.nvars:
        raise RingMismatch("one image per variable required")
    if target is None:
        if not images:
            raise RingMismatch("target ring required for a ring with no variables")
        target = images[0].ring
    for q in images:
        if q.ring != target:
            raise RingMismatch("images must share a common ring")
    cache: list[dict[int, Poly]] = [dict() for _ in images]

    def pw(i: int, e: int) -> Poly:
        d = cache[i]
        if e not in d:
            if e == 1:
                d[e] = images[i]
            else:
                # build from the nearest cached lower power
                lower = max((k for k in d if k < e), default=0)
                base = d[lower] if lower else target.one()
                for _ in range(e - lower):
                    base = base * images[i]
                d[e] = base
        return d[e]

    acc: dict = {}
    for m, c in p.terms.items():
        term = None
        for i, e in enumerate(m):
            if e:
                f = pw(i, e)
                term = f if term is None else term * f
        if term is None:
            term = target.one()
        for tm, tc in term.terms.items():
            acc[tm] = acc.get(tm, 0) + c * tc
    return Poly._raw(target, {m: c for m, c in acc.items() if c})


def change_ring(p: Poly, ring: Ring) -> Poly:
    """Reinterpret p over a ring with the same number of variables."""
    if ring.nvars != p.ring.nvars:
        raise RingMismatch("variable count differs")
    return Poly._raw(ring, dict(p.terms))


# weighted monomials ---------------------------------------------------------


def enumerate_weighted_monomials(weights: Sequence[int], degree: int) -> list[tuple[int, ...]]:
    """All exponent vectors e with sum(e_i * w_i) == degree, canonical order.

    Canonical order is lex-descending on the exponent vector, matching the
    graded-lex term order within a single weighted degree.
    """
    if degree < 0:
        return []
    weights = list(weights)
    n = len(weights)
    out: list[tuple[int, ...]] = []

    def rec(i: int, remaining: int, prefix: list[int]):
        if i == n - 1:
            w = weights[i]
            if remaining % w == 0:
                out.append(tuple(prefix + [remaining // w]))
            return
        w = weights[i]
        for e in range(remaining // w, -1, -1):
            rec(i + 1, remaining - e * w, prefix + [e])

    if n == 0:
        return [()] if degree == 0 else []
    rec(0, degree, [])
    return out


def count_weighted_monomials(weights: Sequence[int], degree: int) -> int:
    """Coefficient of q^degree in prod 1/(1 - q^w), by power-series expansion."""
    series = [0] * (degree + 1)
    series[0] = 1
    for w in weights:
        for k in range(w, degree + 1):
            series[k] += series[k - w]
    return series[degree] if degree >= 0 else 0


def homogeneous_monomials(nvars: int, degree: int) -> int:
    return comb(degree + nvars - 1, nvars - 1)


# canonical text format ------------------------------------------------------


def _format_coeff(c: Fraction) -> str:
    sign = "+" if c > 0 else "-"
    a = abs(c)
    if a.denominator == 1:
        return f"{sign}{a.numerator}"
    return f"{sign}{a.numerator}/{a.denominator}"


def format_poly(p: Poly) -> str:
    if not p.terms:
        return "0"
    parts = []
    names = p.ring.names
    for m, c in p.items():
        s = _format_coeff(c)
        for name, e in zip(names, m):
            if e == 1:
                s += f"*{name}"
            elif e > 1:
                s += f"*{name}^{e}"
        parts.append(s)
    return "".join(parts)


_TERM = re.compile(r"([+-])(\d+)(?:/(\d+))?((?:\*[A-Za-z_][A-Za-z0-9_]*(?:\^\d+)?)*)")
_FACTOR = re.compile(r"\*([A-Za-z_][A-Za-z0-9_]*)(?:\^(\d+))?")


def parse_poly(text: str, ring: Ring, *, strict: bool = True) -> Poly:
    """Parse the canonical text format.

    With ``strict`` the input must be exactly what :func:`format_poly` emits:
    canonical term order, reduced fractions, no zero terms, no elided-able
    ``/1`` or ``^1``, variables in ring order.
    """
    s = text.strip()
    offset = text.find(s) if s else 0
    if s == "0":
        return ring.zero()
    if not s:
        raise ParseError("empty input", text, 0)
    pos = 0
    terms: dict = {}
    order: list[tuple] = []
    while pos < len(s):
        mt = _TERM.match(s, pos)
        if mt is None or mt.end() == pos:
            raise ParseError(f"unexpected character {s[pos]!r}", text, offset + pos)
        sign, num, den, factors = mt.groups()
        num_i = int(num)
        den_i = int(den) if den is not None else 1
        if den_i == 0:
            raise ParseError("zero denominator", text, offset + mt.start(3))
        if strict:
            if num_i == 0:
                raise ParseError("zero coefficient", text, offset + mt.start(2))
            if den is not None and (den_i == 1 or _gcd(num_i, den_i) != 1):
                raise ParseError("fraction not in lowest terms", text, offset + mt.start(3))
            if num != str(num_i) or (den is not None and den != str(den_i)):
                raise ParseError("leading zeros", text, offset + mt.start(2))
        exps = [0] * ring.nvars
        last = -1
        fpos = mt.start(4)
        for mf in _FACTOR.finditer(factors):
            name, e = mf.group(1), mf.group(2)
            where = offset + fpos + mf.start(1)
            if name not in ring.names:
                raise ParseError(f"unknown variable {name!r}", text, where)
            k = ring.index(name)
            e_i = int(e) if e is not None else 1
            if strict:
                if k <= last:
                    raise ParseError(f"variable {name!r} out of order", text, where)
                if e is not None and (e_i <= 1 or e != str(e_i)):
                    raise ParseError("non-canonical exponent", text, where)
            exps[k] += e_i
            last = k
        mono = tuple(exps)
        coeff = Fraction(num_i, den_i) * (1 if sign == "+" else -1)
        if strict and mono in terms:
            raise ParseError("repeated monomial", text, offset + pos)
        terms[mono] = terms.get(mono, 0) + coeff
        order.append(mono)
        pos = mt.end()
    if strict:
        keys = [ring.order_key(m) for m in order]
        for i in range(1, len(keys)):
            if keys[i] >= keys[i - 1]:
                raise ParseError("terms not in canonical order", text, offset)
    return Poly(ring, terms)


def lcm_denominator(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        q = Fraction(v).denominator
        d = d * q // _gcd(d, q)
    return d
