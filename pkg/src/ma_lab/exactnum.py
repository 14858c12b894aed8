"""Exact scalars: rationals, sums of square roots, and rational intervals.

Rationals are plain :class:`fractions.Fraction` values.  :class:`SqrtSum`
extends them with finitely many square roots of squarefree integers, which
is enough for every operator this package builds.  Equality is decided by
canonical form alone; ordering refines rational enclosures of each root
until the sign of a difference is known.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Mapping, Union

Rational = Fraction

__all__ = [
    "DomainError",
    "Rational",
    "RationalInterval",
    "SqrtSum",
    "Scalar",
    "as_fraction",
    "format_rational",
    "format_scalar",
    "parse_rational",
    "parse_scalar",
    "sqrt_normalize",
    "sqrt_of",
]


class DomainError(ValueError):
    """Raised when an operation is applied outside its domain."""


def as_fraction(x) -> Fraction:
    """Coerce an int or Fraction (or an exact decimal string) to Fraction; floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, SqrtSum):
        return x.as_rational()
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


# Beyond this bound on the cofactor, trial division is abandoned and the
# remaining factor is handed to sympy (only reached for unusually large radicands).
_TRIAL_LIMIT = 1 << 20


def _squarefree_split(n: int) -> tuple[int, int]:
    scale, rad = 1, 1
    p = 2
    while p * p <= n and p <= _TRIAL_LIMIT:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            scale *= p ** (e // 2)
            if e % 2:
                rad *= p
        p += 1 if p == 2 else 2
    if n > 1:
        r = isqrt(n)
        if r * r == n:
            scale *= r
        elif p * p > n:
            rad *= n
        else:
            from sympy import factorint

            for q, e in factorint(n).items():
                q, e = int(q), int(e)
                scale *= q ** (e // 2)
                if e % 2:
                    rad *= q
    return scale, rad


_SQRT_CACHE: dict[int, tuple[int, int]] = {}


def sqrt_normalize(n: int) -> tuple[int, int]:
    """Return ``(scale, radicand)`` with ``n == scale**2 * radicand`` and radicand squarefree.

    >>> sqrt_normalize(360)
    (6, 10)
    """
    if isinstance(n, bool) or not isinstance(n, int):
        raise DomainError(f"sqrt_normalize needs a positive integer, got {n!r}")
    if n < 1:
        raise DomainError(f"sqrt_normalize needs a positive integer, got {n}")
    hit = _SQRT_CACHE.get(n)
    if hit is None:
        hit = _squarefree_split(n)
        if len(_SQRT_CACHE) < 100_000:
            _SQRT_CACHE[n] = hit
    return hit


_ScalarLike = Union[int, Fraction, "SqrtSum"]


class SqrtSum:
    """A finite sum ``sum(q_d * sqrt(d))`` with squarefree radicands ``d``.

    Instances are immutable.  Radicand 1 carries the rational part, so every
    rational is a SqrtSum with at most one term.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, Fraction] | None = None):
        clean: dict[int, Fraction] = {}
        if terms:
            for d, q in terms.items():
                q = as_fraction(q)
                if q == 0:
                    continue
                if d < 1:
                    raise DomainError(f"radicand must be positive, got {d}")
                s, r = sqrt_normalize(d)
                v = clean.get(r, Fraction(0)) + q * s
                if v:
                    clean[r] = v
                else:
                    clean.pop(r, None)
        object.__setattr__(self, "_terms", clean)
        object.__setattr__(self, "_hash", None)

    @classmethod
    def _raw(cls, terms: dict[int, Fraction]) -> "SqrtSum":
        obj = object.__new__(cls)
        object.__setattr__(obj, "_terms", terms)
        object.__setattr__(obj, "_hash", None)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("SqrtSum is immutable")

    # construction helpers
    @classmethod
    def of(cls, x: _ScalarLike) -> "SqrtSum":
        if isinstance(x, SqrtSum):
            return x
        q = as_fraction(x)
        return cls._raw({1: q} if q else {})

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and 1 in self._terms)

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise DomainError(f"{self} is not rational")
        return self._terms.get(1, Fraction(0))

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, SqrtSum):
            if isinstance(other, (int, Fraction)):
                other = SqrtSum.of(other)
            else:
                return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for d, q in other._terms.items():
            v = out.get(d)
            if v is None:
                out[d] = q
            else:
                v += q
                if v:
                    out[d] = v
                else:
                    del out[d]
        return SqrtSum._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return SqrtSum._raw({d: -q for d, q in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        if not isinstance(other, SqrtSum):
            if isinstance(other, (int, Fraction)):
                other = SqrtSum.of(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return SqrtSum.of(other) - self

    def __mul__(self, other):
        if not isinstance(other, SqrtSum):
            if isinstance(other, (int, Fraction)):
                if not other:
                    return _ZERO
                return SqrtSum._raw({d: q * other for d, q in self._terms.items()})
            return NotImplemented
        if not self._terms or not other._terms:
            return _ZERO
        if len(other._terms) == 1 and 1 in other._terms:
            return self * other._terms[1]
        if len(self._terms) == 1 and 1 in self._terms:
            return other * self._terms[1]
        out: dict[int, Fraction] = {}
        for d1, q1 in self._terms.items():
            for d2, q2 in other._terms.items():
                if d1 == d2:
                    s, r = d1, 1
                else:
                    g = gcd(d1, d2)
                    # d1*d2 = g^2 * (d1/g)*(d2/g); the cofactor is squarefree
                    s, r = g, (d1 // g) * (d2 // g)
                v = out.get(r, Fraction(0)) + q1 * q2 * s
                if v:
                    out[r] = v
                else:
                    out.pop(r, None)
        return SqrtSum._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SqrtSum):
            other = other.as_rational()
        q = as_fraction(other)
        if not q:
            raise ZeroDivisionError("division of SqrtSum by zero")
        return self * (1 / q)

    # comparison
    def __eq__(self, other):
        if isinstance(other, SqrtSum):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            if not other:
                return not self._terms
            return len(self._terms) == 1 and self._terms.get(1) == other
        return NotImplemented

    def __hash__(self):
        h = self._hash
        if h is None:
            if self.is_rational():
                h = hash(self._terms.get(1, Fraction(0)))
            else:
                h = hash(frozenset(self._terms.items()))
            object.__setattr__(self, "_hash", h)
        return h

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational bounds ``lo <= self <= hi`` from roots truncated to ``bits`` binary digits."""
        lo = hi = Fraction(0)
        scale = 1 << bits
        for d, q in self._terms.items():
            if d == 1:
                lo += q
                hi += q
                continue
            r = isqrt(d * scale * scale)
            a, b = Fraction(r, scale), Fraction(r + 1, scale)
            if q > 0:
                lo += q * a
                hi += q * b
            else:
                lo += q * b
                hi += q * a
        return lo, hi

    def sign(self) -> int:
        if not self._terms:
            return 0
        if self.is_rational():
            v = self._terms[1]
            return (v > 0) - (v < 0)
        bits = 32
        while True:
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2

    def _cmp(self, other) -> int:
        if not isinstance(other, SqrtSum):
            if isinstance(other, (int, Fraction)):
                other = SqrtSum.of(other)
            else:
                return NotImplemented
        return (self - other).sign()

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c >= 0

    def __bool__(self):
        return bool(self._terms)

    def __float__(self):
        lo, hi = self.enclosure(64)
        return float((lo + hi) / 2)

    def __repr__(self):
        return f"SqrtSum({format_scalar(self)!r})"

    def __str__(self):
        return format_scalar(self)


_ZERO = SqrtSum._raw({})

Scalar = Union[Fraction, SqrtSum]


def sqrt_of(x) -> SqrtSum:
    """Exact square root of a nonnegative rational, as a SqrtSum."""
    q = as_fraction(x)
    if q < 0:
        raise DomainError(f"square root of negative value {q}")
    if q == 0:
        return _ZERO
    # sqrt(p/r) = sqrt(p*r)/r
    s, d = sqrt_normalize(q.numerator * q.denominator)
    return SqrtSum._raw({d: Fraction(s, q.denominator)})


# text grammar

def format_rational(q) -> str:
    q = as_fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_scalar(x) -> str:
    """Render ``p/q`` for rationals and ``p/q*sqrt(d)`` terms joined by ``+``/``-``."""
    if not isinstance(x, SqrtSum):
        return format_rational(x)
    if not x._terms:
        return "0"
    parts = []
    for d in sorted(x._terms):
        q = x._terms[d]
        body = format_rational(abs(q))
        if d != 1:
            body = f"{body}*sqrt({d})"
        parts.append(("-" if q < 0 else "+", body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sgn, body in parts[1:]:
        out += sgn + body
    return out


_RAT_RE = re.compile(r"\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")
_TERM_RE = re.compile(r"\s*(\d+(?:\s*/\s*\d+)?)\s*(?:\*\s*sqrt\(\s*(\d+)\s*\))?\s*")


def parse_rational(text: str) -> Fraction:
    m = _RAT_RE.match(text)
    if not m:
        raise ValueError(f"not a rational: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return Fraction(num, den)


def parse_scalar(text: str) -> Scalar:
    """Parse the grammar produced by :func:`format_scalar`.

    Returns a Fraction when no square-root term occurs.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty scalar")
    pos = 0
    terms: dict[int, Fraction] = {}
    sign = 1
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        pos = 1
    while True:
        m = _TERM_RE.match(s, pos)
        if not m or m.end() == pos:
            raise ValueError(f"bad scalar {text!r} at offset {pos}")
        coef = parse_rational(m.group(1).replace(" ", ""))
        d = int(m.group(2)) if m.group(2) else 1
        if d < 1:
            raise ValueError(f"bad radicand in {text!r}")
        terms[d] = terms.get(d, Fraction(0)) + sign * coef
        pos = m.end()
        if pos == len(s):
            break
        if s[pos] not in "+-":
            raise ValueError(f"bad scalar {text!r} at offset {pos}")
        sign = -1 if s[pos] == "-" else 1
        pos += 1
    value = SqrtSum(terms)
    return value.as_rational() if value.is_rational() else value


@dataclass(frozen=True)
class RationalInterval:
    """Closed interval ``[lo, hi]`` with rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> "RationalInterval":
        return cls(x, x)

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __add__(self, other):
        if not isinstance(other, RationalInterval):
            other = RationalInterval.point(as_fraction(other))
        return RationalInterval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, RationalInterval):
            other = RationalInterval.point(as_fraction(other))
        return self + (-other)

    def scale(self, k) -> "RationalInterval":
        k = as_fraction(k)
        a, b = self.lo * k, self.hi * k
        return RationalInterval(min(a, b), max(a, b))

    def mul_nonneg(self, other: "RationalInterval") -> "RationalInterval":
        """Product with an interval whose lower end is nonnegative."""
        if not isinstance(other, RationalInterval):
            other = RationalInterval.point(as_fraction(other))
        if other.lo < 0:
            raise DomainError(f"mul-by-nonnegative needs b.lo >= 0, got {other.lo}")
        cands = [self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi]
        return RationalInterval(min(cands), max(cands))

    def square(self) -> "RationalInterval":
        a, b = self.lo * self.lo, self.hi * self.hi
        if self.lo <= 0 <= self.hi:
            return RationalInterval(Fraction(0), max(a, b))
        return RationalInterval(min(a, b), max(a, b))

    def reciprocal(self) -> "RationalInterval":
        if self.lo <= 0 <= self.hi:
            raise DomainError("reciprocal of an interval containing 0")
        return RationalInterval(1 / self.hi, 1 / self.lo)

    def __str__(self):
        return f"[{format_rational(self.lo)}, {format_rational(self.hi)}]"


def interval_arith(a: RationalInterval, b, op: str) -> RationalInterval:
    """Dispatch helper: ``op`` is one of ``add``, ``mul-by-nonnegative``, ``square``."""
    if op == "add":
        return a + b
    if op in ("mul-by-nonnegative", "mul"):
        return a.mul_nonneg(b)
    if op == "square":
        return a.square()
    raise DomainError(f"unknown interval op {op!r}")


def dot(xs: Iterable, ys: Iterable):
    total = Fraction(0)
    for x, y in zip(xs, ys):
        if x and y:
            total = total + x * y
    return total
