"""Exact arithmetic in Q[sqrt p, sqrt q] with rational and float fallbacks.

A ``QuadExt`` stores a + b*sqrt(p) + c*sqrt(q) + d*sqrt(pq) with rational
a, b, c, d.  Scalars used across the package are ``Fraction``, ``QuadExt``
or ``float``; mixed arithmetic promotes in that order.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "QuadExt",
    "Scalar",
    "IncompatibleRingError",
    "NotInvertibleError",
    "quad_mul",
    "quad_inv",
    "to_float",
    "to_complex",
    "scalar_to_json",
    "scalar_from_json",
    "parse_scalar",
    "format_scalar",
    "is_zero",
    "sqrt_in_ring",
    "sqrt_pq_unit",
]


class IncompatibleRingError(ValueError):
    """Arithmetic between QuadExt values with different (p, q) tags."""


class NotInvertibleError(ZeroDivisionError):
    """Element has no inverse in the (possibly non-reduced) ring."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


class QuadExt:
    """Element a + b*sp + c*sq + d*sp*sq of Q[sp, sq]/(sp^2 - p, sq^2 - q)."""

    __slots__ = ("p", "q", "a", "b", "c", "d")

    def __init__(self, p: int, q: int, a=0, b=0, c=0, d=0):
        if int(p) != p or int(q) != q or p <= 0 or q <= 0:
            raise ValueError("p and q must be positive integers")
        self.p = int(p)
        self.q = int(q)
        self.a = _frac(a)
        self.b = _frac(b)
        self.c = _frac(c)
        self.d = _frac(d)

    # convenient constructors
    @classmethod
    def sqrt_p(cls, p: int, q: int) -> QuadExt:
        return cls(p, q, 0, 1, 0, 0)

    @classmethod
    def sqrt_q(cls, p: int, q: int) -> QuadExt:
        return cls(p, q, 0, 0, 1, 0)

    @classmethod
    def sqrt_pq(cls, p: int, q: int) -> QuadExt:
        return cls(p, q, 0, 0, 0, 1)

    @property
    def coeffs(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    @property
    def tag(self) -> tuple[int, int]:
        return (self.p, self.q)

    def is_rational(self) -> bool:
        return self.b == 0 and self.c == 0 and self.d == 0

    def _lift(self, other) -> QuadExt | None:
        if isinstance(other, QuadExt):
            if other.tag != self.tag:
                raise IncompatibleRingError(f"ring tags differ: {self.tag} vs {other.tag}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return QuadExt(self.p, self.q, other)
        return None

    def __add__(self, other):
        if isinstance(other, (float, complex)):
            return complex(self) + other if isinstance(other, complex) else float(self) + other
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return QuadExt(self.p, self.q, self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self) -> QuadExt:
        return QuadExt(self.p, self.q, -self.a, -self.b, -self.c, -self.d)

    def __pos__(self) -> QuadExt:
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, float):
            return float(self) * other
        if isinstance(other, complex):
            return complex(self) * other
        o = self._lift(other)
        if o is None:
            return NotImplemented
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            return QuadExt(self.p, self.q, self.a * f, self.b * f, self.c * f, self.d * f)
        return quad_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (float, complex)):
            return (float(self) if isinstance(other, float) else complex(self)) / other
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            f = Fraction(other)
            return QuadExt(self.p, self.q, self.a / f, self.b / f, self.c / f, self.d / f)
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return quad_mul(self, quad_inv(o))

    def __rtruediv__(self, other):
        if isinstance(other, (float, complex)):
            return other / (float(self) if isinstance(other, float) else complex(self))
        o = self._lift(other)
        if o is None:
            return NotImplemented
        return quad_mul(o, quad_inv(self))

    def __pow__(self, n: int) -> QuadExt:
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return quad_inv(self) ** (-n)
        result = QuadExt(self.p, self.q, 1)
        base = self
        while n:
            if n & 1:
                result = quad_mul(result, base)
            base = quad_mul(base, base)
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, QuadExt):
            return self.tag == other.tag and self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.a == other
        if isinstance(other, float):
            return float(self) == other
        return NotImplemented

    def __hash__(self) -> int:
        if self.is_rational():
            return hash(self.a)
        return hash((self.p, self.q) + self.coeffs)

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def __float__(self) -> float:
        sp = math.sqrt(self.p)
        sq = math.sqrt(self.q)
        return float(self.a) + float(self.b) * sp + float(self.c) * sq + float(self.d) * sp * sq

    def __complex__(self) -> complex:
        return complex(float(self))

    def conjugate_p(self) -> QuadExt:
        """Image under sp -> -sp."""
        return QuadExt(self.p, self.q, self.a, -self.b, self.c, -self.d)

    def conjugate_q(self) -> QuadExt:
        """Image under sq -> -sq."""
        return QuadExt(self.p, self.q, self.a, self.b, -self.c, -self.d)

    def __repr__(self) -> str:
        return f"QuadExt(p={self.p}, q={self.q}, {format_scalar(self)})"

    __str__ = lambda self: format_scalar(self)  # noqa: E731


Scalar = Union[Fraction, QuadExt, float]


def quad_mul(x: QuadExt, y: QuadExt) -> QuadExt:
    if x.tag != y.tag:
        raise IncompatibleRingError(f"ring tags differ: {x.tag} vs {y.tag}")
    p, q = x.p, x.q
    a1, b1, c1, d1 = x.coeffs
    a2, b2, c2, d2 = y.coeffs
    a = a1 * a2 + p * b1 * b2 + q * c1 * c2 + p * q * d1 * d2
    b = a1 * b2 + b1 * a2 + q * (c1 * d2 + d1 * c2)
    c = a1 * c2 + c1 * a2 + p * (b1 * d2 + d1 * b2)
    d = a1 * d2 + d1 * a2 + b1 * c2 + c1 * b2
    return QuadExt(p, q, a, b, c, d)


def quad_inv(x: QuadExt) -> QuadExt:
    # x * conj_p(x) * conj_q(x) * conj_pq(x) is fixed by both sign flips, so
    # it is rational whenever the flips are genuine automorphisms.
    xp = x.conjugate_p()
    xq = x.conjugate_q()
    xpq = xp.conjugate_q()
    rest = quad_mul(quad_mul(xp, xq), xpq)
    norm = quad_mul(x, rest)
    if not norm.is_rational() or norm.a == 0:
        raise NotInvertibleError(f"{format_scalar(x)} is not invertible in Q[sqrt {x.p}, sqrt {x.q}]")
    return rest / norm.a


def to_float(x) -> float:
    return float(x)


def to_complex(x) -> complex:
    return complex(x) if not isinstance(x, QuadExt) else complex(float(x))


def is_zero(x) -> bool:
    return not x


# -- serialization ---------------------------------------------------------


def _frac_json(f: Fraction) -> list[str]:
    return [str(f.numerator), str(f.denominator)]


def _frac_from_json(v) -> Fraction:
    if isinstance(v, list):
        return Fraction(int(v[0]), int(v[1]))
    return Fraction(str(v))


def scalar_to_json(x) -> dict:
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (int, Fraction)):
        return {"kind": "rat", "value": _frac_json(Fraction(x))}
    if isinstance(x, QuadExt):
        return {
            "kind": "quad",
            "p": str(x.p),
            "q": str(x.q),
            "coeffs": [_frac_json(c) for c in x.coeffs],
        }
    if isinstance(x, float):
        return {"kind": "f64", "value": repr(x)}
    raise TypeError(f"not a scalar: {type(x).__name__}")


def scalar_from_json(obj):
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Fraction(obj) if isinstance(obj, int) else float(obj)
    if isinstance(obj, str):
        return parse_scalar(obj)
    kind = obj["kind"]
    if kind == "rat":
        return _frac_from_json(obj["value"])
    if kind == "quad":
        return QuadExt(int(obj["p"]), int(obj["q"]), *(_frac_from_json(c) for c in obj["coeffs"]))
    if kind == "f64":
        return float(obj["value"])
    raise ValueError(f"unknown scalar kind {kind!r}")


# -- human readable form: a+b√p+c√q+d√pq ----------------------------------


def format_scalar(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (int, Fraction)):
        return str(Fraction(x))
    names = ("", "√p", "√q", "√pq")
    parts = []
    for coef, name in zip(x.coeffs, names):
        if coef == 0 and name:
            continue
        parts.append(f"{coef}{name}")
    text = "+".join(parts)
    return text.replace("+-", "-") + f" [p={x.p},q={x.q}]"


def parse_scalar(text: str, p: int | None = None, q: int | None = None):
    """Parse ``"a+b√p+c√q+d√pq"`` (components as ``num/den``) or a plain number.

    Without a (p, q) pair a rational is returned when possible, else a float.
    """
    s = text.strip().replace(" ", "")
    if "[" in s:
        s, tag = s.split("[", 1)
        fields = dict(kv.split("=") for kv in tag.rstrip("]").split(","))
        p, q = int(fields["p"]), int(fields["q"])
    if "√" not in s:
        try:
            return Fraction(s)
        except ValueError:
            return float(s)
    if p is None or q is None:
        raise ValueError("radical form needs p and q")
    coeffs = {"": Fraction(0), "√p": Fraction(0), "√q": Fraction(0), "√pq": Fraction(0)}
    # split on signs that start a new term
    terms, cur = [], ""
    for i, ch in enumerate(s):
        if ch in "+-" and i > 0 and s[i - 1] not in "/eE":
            terms.append(cur)
            cur = ch
        else:
            cur += ch
    terms.append(cur)
    for term in terms:
        if not term:
            continue
        if "√" in term:
            num, rad = term.split("√", 1)
            key = "√" + rad
            if key not in coeffs:
                raise ValueError(f"unknown radical {key!r}")
            num = {"": "1", "+": "1", "-": "-1"}.get(num, num)
            coeffs[key] += Fraction(num)
        else:
            coeffs[""] += Fraction(term)
    return QuadExt(p, q, coeffs[""], coeffs["√p"], coeffs["√q"], coeffs["√pq"])


def sqrt_in_ring(n: int, p: int, q: int):
    """Exact square root of n as an element tagged (p, q).

    Perfect squares come back as Fractions; otherwise n must be p, q or pq.
    """
    r = math.isqrt(n)
    if r * r == n:
        return Fraction(r)
    if n == p:
        return QuadExt.sqrt_p(p, q)
    if n == q:
        return QuadExt.sqrt_q(p, q)
    if n == p * q:
        return QuadExt.sqrt_pq(p, q)
    raise ValueError(f"sqrt({n}) is not in Q[sqrt {p}, sqrt {q}]")


def sqrt_pq_unit(p: int, q: int):
    """sqrt(pq) in the sqrt(pq) slot of Q[sqrt p, sqrt q]; rational for perfect squares."""
    r = math.isqrt(p * q)
    if r * r == p * q:
        return Fraction(r)
    return QuadExt.sqrt_pq(p, q)
