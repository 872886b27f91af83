"""Laurent polynomials in x with the inversion action, the pairing and dual bases."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .exactnum import QuadExt, Scalar, scalar_from_json, scalar_to_json

__all__ = [
    "LaurentPoly",
    "SymLaurentPoly",
    "BasisPair",
    "NotAFreeBasisError",
    "X",
    "ONE",
    "mul",
    "w0",
    "pairing",
    "gram_det",
    "dual_basis",
    "decompose",
    "sym_antisym_split",
    "divide_by_x_minus_xinv",
    "STANDARD_BASIS",
]


class NotAFreeBasisError(ValueError):
    """The Gram determinant is zero or not a constant."""


def _float_tol(c) -> bool:
    return isinstance(c, float) and abs(c) < 1e-12


class LaurentPoly:
    """Finitely supported map degree -> scalar, read as sum c_k x^k."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[int, Scalar] | None = None):
        c = {}
        if coeffs:
            for k, v in coeffs.items():
                if isinstance(v, int) and not isinstance(v, bool):
                    v = Fraction(v)
                if v:
                    c[int(k)] = v
        self._c = c

    @classmethod
    def monomial(cls, k: int, coef: Scalar = 1) -> LaurentPoly:
        return cls({k: coef})

    @classmethod
    def const(cls, coef: Scalar) -> LaurentPoly:
        return cls({0: coef})

    @property
    def coeffs(self) -> dict[int, Scalar]:
        return dict(self._c)

    def __getitem__(self, k: int) -> Scalar:
        return self._c.get(k, Fraction(0))

    def items(self):
        return sorted(self._c.items())

    def support(self) -> list[int]:
        return sorted(self._c)

    def is_zero(self) -> bool:
        return not self._c

    def min_deg(self) -> int:
        return min(self._c)

    def max_deg(self) -> int:
        return max(self._c)

    def is_constant(self) -> bool:
        return set(self._c) <= {0}

    def is_symmetric(self) -> bool:
        return all(self[-k] == v for k, v in self._c.items())

    # arithmetic
    def __add__(self, other) -> LaurentPoly:
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out[k] + v if k in out else v
        return _clean(out)

    __radd__ = __add__

    def __neg__(self) -> LaurentPoly:
        return _clean({k: -v for k, v in self._c.items()})

    def __sub__(self, other) -> LaurentPoly:
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        out = dict(self._c)
        for k, v in other._c.items():
            out[k] = out[k] - v if k in out else -v
        return _clean(out)

    def __rsub__(self, other) -> LaurentPoly:
        return (-self) + other

    def __mul__(self, other) -> LaurentPoly:
        if isinstance(other, LaurentPoly):
            return mul(self, other)
        if isinstance(other, (int, Fraction, float, complex, QuadExt)):
            return LaurentPoly({k: v * other for k, v in self._c.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other) -> LaurentPoly:
        if isinstance(other, int):
            other = Fraction(other)
        return LaurentPoly({k: v / other for k, v in self._c.items()})

    def __pow__(self, n: int) -> LaurentPoly:
        if n < 0:
            if len(self._c) == 1:
                (k, v), = self._c.items()
                return LaurentPoly({k * n: (Fraction(1) / v) ** (-n) if not isinstance(v, float) else v ** n})
            raise ValueError("only monomials have Laurent inverses")
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> LaurentPoly:
        """Multiply by x^k."""
        return _clean({d + k: v for d, v in self._c.items()})

    def __eq__(self, other) -> bool:
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self._c == other._c

    def __hash__(self) -> int:
        return hash(frozenset(self._c.items()))

    def close_to(self, other: LaurentPoly, tol: float = 1e-9) -> bool:
        keys = set(self._c) | set(other._c)
        return all(abs(complex(self[k]) - complex(other[k])) <= tol for k in keys)

    def subs(self, xi) -> Scalar:
        """Evaluate at a scalar or complex point."""
        total = 0
        for k, v in self._c.items():
            total = total + v * xi ** k
        return total

    def __call__(self, xi: complex) -> complex:
        return complex(sum(complex(v) * xi ** k for k, v in self._c.items()))

    def map_coeffs(self, fn) -> LaurentPoly:
        return LaurentPoly({k: fn(v) for k, v in self._c.items()})

    def __repr__(self) -> str:
        if not self._c:
            return "LaurentPoly(0)"
        terms = " + ".join(f"({v})x^{k}" for k, v in self.items())
        return f"LaurentPoly({terms})"

    # serialization
    def to_json(self) -> dict:
        return {"coeffs": {str(k): scalar_to_json(v) for k, v in self.items()}}

    @classmethod
    def from_json(cls, obj) -> LaurentPoly:
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls({int(k): scalar_from_json(v) for k, v in obj["coeffs"].items()})


class SymLaurentPoly(LaurentPoly):
    """A Laurent polynomial fixed by x -> 1/x."""

    __slots__ = ()

    def __init__(self, coeffs: Mapping[int, Scalar] | LaurentPoly | None = None):
        if isinstance(coeffs, LaurentPoly):
            coeffs = coeffs.coeffs
        super().__init__(coeffs)
        if not self.is_symmetric():
            raise ValueError("polynomial is not invariant under x -> 1/x")


def _clean(coeffs: dict) -> LaurentPoly:
    """Wrap a dict of already-normalized scalars, dropping zeros."""
    out = LaurentPoly.__new__(LaurentPoly)
    out._c = {k: v for k, v in coeffs.items() if v}
    return out


def _as_poly(v) -> LaurentPoly | None:
    if isinstance(v, LaurentPoly):
        return v
    if isinstance(v, (int, Fraction, float, complex, QuadExt)) and not isinstance(v, bool):
        return LaurentPoly({0: v})
    return None


X = LaurentPoly({1: 1})
ONE = LaurentPoly({0: 1})


def _common_denominator(c: dict) -> int | None:
    den = 1
    for v in c.values():
        if type(v) is not Fraction:
            return None
        den = math.lcm(den, v.denominator)
    return den


def mul(f: LaurentPoly, g: LaurentPoly) -> LaurentPoly:
    df, dg = _common_denominator(f._c), _common_denominator(g._c)
    if df is not None and dg is not None:
        # rational fast path: integer convolution, one normalization per output degree
        fi = [(i, a.numerator * (df // a.denominator)) for i, a in f._c.items()]
        gi = [(j, b.numerator * (dg // b.denominator)) for j, b in g._c.items()]
        acc: dict[int, int] = {}
        for i, a in fi:
            for j, b in gi:
                acc[i + j] = acc.get(i + j, 0) + a * b
        den = df * dg
        return LaurentPoly({k: Fraction(v, den) for k, v in acc.items() if v})
    out: dict[int, Scalar] = {}
    for i, a in f._c.items():
        for j, b in g._c.items():
            k = i + j
            out[k] = out[k] + a * b if k in out else a * b
    return LaurentPoly(out)


def w0(f: LaurentPoly) -> LaurentPoly:
    return LaurentPoly({-k: v for k, v in f._c.items()})


def divide_by_x_minus_xinv(f: LaurentPoly) -> LaurentPoly:
    """Exact quotient of f by (x - 1/x); raises if there is a remainder."""
    if f.is_zero():
        return LaurentPoly()
    rem = dict(f._c)
    floor = f.min_deg() + 2
    quo: dict[int, Scalar] = {}
    while rem:
        top = max(rem)
        c = rem.pop(top)
        if _float_tol(c):
            continue
        if top < floor:
            raise ArithmeticError("division by x - 1/x left a remainder")
        quo[top - 1] = c
        k = top - 2
        rem[k] = rem[k] + c if k in rem else c
        if not rem[k]:
            del rem[k]
    return LaurentPoly(quo)


def pairing(f: LaurentPoly, g: LaurentPoly) -> SymLaurentPoly:
    """(f, g) = (fg - w0(fg)) / (x - 1/x)."""
    fg = f * g
    return _sym(divide_by_x_minus_xinv(fg - w0(fg)))


def _sym(f: LaurentPoly) -> SymLaurentPoly:
    if any(isinstance(v, float) for v in f._c.values()):
        # floating point coefficients: symmetrize away rounding noise
        return SymLaurentPoly((f + w0(f)) / 2)
    return SymLaurentPoly(f)


def gram_det(h1: LaurentPoly, h2: LaurentPoly) -> SymLaurentPoly:
    return _sym(pairing(h1, h1) * pairing(h2, h2) - pairing(h1, h2) * pairing(h1, h2))


def dual_basis(h1: LaurentPoly, h2: LaurentPoly) -> tuple[LaurentPoly, LaurentPoly]:
    """The unique m1, m2 with pairing(m_i, h_j) = delta_ij."""
    det = gram_det(h1, h2)
    if det.is_zero() or not det.is_constant():
        raise NotAFreeBasisError(f"Gram determinant {det!r} is not a nonzero constant")
    inv = Fraction(1) / det[0] if not isinstance(det[0], float) else 1.0 / det[0]
    g11, g12, g22 = pairing(h1, h1), pairing(h1, h2), pairing(h2, h2)
    m1 = (g22 * h1 - g12 * h2) * inv
    m2 = (g11 * h2 - g12 * h1) * inv
    return m1, m2


@dataclass(frozen=True)
class BasisPair:
    """A free basis (h1, h2) over the symmetric subring with its dual (m1, m2)."""

    h1: LaurentPoly
    h2: LaurentPoly
    m1: LaurentPoly
    m2: LaurentPoly

    @classmethod
    def of(cls, h1: LaurentPoly, h2: LaurentPoly) -> BasisPair:
        m1, m2 = dual_basis(h1, h2)
        return cls(h1, h2, m1, m2)


def decompose(c: LaurentPoly, basis: BasisPair) -> tuple[SymLaurentPoly, SymLaurentPoly]:
    """Coordinates (a1, a2) with c = a1*h1 + a2*h2."""
    return pairing(basis.m1, c), pairing(basis.m2, c)


def sym_antisym_split(f: LaurentPoly) -> tuple[SymLaurentPoly, SymLaurentPoly]:
    """f = s + a*(x - 1/x) with s, a symmetric."""
    wf = w0(f)
    return _sym((f + wf) / 2), _sym(divide_by_x_minus_xinv((f - wf) / 2))


_HALF = Fraction(1, 2)
STANDARD_BASIS = BasisPair.of(ONE, LaurentPoly({1: _HALF, -1: -_HALF}))


def from_terms(terms: Iterable[tuple[int, Scalar]]) -> LaurentPoly:
    out: dict[int, Scalar] = {}
    for k, v in terms:
        out[k] = out[k] + v if k in out else v
    return LaurentPoly(out)
