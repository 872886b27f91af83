"""Generalized Chebyshev polynomials Ch_t^h and their orthogonality measures.

Ch_t^h is defined by  Ch_t^h((x + 1/x)/2) * (x - 1/x) = h(x) x^t - h(1/x) x^(-t).
Polynomials in z are stored as ``LaurentPoly`` with nonnegative support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .exactnum import Scalar, sqrt_pq_unit, to_float
from .laurent import LaurentPoly, divide_by_x_minus_xinv, w0

__all__ = [
    "ChebFamily",
    "SpectralMeasure",
    "ZMeasure",
    "UnsupportedMeasureError",
    "cheb",
    "cheb_recurrence_step",
    "special_family",
    "ortho_measure",
    "pushforward_to_z",
    "quad_inner",
    "quad_inner_z",
    "sym_to_z",
    "z_to_x",
    "zpoly_eval",
    "closed_form_density",
    "Z_HALF",
    "residue_value",
]

Z_HALF = LaurentPoly({1: Fraction(1, 2), -1: Fraction(1, 2)})


class UnsupportedMeasureError(ValueError):
    """h has roots on the unit circle (other than +-1) or falls outside both cases."""


# -- z <-> x conversion -------------------------------------------------------


def sym_to_z(s: LaurentPoly) -> LaurentPoly:
    """Write a symmetric Laurent polynomial in x as a polynomial in z = (x + 1/x)/2."""
    rem = s
    out: dict[int, Scalar] = {}
    while not rem.is_zero():
        d = rem.max_deg()
        if d < 0:
            raise ValueError("not symmetric")
        c = rem[d] * 2**d
        out[d] = c
        rem = rem - (Z_HALF**d) * c
    return LaurentPoly(out)


def z_to_x(p: LaurentPoly) -> LaurentPoly:
    """Substitute z = (x + 1/x)/2."""
    out = LaurentPoly()
    power = LaurentPoly({0: 1})
    for k in range(0, (p.max_deg() + 1) if not p.is_zero() else 0):
        if p[k]:
            out = out + power * p[k]
        power = power * Z_HALF
    return out


def zpoly_eval(p: LaurentPoly, z):
    """Horner evaluation at float/complex/array z."""
    if p.is_zero():
        return np.zeros_like(np.asarray(z, dtype=float))
    acc = 0.0
    for k in range(p.max_deg(), -1, -1):
        c = p[k]
        acc = acc * z + (to_float(c) if not isinstance(c, complex) else c)
    return acc


# -- families -------------------------------------------------------------------


def cheb(h: LaurentPoly, t: int) -> LaurentPoly:
    """Ch_t^h as a polynomial in z."""
    num = h.shift(t) - w0(h).shift(-t)
    return sym_to_z(divide_by_x_minus_xinv(num))


def cheb_recurrence_step(a_t: LaurentPoly, a_prev: LaurentPoly) -> LaurentPoly:
    """A_{t+1} = 2 z A_t - A_{t-1}."""
    return a_t.shift(1) * 2 - a_prev


@dataclass
class ChebFamily:
    """Family Ch_t^h together with a factorization h = lead * x^top * prod(1 - r x^-1).

    The factorization (numerical roots) is what the measure construction reads;
    the exact Laurent polynomial h is what the polynomials are built from.
    """

    name: str
    h: LaurentPoly
    top: int
    roots: tuple[complex, ...]
    lead: float = 1.0
    params: dict = field(default_factory=dict)
    _cache: dict[int, LaurentPoly] = field(default_factory=dict, repr=False)

    def __call__(self, t: int) -> LaurentPoly:
        if t not in self._cache:
            self._cache[t] = cheb(self.h, t)
        return self._cache[t]

    def eval(self, t: int, z):
        return zpoly_eval(self(t), z)

    def h_eval(self, xi):
        """h at complex xi (vectorized)."""
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros_like(xi)
        for k, c in self.h.items():
            out = out + complex(to_float(c)) * xi**k
        return out


def special_family(name: str, q=None, p=None, binv=None) -> ChebFamily:
    """T, U, V, W, F(q), MP(binv), H(p, q), R(p, q)."""
    key = name.upper()
    half = Fraction(1, 2)
    if key == "T":
        h = LaurentPoly({1: half, -1: -half})
        return ChebFamily("T", h, 1, (1.0, -1.0), 0.5)
    if key == "U":
        return ChebFamily("U", LaurentPoly({0: 1}), 0, ())
    if key == "V":
        return ChebFamily("V", LaurentPoly({1: 1, 0: -1}), 1, (1.0,))
    if key == "W":
        return ChebFamily("W", LaurentPoly({1: 1, 0: 1}), 1, (-1.0,))
    if key == "F":
        if q is None or q <= 0:
            raise ValueError("F needs q > 0")
        qf = Fraction(q)
        h = LaurentPoly({1: 1, -1: -1 / qf})
        s = 1 / math.sqrt(q)
        return ChebFamily("F", h, 1, (s, -s), params={"q": q})
    if key == "MP":
        if binv is None or binv <= 0:
            raise ValueError("MP needs binv > 0")
        bi = Fraction(binv)
        h = LaurentPoly({1: 1, 0: bi})
        return ChebFamily("MP", h, 1, (-float(bi),), params={"binv": binv})
    if key in ("H", "R"):
        if p is None or q is None or p <= 0 or q <= 0:
            raise ValueError(f"{key} needs p, q > 0")
        s = sqrt_pq_unit(p, q)
        binv_e = s / q  # sqrt(p/q)
        binv_f = math.sqrt(p / q)
        if key == "R":
            h = LaurentPoly({1: 1, 0: binv_e})
            return ChebFamily("R", h, 1, (-binv_f,), params={"p": p, "q": q})
        ainv_e = s / (p * q)  # 1/sqrt(pq)
        ainv_f = 1 / math.sqrt(p * q)
        # (1 - a^-1 x^-1)(1 + b^-1 x^-1) x = x + (b^-1 - a^-1) - a^-1 b^-1 x^-1
        h = LaurentPoly({1: 1, 0: binv_e - ainv_e, -1: -(ainv_e * binv_e)})
        return ChebFamily("H", h, 1, (ainv_f, -binv_f), params={"p": p, "q": q})
    raise ValueError(f"unknown family {name!r}")


# -- measures ---------------------------------------------------------------------


@dataclass
class SpectralMeasure:
    """Density on the unit circle (in theta, arclength of total mass 2 pi) plus atoms.

    Atoms are (xi, mass) with xi a point of C^x off the circle.
    """

    family: ChebFamily
    tag: str
    atoms: list[tuple[complex, float]]
    scale: float = 1.0

    def density_theta(self, theta):
        xi = np.exp(1j * np.asarray(theta, dtype=float))
        num = (xi - 1 / xi) * (1 / xi - xi)
        den = self.family.h_eval(xi) * self.family.h_eval(1 / xi)
        return self.scale * (num / den).real

    def scaled(self, factor: float) -> SpectralMeasure:
        return SpectralMeasure(
            self.family, self.tag, [(xi, m * factor) for xi, m in self.atoms], self.scale * factor
        )

    def total_mass(self, nodes: int = 4096) -> float:
        theta = _nodes(nodes)
        ac = float(np.sum(self.density_theta(theta)) * 2 * math.pi / nodes)
        return ac + sum(m for _, m in self.atoms)


@dataclass
class ZMeasure:
    """Measure on the real z-line: density on [-1, 1] plus atoms (z, mass).

    The density uses the one-sheet substitution d theta = dz / sqrt(1 - z^2), so it
    is half of the full image of the circle measure; atom masses are halved to match.
    """

    density: Callable
    atoms: list[tuple[float, float]]
    tag: str


def _roots_classify(fam: ChebFamily):
    for r in fam.roots:
        if abs(abs(r) - 1) < 1e-12 and abs(r - 1) > 1e-12 and abs(r + 1) > 1e-12:
            raise UnsupportedMeasureError(f"root {r} of h lies on the unit circle")
    outside = [r for r in fam.roots if abs(r) > 1 + 1e-12]
    return outside


def ortho_measure(fam: ChebFamily) -> SpectralMeasure:
    """Orthogonality measure for Ch_k^h, k >= 0, read off the factorization of h."""
    outside = _roots_classify(fam)
    k = len(fam.roots)
    if not outside:
        if 2 * fam.top - k < 0:
            raise UnsupportedMeasureError("h(x)/h(1/x) has a pole at 0")
        return SpectralMeasure(fam, _tag(fam), [])
    # second case: h = (1 - a^-1 x^-1)(1 + b^-1 x^-1) x with b^-1 > 1 and 0 <= a^-1 < 1
    if len(outside) != 1 or fam.top != 1 or k > 2:
        raise UnsupportedMeasureError("h is outside both supported cases")
    r_out = complex(outside[0])
    if r_out.imag != 0 or r_out.real > 0:
        raise UnsupportedMeasureError("outer root must be negative real")
    binv = -r_out.real
    others = [complex(r) for r in fam.roots if abs(complex(r) - r_out) > 1e-15]
    ainv = others[0].real if others else 0.0
    if not (0 <= ainv < 1):
        raise UnsupportedMeasureError("inner root must lie in [0, 1)")
    b = 1 / binv
    mass = 4 * math.pi * (1 - b * b) / ((1 + ainv * binv) * (1 + ainv * b))
    return SpectralMeasure(fam, _tag(fam), [(complex(-b), mass)])


def _tag(fam: ChebFamily) -> str:
    return {
        "T": "arcsine",
        "U": "semicircle",
        "V": "third-kind",
        "W": "fourth-kind",
        "F": "kesten-mckay",
        "MP": "marchenko-pastur",
        "R": "marchenko-pastur",
        "H": "biregular",
    }.get(fam.name, "generic")


def closed_form_density(tag: str, z, **params):
    """Closed-form z-densities (one-sheet convention) for the named laws."""
    z = np.asarray(z, dtype=float)
    s = np.sqrt(1 - z * z)
    if tag == "arcsine":
        return 4 / s
    if tag == "semicircle":
        return 4 * s
    if tag == "third-kind":
        return 2 * np.sqrt(1 + z) / np.sqrt(1 - z)
    if tag == "fourth-kind":
        return 2 * np.sqrt(1 - z) / np.sqrt(1 + z)
    if tag == "kesten-mckay":
        q = params["q"]
        return 4 * q * q * s / ((q + 1) ** 2 - 4 * q * z * z)
    if tag == "marchenko-pastur":
        binv = params["binv"]
        return 4 * s / ((1 + binv**2) + 2 * binv * z)
    if tag == "biregular":
        p, q = params["p"], params["q"]
        r = math.sqrt(p / q)
        a = 1 / math.sqrt(p * q)
        return 4 * s / (((1 + p / q) + 2 * r * z) * ((1 + 1 / (p * q)) - 2 * a * z))
    raise ValueError(f"no closed form for {tag!r}")


def pushforward_to_z(mu: SpectralMeasure) -> ZMeasure:
    """Image under xi -> (xi + 1/xi)/2 on one sheet of the double cover."""

    def density(z):
        z = np.asarray(z, dtype=float)
        theta = np.arccos(np.clip(z, -1, 1))
        return mu.density_theta(theta) / np.sqrt(1 - z * z)

    atoms = [(((xi + 1 / xi) / 2).real, m / 2) for xi, m in mu.atoms]
    return ZMeasure(density, atoms, mu.tag)


def _nodes(n: int) -> np.ndarray:
    # midpoint offset keeps nodes away from theta = 0, pi where z = +-1
    return 2 * math.pi * (np.arange(n) + 0.5) / n


def quad_inner(f: LaurentPoly, g: LaurentPoly, mu: SpectralMeasure, nodes: int = 4096, atoms: bool = True) -> float:
    """Periodic trapezoid rule for int f(z) g(z) d mu over the circle, plus atoms."""
    if nodes < 64:
        raise ValueError("need at least 64 nodes")
    theta = _nodes(nodes)
    z = np.cos(theta)
    vals = zpoly_eval(f, z) * zpoly_eval(g, z) * mu.density_theta(theta)
    total = float(np.sum(vals) * 2 * math.pi / nodes)
    if atoms:
        for xi, m in mu.atoms:
            za = ((xi + 1 / xi) / 2).real
            total += m * float(zpoly_eval(f, za) * zpoly_eval(g, za))
    return total


def quad_inner_z(f: LaurentPoly, g: LaurentPoly, nu: ZMeasure, nodes: int = 4096) -> float:
    """Same inner product computed on the z-line (z = cos theta, theta in (0, pi))."""
    theta = math.pi * (np.arange(nodes) + 0.5) / nodes
    z = np.cos(theta)
    # dz = sin(theta) d theta removes the endpoint singularities
    vals = zpoly_eval(f, z) * zpoly_eval(g, z) * nu.density(z) * np.sin(theta)
    total = float(np.sum(vals) * math.pi / nodes)
    for za, m in nu.atoms:
        total += m * float(zpoly_eval(f, za) * zpoly_eval(g, za))
    return total


def residue_value(ainv: float, binv: float, n: int, k: int) -> float:
    """Absolutely continuous part of <f_k, f_n> in the second case (n != k).

    Equals minus the atom's share: f_k(-b) = (1 + a^-1 b^-1)(-b)^k.
    """
    b = 1 / binv
    return -4 * math.pi * (1 + ainv * binv) * (1 - b * b) * (-b) ** (n + k) / (1 + ainv * b)
