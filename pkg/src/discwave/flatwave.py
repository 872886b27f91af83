"""The discrete wave equation u(n+1,t) + u(n-1,t) = u(n,t+1) + u(n,t-1) on Z.

Functions on Z with finite support are stored as Laurent polynomials
(the value at n is the coefficient of x^n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Iterable

import numpy as np

from .exactnum import Scalar
from .laurent import (
    STANDARD_BASIS,
    X,
    BasisPair,
    LaurentPoly,
    SymLaurentPoly,
    pairing,
)

__all__ = [
    "ZFunction",
    "WaveGrid",
    "TailedSeq",
    "DegenerateParameterError",
    "solve",
    "fundamental_solution",
    "propagator_matrix",
    "matrix_mul",
    "matrix_power",
    "apply_matrix",
    "dalembert_decompose",
    "energy",
    "energy_lr",
    "spectral_solve",
    "spectral_eval",
    "wave_residual",
    "abs2",
]

ZFunction = LaurentPoly


class DegenerateParameterError(ValueError):
    """Raised at xi = +-1 where the two spectral modes coincide."""


def abs2(v: Scalar) -> Scalar:
    """|v|^2; exact for real exact scalars."""
    if isinstance(v, complex):
        return v.real * v.real + v.imag * v.imag
    return v * v


def _sum(values: Iterable[Scalar]) -> Scalar:
    total: Scalar = Fraction(0)
    for v in values:
        total = total + v
    return total


def _sum_sq(values: list) -> Scalar:
    """sum |v|^2, with rationals summed over a common denominator."""
    if values and all(type(v) is Fraction for v in values):
        den = math.lcm(*(v.denominator for v in values))
        return Fraction(sum((v.numerator * (den // v.denominator)) ** 2 for v in values), den * den)
    return _sum(abs2(v) for v in values)


@lru_cache(maxsize=8192)
def _pairing_power(m: LaurentPoly, t: int) -> SymLaurentPoly:
    # shared across grids: every solve with the same dual basis needs the same (m, x^t)
    return pairing(m, X.shift(t - 1))


@dataclass
class WaveGrid:
    """Space-time samples u(., t) of the solution with given initial data.

    Slices are produced lazily from the closed-form solution, so any time
    (including t = 0 and neighbours needed for the initial functionals) can
    be queried even when it lies outside ``t_range``.
    """

    basis: BasisPair
    g1: LaurentPoly
    g2: LaurentPoly
    t_range: tuple[int, int]
    _slices: dict[int, LaurentPoly] = field(default_factory=dict, repr=False)

    def slice(self, t: int) -> LaurentPoly:
        if t not in self._slices:
            a1 = _pairing_power(self.basis.m1, t)
            a2 = _pairing_power(self.basis.m2, t)
            self._slices[t] = self.g1 * a1 + self.g2 * a2
        return self._slices[t]

    def __getitem__(self, key: tuple[int, int]) -> Scalar:
        n, t = key
        return self.slice(t)[n]

    @property
    def times(self) -> range:
        return range(self.t_range[0], self.t_range[1] + 1)

    def initial_functional(self, h: LaurentPoly, t: int = 0) -> LaurentPoly:
        """sum_i c_i u(., t + i) for h = sum_i c_i x^i."""
        out = LaurentPoly()
        for i, c in h.items():
            out = out + self.slice(t + i) * c
        return out

    def support_radius(self, t: int) -> int:
        s = self.slice(t)
        return max((abs(n) for n in s.support()), default=-1)

    def rows(self) -> list[tuple[int, int, Scalar]]:
        """(n, t, value) over the requested time range and the union of supports."""
        out = []
        for t in self.times:
            s = self.slice(t)
            for n, v in s.items():
                out.append((n, t, v))
        return out


def solve(basis: BasisPair, g1: ZFunction, g2: ZFunction, t_range: tuple[int, int]) -> WaveGrid:
    """u(n, t) = [x^n](g1 * (m1, x^t) + g2 * (m2, x^t))."""
    t0, t1 = t_range
    if t0 > t1:
        raise ValueError("empty time range")
    grid = WaveGrid(basis, g1, g2, (t0, t1))
    for t in range(min(t0, -1), max(t1, 1) + 1):
        grid.slice(t)
    return grid


def fundamental_solution(m: LaurentPoly, n: int, t: int) -> Scalar:
    return pairing(m, X.shift(t - 1))[n]


def wave_residual(grid: WaveGrid, n: int, t: int) -> Scalar:
    return grid[n + 1, t] + grid[n - 1, t] - grid[n, t + 1] - grid[n, t - 1]


# -- propagator -------------------------------------------------------------

Matrix = tuple[tuple[LaurentPoly, LaurentPoly], tuple[LaurentPoly, LaurentPoly]]


def propagator_matrix(basis: BasisPair) -> Matrix:
    """Entry (i, j) is (m_j h_i, x); advances the h-initial functionals by one step."""
    hs = (basis.h1, basis.h2)
    ms = (basis.m1, basis.m2)
    return tuple(tuple(pairing(ms[j] * hs[i], X) for j in range(2)) for i in range(2))  # type: ignore[return-value]


def matrix_mul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(
        tuple(a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2)) for i in range(2)
    )  # type: ignore[return-value]


def matrix_power(a: Matrix, t: int) -> Matrix:
    if t < 0:
        raise ValueError("only nonnegative powers")
    one = LaurentPoly({0: 1})
    result: Matrix = ((one, LaurentPoly()), (LaurentPoly(), one))
    for _ in range(t):
        result = matrix_mul(a, result)
    return result


def apply_matrix(a: Matrix, v: tuple[LaurentPoly, LaurentPoly]) -> tuple[LaurentPoly, LaurentPoly]:
    return (a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1])


# -- d'Alembert decomposition -------------------------------------------------


@dataclass(frozen=True)
class TailedSeq:
    """A function on Z equal to ``core`` on |k| <= radius and constant per parity beyond.

    ``right[k % 2]`` is the value for k > radius, ``left[k % 2]`` for k < -radius.
    """

    radius: int
    core: dict[int, Scalar]
    right: tuple[Scalar, Scalar]
    left: tuple[Scalar, Scalar]

    def __call__(self, k: int) -> Scalar:
        if k > self.radius:
            return self.right[k % 2]
        if k < -self.radius:
            return self.left[k % 2]
        return self.core.get(k, Fraction(0))

    def __add__(self, other: TailedSeq) -> TailedSeq:
        r = max(self.radius, other.radius)
        core = {k: self(k) + other(k) for k in range(-r, r + 1)}
        return TailedSeq(
            r,
            core,
            (self.right[0] + other.right[0], self.right[1] + other.right[1]),
            (self.left[0] + other.left[0], self.left[1] + other.left[1]),
        )

    def shifted(self, even: Scalar, odd: Scalar) -> TailedSeq:
        """Add ``even`` on 2Z and ``odd`` on 1 + 2Z."""
        add = (even, odd)
        core = {k: self(k) + add[k % 2] for k in range(-self.radius, self.radius + 1)}
        return TailedSeq(
            self.radius,
            core,
            (self.right[0] + even, self.right[1] + odd),
            (self.left[0] + even, self.left[1] + odd),
        )

    def derivative(self) -> dict[int, Scalar]:
        """w'(n) = (w(n+1) - w(n-1))/2, finitely supported."""
        out = {}
        for n in range(-self.radius - 1, self.radius + 2):
            v = (self(n + 1) - self(n - 1)) / 2
            if v:
                out[n] = v
        return out


def _sgn(k: int) -> int:
    return (k > 0) - (k < 0)


def _wg(g: LaurentPoly, k: int) -> Scalar:
    """Right-moving part of the g-contribution (sign flipped for the left part)."""
    s = _sgn(k)
    if s == 0:
        return Fraction(0)
    if k % 2:
        acc = g[0] / 2
        for ell in range(2, abs(k), 2):
            acc = acc + g[s * ell]
    else:
        acc = Fraction(0)
        for ell in range(1, abs(k), 2):
            acc = acc + g[s * ell]
    return -s * acc


def dalembert_decompose(grid: WaveGrid) -> tuple[TailedSeq, TailedSeq]:
    """Split a standard-basis solution as u(n, t) = w_inf(n - t) + w_minf(n + t)."""
    if grid.basis.h1 != STANDARD_BASIS.h1 or grid.basis.h2 != STANDARD_BASIS.h2:
        raise ValueError("d'Alembert decomposition needs the standard basis")
    f, g = grid.g1, grid.g2
    supp = [abs(k) for k in f.support() + g.support()]
    r = max(supp, default=0) + 2
    half_f = {k: v / 2 for k, v in f.items()}
    core_p = {}
    core_m = {}
    for k in range(-r, r + 1):
        w = _wg(g, k)
        core_p[k] = half_f.get(k, Fraction(0)) + w
        core_m[k] = half_f.get(k, Fraction(0)) - w
    # beyond r the cumulative sums no longer change within a parity class
    right_p = _by_parity(g, r + 1, 1)
    left_p = _by_parity(g, -(r + 1), -1)
    w_inf = TailedSeq(r, core_p, right_p, left_p)
    w_minf = TailedSeq(r, core_m, tuple(-v for v in right_p), tuple(-v for v in left_p))
    return w_inf, w_minf


def _by_parity(g: LaurentPoly, start: int, step: int) -> tuple[Scalar, Scalar]:
    vals: dict[int, Scalar] = {}
    k = start
    while len(vals) < 2:
        vals.setdefault(k % 2, _wg(g, k))
        k += step
    return vals[0], vals[1]


# -- energy -------------------------------------------------------------------


def energy(grid: WaveGrid, t: int) -> Scalar:
    """||(u(n+1,t) - u(n-1,t))/2||^2 + ||(u(n,t+1) - u(n,t-1))/2||^2."""
    u, up, um = grid.slice(t), grid.slice(t + 1), grid.slice(t - 1)
    coeffs = [v for f in (u, up, um) for _, v in f.items()]
    if coeffs and all(type(v) is Fraction for v in coeffs):
        # integer differences over one common denominator
        den = math.lcm(*(v.denominator for v in coeffs))
        ui, pi, mi = ({k: v.numerator * (den // v.denominator) for k, v in f.items()} for f in (u, up, um))
        sx = sum((ui.get(n + 1, 0) - ui.get(n - 1, 0)) ** 2 for n in set().union(*({k - 1, k + 1} for k in ui)))
        st = sum((pi.get(n, 0) - mi.get(n, 0)) ** 2 for n in set(pi) | set(mi))
        return Fraction(sx + st, 4 * den * den)
    dx = u.shift(-1) - u.shift(1)
    dt = up - um
    return _sum_sq([v for _, v in dx.items()] + [v for _, v in dt.items()]) / 4


def energy_lr(w_inf: TailedSeq, w_minf: TailedSeq) -> Scalar:
    """Energy from the two travelling components: 2(||w_inf'||^2 + ||w_minf'||^2).

    Pointwise, the space and time differences are w_inf' + w_minf' and
    w_minf' - w_inf', so cross terms cancel and each component counts twice.
    """
    total = _sum(abs2(v) for v in w_inf.derivative().values())
    total = total + _sum(abs2(v) for v in w_minf.derivative().values())
    return 2 * total


# -- spectral solutions ---------------------------------------------------------


def spectral_solve(a, b, xi):
    """Solve g_inf + g_minf = a, xi g_inf + g_minf / xi = b for each sample xi."""
    xi_arr = np.asarray(xi, dtype=complex)
    if np.any(np.isclose(xi_arr, 1.0, rtol=0, atol=1e-14)) or np.any(np.isclose(xi_arr, -1.0, rtol=0, atol=1e-14)):
        raise DegenerateParameterError("xi = +-1: the two modes coincide")
    a_arr = np.asarray(a, dtype=complex)
    b_arr = np.asarray(b, dtype=complex)
    det = 1 / xi_arr - xi_arr
    g_inf = (a_arr / xi_arr - b_arr) / det
    g_minf = (b_arr - a_arr * xi_arr) / det
    if np.ndim(g_inf) == 0:
        return complex(g_inf), complex(g_minf)
    return g_inf, g_minf


def spectral_eval(g_inf, g_minf, xi, t: int):
    xi_arr = np.asarray(xi, dtype=complex)
    return g_inf * xi_arr**t + g_minf * xi_arr ** (-t)
