"""The (p+1, q+1)-biregular tree: B_q, Satake transform, kernels, energy and scattering.

Functions live on the degree-(q+1) vertices T_q, i.e. the even-depth
vertices of a ball rooted at o_q.  The ball itself is a ``TreeBall`` with
``p`` set, so the wave solver and boundary grids of ``regtree`` apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .chebyshev import SpectralMeasure, ortho_measure, special_family, zpoly_eval
from .exactnum import QuadExt, Scalar
from .laurent import LaurentPoly
from .regtree import (
    BoundaryError,
    BoundaryGrid,
    RootVec,
    TreeBall,
    _ratify,
    _scale,
    _support_mask,
    T_plus,
    sqrt_pq_unit,
    tplus_norm_sq,
    tree_energy,
    wave_solve_tree,
)

__all__ = [
    "BiRadialFn",
    "BiRadialTree",
    "bitree_ball",
    "sqrt_pq",
    "bq_apply",
    "satake_bi",
    "radial_convolve_bi",
    "c_function_bi",
    "spherical_bi",
    "spherical_bi_z",
    "kernel_closed_form_bi",
    "wave_solve_bi",
    "bi_energy",
    "plancherel_bi",
    "bi_grid",
    "T_plus_bi",
    "T_minus_bi",
    "resonances_bi",
]


def sqrt_pq(p: int, q: int):
    return sqrt_pq_unit(p, q)


def _pow(p: int, q: int, k: int):
    """sqrt(pq)^k, exact."""
    s = sqrt_pq(p, q)
    return _ratify(s**k)


def bitree_ball(p: int, q: int, radius: int) -> TreeBall:
    return TreeBall(q, radius, p)


@dataclass
class BiRadialFn:
    """Radial function on T_q, keyed by the (even) distance to o_q."""

    values: dict[int, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        if any(r % 2 for r, v in self.values.items() if v):
            raise ValueError("radial functions on T_q live on even radii")

    def radius(self) -> int:
        return max((r for r, v in self.values.items() if v), default=-1)

    def __getitem__(self, r: int) -> Scalar:
        return self.values.get(r, Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BiRadialFn):
            return NotImplemented
        keys = set(self.values) | set(other.values)
        return all(self[k] == other[k] for k in keys)


class BiRadialTree:
    """Radial functions on the biregular ball as arrays over radii 0..R."""

    step = 2

    def __init__(self, p: int, q: int, radius: int):
        self.p = p
        self.q = q
        self.radius = radius
        self.size = radius + 1
        self._kids = np.array([q + 1] + [p if r % 2 else q for r in range(1, radius + 1)], dtype=object)

    def unit(self):
        return sqrt_pq(self.p, self.q)

    def zeros(self, exact: bool = True, dtype=float):
        if exact:
            return RootVec.zeros(self.p * self.q, self.unit(), self.size)
        return np.zeros(self.size, dtype=dtype)

    def delta(self, exact: bool = True):
        f = self.zeros(exact)
        if exact:
            f.a[0] = Fraction(1)
        else:
            f[0] = 1.0
        return f

    def from_radial(self, fn: BiRadialFn, exact: bool = True):
        vals = [fn[r] for r in range(self.size)]
        if exact:
            return RootVec.from_values(self.p * self.q, self.unit(), vals)
        return np.array([float(v) for v in vals])

    def to_radial(self, f) -> BiRadialFn:
        vals = f.values() if isinstance(f, RootVec) else list(f)
        return BiRadialFn({r: v for r, v in enumerate(vals) if v})

    def support_radius(self, f) -> int:
        nz = np.flatnonzero(_support_mask(f))
        return int(nz.max()) if len(nz) else -1

    def _adj_raw(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros_like(f)
        if f.dtype == object:
            out[:] = 0
        if self.radius == 0:
            return out
        out[1:] = out[1:] + f[:-1]
        kids = self._kids[:-1] if f.dtype == object else self._kids[:-1].astype(float)
        out[:-1] = out[:-1] + kids * f[1:]
        return out

    def adjacency(self, f, strict: bool = True):
        if strict and self.support_radius(f) >= self.radius:
            raise BoundaryError("support touches the ball boundary")
        if isinstance(f, RootVec):
            return f.map_linear(self._adj_raw)
        return self._adj_raw(np.asarray(f))

    def wave_op(self, f, strict: bool = True):
        a2 = self.adjacency(self.adjacency(f, strict), strict)
        g = a2 - _scale(f, self.p + self.q)
        even = np.arange(self.size) % 2 == 0
        if isinstance(g, RootVec):
            g.a[~even] = 0
            g.b[~even] = 0
        else:
            g = np.where(even, g, 0)
        return _scale(g, 1 / (2 * self.unit()))


def bq_apply(space, f, strict: bool = True):
    """B_q = A_2^q / (2 sqrt pq) - (p - 1) / (2 sqrt pq), with A_2^q = A^2 - (q + 1) on T_q."""
    return space.wave_op(f, strict)


def satake_bi(f: BiRadialFn, p: int, q: int, omega: Sequence[int] | None = None) -> LaurentPoly:
    """[x^k] Sat(f) = sqrt(pq)^k * sum of f over the horocycle h_omega = 2k."""
    R = max(f.radius(), 0)
    ball = TreeBall(q, R, p)
    if omega is None:
        omega = (0,) * R
    h = ball.busemann_array(omega)
    sums: dict[int, Fraction] = {}
    for i in range(ball.size):
        v = f[int(ball.depth[i])]
        if v:
            k = int(h[i]) // 2
            sums[k] = sums.get(k, 0) + v
    return LaurentPoly({k: _ratify(_pow(p, q, k) * s) for k, s in sums.items()})


def radial_convolve_bi(f: BiRadialFn, g: BiRadialFn, p: int, q: int) -> BiRadialFn:
    """(f*g)(v) = sum over w in T_q of f(d(v, w)) g(d(o_q, w))."""
    rf, rg = max(f.radius(), 0), max(g.radius(), 0)
    ball = TreeBall(q, rg, p)
    ray = ball.lcp_array((0,) * rg)
    support = [i for i in range(ball.size) if g[int(ball.depth[i])]]
    out = {}
    for r in range(0, rf + rg + 1, 2):
        total = Fraction(0)
        for i in support:
            d = r + int(ball.depth[i]) - 2 * min(int(ray[i]), r)
            fv = f[d]
            if fv:
                total = total + fv * g[int(ball.depth[i])]
        if total:
            out[r] = _ratify(total)
    return BiRadialFn(out)


def c_function_bi(xi, p: int, q: int):
    xi = np.asarray(xi, dtype=complex)
    ainv = 1 / math.sqrt(p * q)
    binv = math.sqrt(p / q)
    return (1 - ainv / xi) * (1 + binv / xi) * xi / (xi - 1 / xi)


def spherical_bi(xi, two_t: int, p: int, q: int):
    """phi at distance 2t from o_q via the c-function; H_t form near xi = +-1."""
    if two_t % 2:
        raise ValueError("T_q vertices sit at even distance")
    t = abs(two_t) // 2
    xi_arr = np.asarray(xi, dtype=complex)
    near = np.isclose(xi_arr, 1, atol=1e-6) | np.isclose(xi_arr, -1, atol=1e-6)
    safe = np.where(near, 2.0, xi_arr)
    val = (safe**t * c_function_bi(safe, p, q) + safe ** (-t) * c_function_bi(1 / safe, p, q))
    val = val * math.sqrt(p * q) ** (-t) / (1 + 1 / q)
    if near.any():
        val = np.where(near, spherical_bi_z((xi_arr + 1 / xi_arr) / 2, two_t, p, q), val)
    return complex(val) if np.ndim(val) == 0 else val


def spherical_bi_z(z, two_t: int, p: int, q: int):
    """sqrt(pq)^(-t) H_t(z) / (1 + 1/q); exact for exact z."""
    t = abs(two_t) // 2
    ht = special_family("H", p=p, q=q)(t)
    if isinstance(z, (int, Fraction, QuadExt)) and not isinstance(z, bool):
        acc = Fraction(0)
        for k in range(ht.max_deg(), -1, -1):
            acc = acc * z + ht[k]
        return _ratify(acc * _pow(p, q, -t) / (1 + Fraction(1, q)))
    return zpoly_eval(ht, z) * math.sqrt(p * q) ** (-t) / (1 + 1 / q)


def kernel_closed_form_bi(family: str, t: int, p: int, q: int) -> BiRadialFn:
    """Radial profile of U_t, R_t or H_t of B_q applied to delta_{o_q}."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    s = sqrt_pq(p, q)
    ainv = _ratify(s / (p * q))
    binv = _ratify(s / q)
    a_pow = lambda k: _pow(p, q, k)  # noqa: E731
    fam = family.upper()
    out: dict[int, Scalar] = {}
    if fam == "U":
        for ell in range(t + 1):
            m = t - ell + 1
            out[2 * ell] = _ratify((ainv**m - (-binv) ** m) / (ainv + binv) * a_pow(-ell))
    elif fam == "R":
        for ell in range(t + 1):
            out[2 * ell] = a_pow(-t)
    elif fam == "H":
        # H_0 = 1 + 1/q, the constant term of the defining identity
        out[2 * t] = a_pow(-t) if t else 1 + Fraction(1, q)
    else:
        raise ValueError(f"unknown kernel family {family!r}")
    return BiRadialFn({r: _ratify(v) for r, v in out.items()})


def wave_solve_bi(space, basis, g1, g2, t_range):
    """Solve B_q u(t) = (u(t+1) + u(t-1))/2; the ball radius must cover support + 2|t|."""
    return wave_solve_tree(space, basis, g1, g2, t_range)


def bi_energy(series, t: int):
    """<(1 - B_q^2) u, u> + ||(u(t+1) - u(t-1))/2||^2."""
    return tree_energy(series, t)


def plancherel_bi(p: int, q: int) -> SpectralMeasure:
    """(1 + 1/q)/(4 pi) times the orthogonality measure of H_t; an atom appears when p > q."""
    return ortho_measure(special_family("H", p=p, q=q)).scaled((1 + 1 / q) / (4 * math.pi))


def bi_grid(p: int, q: int, depth: int, nodes: int = 2048) -> BoundaryGrid:
    return BoundaryGrid(q, depth, nodes, p=p)


def T_plus_bi(grid: BoundaryGrid, f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Hel(f1)(1/xi) c(1/xi)^-1 (xi - 1/xi)/2 - Hel(f2)(1/xi) c(1/xi)^-1 on the grid."""
    return T_plus(grid, f1, f2)


def T_minus_bi(grid: BoundaryGrid, f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Hel(f1)(xi) c(xi)^-1 (1/xi - xi)/2 + Hel(f2)(xi) c(xi)^-1 on the grid."""
    xi = grid.xi
    ci = grid.cinv(xi)[:, None]
    out = grid.hel(f1, xi) * ci * ((1 / xi - xi) / 2)[:, None]
    out += grid.hel(f2, xi) * ci
    return out


def isometry_defect(grid: BoundaryGrid, T: np.ndarray, energy: float) -> float:
    return abs(tplus_norm_sq(grid, T).real - energy)


def resonances_bi(p: int, q: int) -> tuple:
    """(1/sqrt(pq), -sqrt(p/q)), exact."""
    s = sqrt_pq(p, q)
    return (_ratify(s / (p * q)), _ratify(-s / q))
