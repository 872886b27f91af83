"""Harmonic analysis and the wave equation on the (q+1)-regular tree.

Vertices of a ball of radius R are root-anchored non-backtracking words,
stored level by level in lexicographic order.  Vertex functions are numpy
arrays indexed by that order: float/complex arrays for numerical work, or a
``RootVec`` (a + b*sqrt(n) with rational arrays a, b) for exact work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .chebyshev import SpectralMeasure, ortho_measure, special_family, zpoly_eval
from .exactnum import QuadExt, Scalar, sqrt_in_ring, sqrt_pq_unit, to_float
from .laurent import BasisPair, LaurentPoly, STANDARD_BASIS

__all__ = [
    "TreeBall",
    "RadialFn",
    "RadialTree",
    "RootVec",
    "TreeWaveState",
    "TreeSeries",
    "BoundaryGrid",
    "BoundaryCylFn",
    "step_state",
    "KPlus",
    "BoundaryError",
    "BallTooSmallError",
    "InsufficientDepthError",
    "sqrt_q",
    "adjacency_apply",
    "busemann",
    "satake",
    "radial_convolve",
    "c_function",
    "spherical",
    "spherical_z",
    "plancherel_measure",
    "inverse_satake",
    "harmonic_measure",
    "wave_solve_tree",
    "wave_residual_tree",
    "cheb_operator_series",
    "kernel_closed_form",
    "energy_form",
    "tree_energy",
    "plane_wave",
    "helgason",
    "helgason_norm_sq",
    "T_plus",
    "tplus_norm_sq",
    "R_plus",
    "k_plus",
    "reconstruct",
    "scattering_multiplier",
    "resonances",
    "cylinder_average_predicate",
]


class BoundaryError(ValueError):
    """Support touches the ball boundary, so neighbour sums would be clipped."""


class BallTooSmallError(BoundaryError):
    pass


class InsufficientDepthError(ValueError):
    """Boundary word too short for the Busemann function to have stabilized."""


def sqrt_q(q: int):
    """sqrt(q) in Q(sqrt q), tagged (q, q); rational for perfect squares."""
    return sqrt_in_ring(q, q, q)


def _ratify(v):
    if isinstance(v, QuadExt) and v.is_rational():
        return v.a
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return v


# -- exact vertex functions ---------------------------------------------------------


class RootVec:
    """Exact vector a + b*sqrt(n) with rational object arrays a, b.

    ``unit`` is sqrt(n) as a package scalar and fixes how entries are exported.
    If sqrt(n) is rational, b stays identically zero.
    """

    __slots__ = ("n", "unit", "a", "b")

    def __init__(self, n: int, unit, a, b=None):
        self.n = n
        self.unit = unit
        self.a = a
        self.b = b if b is not None else _zeros_obj(len(a))

    @classmethod
    def zeros(cls, n: int, unit, size: int) -> RootVec:
        return cls(n, unit, _zeros_obj(size))

    @classmethod
    def from_values(cls, n: int, unit, values: Sequence) -> RootVec:
        a = _zeros_obj(len(values))
        b = _zeros_obj(len(values))
        for i, v in enumerate(values):
            a[i], b[i] = _split(v, unit)
        return cls(n, unit, a, b)

    def __len__(self) -> int:
        return len(self.a)

    def _new(self, a, b) -> RootVec:
        return RootVec(self.n, self.unit, a, b)

    def __add__(self, other: RootVec) -> RootVec:
        return self._new(self.a + other.a, self.b + other.b)

    def __sub__(self, other: RootVec) -> RootVec:
        return self._new(self.a - other.a, self.b - other.b)

    def __neg__(self) -> RootVec:
        return self._new(-self.a, -self.b)

    def scale(self, s) -> RootVec:
        """Multiply by an exact scalar of the same ring."""
        sa, sb = _split(s, self.unit)
        if sb == 0:
            return self._new(_omul(self.a, sa), _omul(self.b, sa))
        return self._new(
            _omul(self.a, sa) + _omul(self.b, sb * self.n), _omul(self.a, sb) + _omul(self.b, sa)
        )

    def map_linear(self, op: Callable) -> RootVec:
        """Apply an integer-coefficient linear map to both components."""
        return self._new(op(self.a), op(self.b))

    def __getitem__(self, i):
        return _ratify(self.a[i] + self.b[i] * self.unit) if self.b[i] else Fraction(self.a[i])

    def values(self) -> list:
        return [self[i] for i in range(len(self))]

    def nonzero(self) -> np.ndarray:
        return np.array([bool(x) or bool(y) for x, y in zip(self.a, self.b)], dtype=bool)

    def to_float(self) -> np.ndarray:
        return self.a.astype(float) + self.b.astype(float) * math.sqrt(self.n)

    def dot(self, other: RootVec):
        a = _osum(self.a * other.a) + self.n * _osum(self.b * other.b)
        b = _osum(self.a * other.b) + _osum(self.b * other.a)
        return _ratify(Fraction(a) + Fraction(b) * self.unit) if b else Fraction(a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RootVec):
            return NotImplemented
        return bool(np.all(self.a == other.a) and np.all(self.b == other.b))

    __hash__ = None  # type: ignore[assignment]


def _zeros_obj(size: int) -> np.ndarray:
    out = np.empty(size, dtype=object)
    out[:] = 0
    return out


def _omul(arr: np.ndarray, s) -> np.ndarray:
    # skip zero entries: Fraction products dominate the cost on sparse vectors
    out = _zeros_obj(len(arr))
    if s:
        nz = np.flatnonzero(arr)
        out[nz] = arr[nz] * s
    return out


def _osum(arr) -> Fraction:
    total = Fraction(0)
    for v in arr:
        if v:
            total += v
    return total


def _split(v, unit) -> tuple:
    """Coordinates (a, b) of v = a + b*unit."""
    if isinstance(v, bool):
        raise TypeError("boolean is not a scalar")
    if isinstance(v, (int, Fraction)):
        return Fraction(v), 0
    if isinstance(v, QuadExt):
        if isinstance(unit, Fraction):
            if not v.is_rational():
                raise ValueError("irrational value in a rational ring")
            return v.a, 0
        k = [i for i, c in enumerate(unit.coeffs) if c][0]
        coeffs = v.coeffs
        if v.tag != unit.tag or any(c for i, c in enumerate(coeffs[1:], 1) if i != k):
            raise ValueError(f"{v} is not in Q({unit})")
        return coeffs[0], coeffs[k] / unit.coeffs[k]
    raise TypeError(f"not an exact scalar: {v!r}")


def _is_exact(f) -> bool:
    return isinstance(f, RootVec)


def _scale(f, s):
    if _is_exact(f):
        return f.scale(s)
    return f * to_float(s)


def _restrict(f, mask: np.ndarray):
    """Zero f outside mask."""
    if _is_exact(f):
        a, b = f.a.copy(), f.b.copy()
        a[~mask] = 0
        b[~mask] = 0
        return RootVec(f.n, f.unit, a, b)
    return np.where(mask, f, 0)


def _support_mask(f) -> np.ndarray:
    if _is_exact(f):
        return f.nonzero()
    return np.asarray(f) != 0


# -- geometry -------------------------------------------------------------------------


class TreeBall:
    """Ball of radius R about the root o in a tree with prescribed branching.

    With ``p`` unset the tree is (q+1)-regular.  With ``p`` set the root has
    degree q+1, vertices at odd depth degree p+1 and even depth degree q+1.
    """

    def __init__(self, q: int, radius: int, p: int | None = None):
        if q < 1 or (p is not None and p < 1):
            raise ValueError("degrees must be at least 2")
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.q = q
        self.p = p
        self.radius = radius
        words: list[tuple[int, ...]] = [()]
        parent = [-1]
        letter = [-1]
        offsets = [0]
        level = [()]
        level_start = 0
        for d in range(radius):
            k = self.children_at(d)
            nxt = []
            for j, w in enumerate(level):
                pidx = level_start + j
                for a in range(k):
                    nxt.append(w + (a,))
                    parent.append(pidx)
                    letter.append(a)
            level_start += len(level)
            offsets.append(level_start)
            words.extend(nxt)
            level = nxt
        offsets.append(len(words))
        self.words = words
        self.parent = np.array(parent, dtype=np.int64)
        self.letter = np.array(letter, dtype=np.int64)
        self.offsets = offsets
        self.depth = np.zeros(len(words), dtype=np.int64)
        for d in range(radius + 1):
            self.depth[offsets[d] : offsets[d + 1]] = d
        self._index: dict[tuple[int, ...], int] | None = None

    @property
    def step(self) -> int:
        """Edge distance covered by one time step of the wave operator."""
        return 1 if self.p is None else 2

    def children_at(self, d: int) -> int:
        if d == 0:
            return self.q + 1
        if self.p is None:
            return self.q
        return self.p if d % 2 else self.q

    def degree_at(self, d: int) -> int:
        return self.children_at(d) + (1 if d else 0)

    @property
    def size(self) -> int:
        return len(self.words)

    def index(self, word: Sequence[int]) -> int:
        if self._index is None:
            self._index = {w: i for i, w in enumerate(self.words)}
        try:
            return self._index[tuple(word)]
        except KeyError:
            raise KeyError(f"{tuple(word)} is not a vertex of this ball") from None

    def sphere(self, r: int) -> range:
        return range(self.offsets[r], self.offsets[r + 1])

    def distance(self, i: int, j: int) -> int:
        a, b = self.words[i], self.words[j]
        return len(a) + len(b) - 2 * _lcp(a, b)

    # vertex functions
    def zeros(self, exact: bool = True, dtype=float):
        if exact:
            unit = self.unit()
            return RootVec.zeros(self._radicand(), unit, self.size)
        return np.zeros(self.size, dtype=dtype)

    def _radicand(self) -> int:
        return self.q if self.p is None else self.p * self.q

    def unit(self):
        if self.p is None:
            return sqrt_q(self.q)
        return sqrt_pq_unit(self.p, self.q)

    def delta(self, word: Sequence[int] = (), exact: bool = True, value=1):
        f = self.zeros(exact)
        i = self.index(word)
        if exact:
            f.a[i] = Fraction(value)
        else:
            f[i] = value
        return f

    def from_mapping(self, values: Mapping[tuple, Scalar], exact: bool = True):
        f = self.zeros(exact)
        for w, v in values.items():
            i = self.index(w)
            if exact:
                f.a[i], f.b[i] = _split(v, f.unit)
            else:
                f[i] = v
        return f

    def radial(self, fn: RadialFn, exact: bool = True):
        if fn.radius() > self.radius:
            raise BoundaryError("radial support exceeds the ball")
        vals = [fn.values.get(int(d), 0) for d in self.depth]
        if exact:
            return RootVec.from_values(self._radicand(), self.unit(), vals)
        return np.array([to_float(v) for v in vals], dtype=float)

    def support_radius(self, f) -> int:
        mask = _support_mask(f)
        if not mask.any():
            return -1
        return int(self.depth[mask].max())

    def _adj_raw(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros_like(f)
        if f.dtype == object:
            out[:] = 0
        if self.radius == 0:
            return out
        # each vertex receives its parent's value ...
        out[1:] = out[1:] + f[self.parent[1:]]
        # ... and its children's values; children of one level are contiguous
        for d in range(self.radius):
            k = self.children_at(d)
            lo, hi = self.offsets[d], self.offsets[d + 1]
            kids = f[self.offsets[d + 1] : self.offsets[d + 2]].reshape(hi - lo, k)
            out[lo:hi] = out[lo:hi] + kids.sum(axis=1)
        return out

    def adjacency(self, f, strict: bool = True):
        """(Af)(v) = sum over neighbours.  ``strict`` rejects support on the boundary sphere."""
        if strict and self.support_radius(f) >= self.radius:
            raise BoundaryError("support touches the ball boundary")
        if _is_exact(f):
            return f.map_linear(self._adj_raw)
        return self._adj_raw(np.asarray(f))

    def wave_op(self, f, strict: bool = True):
        """A / (2 sqrt q); on a biregular ball, B_q = (A^2 - (p + q)) / (2 sqrt pq) on even depths.

        On degree-(q+1) vertices A^2 = A_2^q + (q + 1), so this is
        A_2^q / (2 sqrt pq) - (p - 1) / (2 sqrt pq).
        """
        if self.p is None:
            return _scale(self.adjacency(f, strict), 1 / (2 * self.unit()))
        a2 = self.adjacency(self.adjacency(f, strict), strict)
        g = a2 - _scale(f, self.p + self.q)
        return _scale(_restrict(g, self.depth % 2 == 0), 1 / (2 * self.unit()))

    def lcp_array(self, omega: Sequence[int]) -> np.ndarray:
        """Length of the common prefix of each vertex word with omega."""
        n = len(omega)
        lcp = np.zeros(self.size, dtype=np.int64)
        on_ray = np.zeros(self.size, dtype=bool)
        on_ray[0] = True
        for d in range(1, self.radius + 1):
            sl = slice(self.offsets[d], self.offsets[d + 1])
            par = self.parent[sl]
            if d <= n:
                hit = on_ray[par] & (self.letter[sl] == omega[d - 1])
            else:
                hit = np.zeros(sl.stop - sl.start, dtype=bool)
            on_ray[sl] = hit
            lcp[sl] = np.where(hit, d, lcp[par])
        return lcp

    def busemann_array(self, omega: Sequence[int]) -> np.ndarray:
        if len(omega) < self.radius:
            raise InsufficientDepthError(f"boundary word of length {len(omega)} is shorter than radius {self.radius}")
        self._check_word(omega)
        return 2 * self.lcp_array(omega) - self.depth

    def _check_word(self, word: Sequence[int]) -> None:
        for d, a in enumerate(word):
            if not 0 <= a < self.children_at(d):
                raise ValueError(f"letter {a} out of range at position {d}")


def _lcp(a: Sequence[int], b: Sequence[int]) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def adjacency_apply(ball: TreeBall, f, strict: bool = True):
    return ball.adjacency(f, strict)


def busemann(omega: Sequence[int], v: Sequence[int]) -> int:
    """h_omega(v) = n - d(gamma(n), v) with gamma(n) the length-n prefix of omega."""
    n = len(omega)
    if n < len(v):
        raise InsufficientDepthError(f"need a boundary word of length >= {len(v)}")
    j = _lcp(omega, v)
    return n - (n + len(v) - 2 * j)


@dataclass
class RadialFn:
    """Function of the distance to the root."""

    values: dict[int, Scalar] = field(default_factory=dict)

    def radius(self) -> int:
        nz = [r for r, v in self.values.items() if v]
        return max(nz, default=-1)

    def __getitem__(self, r: int) -> Scalar:
        return self.values.get(r, Fraction(0))

    def as_list(self, length: int | None = None) -> list:
        n = self.radius() + 1 if length is None else length
        return [self[r] for r in range(n)]

    @classmethod
    def sphere(cls, r: int, value: Scalar = 1) -> RadialFn:
        return cls({r: _ratify(value)})

    def __eq__(self, other) -> bool:
        if not isinstance(other, RadialFn):
            return NotImplemented
        keys = set(self.values) | set(other.values)
        return all(self[k] == other[k] for k in keys)


class RadialTree:
    """Radial functions as arrays indexed by radius 0..R, with the radial adjacency."""

    def __init__(self, q: int, radius: int):
        self.q = q
        self.radius = radius
        self.size = radius + 1

    step = 1

    def unit(self):
        return sqrt_q(self.q)

    def wave_op(self, f, strict: bool = True):
        return _scale(self.adjacency(f, strict), 1 / (2 * self.unit()))

    def zeros(self, exact: bool = True, dtype=float):
        if exact:
            return RootVec.zeros(self.q, self.unit(), self.size)
        return np.zeros(self.size, dtype=dtype)

    def delta(self, exact: bool = True):
        f = self.zeros(exact)
        if exact:
            f.a[0] = Fraction(1)
        else:
            f[0] = 1.0
        return f

    def support_radius(self, f) -> int:
        nz = np.flatnonzero(_support_mask(f))
        return int(nz.max()) if len(nz) else -1

    def _adj_raw(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros_like(f)
        if f.dtype == object:
            out[:] = 0
        if self.radius == 0:
            return out
        out[0] = (self.q + 1) * f[1]
        out[1:] = out[1:] + f[:-1]
        out[1:-1] = out[1:-1] + self.q * f[2:]
        return out

    def adjacency(self, f, strict: bool = True):
        if strict and self.support_radius(f) >= self.radius:
            raise BoundaryError("support touches the ball boundary")
        if _is_exact(f):
            return f.map_linear(self._adj_raw)
        return self._adj_raw(np.asarray(f))

    def to_radial(self, f) -> RadialFn:
        vals = f.values() if _is_exact(f) else list(f)
        return RadialFn({r: v for r, v in enumerate(vals) if v})


# -- Satake transform and spherical functions -----------------------------------------


def _q_half_power(q: int, k: int):
    s = sqrt_q(q)
    return _ratify(s**k) if not isinstance(s, Fraction) else s**k


def satake(f: RadialFn, q: int, omega: Sequence[int] | None = None) -> LaurentPoly:
    """[x^k] Sat(f) = q^(k/2) * sum of f over the horocycle h_omega = k."""
    R = max(f.radius(), 0)
    ball = TreeBall(q, R)
    if omega is None:
        omega = (0,) * R
    h = ball.busemann_array(omega)
    sums: dict[int, Fraction] = {}
    for i in range(ball.size):
        v = f[int(ball.depth[i])]
        if v:
            k = int(h[i])
            sums[k] = sums.get(k, 0) + v
    return LaurentPoly({k: _ratify(_q_half_power(q, k) * s) for k, s in sums.items()})


def radial_convolve(f: RadialFn, g: RadialFn, q: int) -> RadialFn:
    """(f*g)(v) = sum_w f(d(v, w)) g(d(o, w)), evaluated by summing over the tree."""
    rf, rg = max(f.radius(), 0), max(g.radius(), 0)
    ball = TreeBall(q, rg)
    gvals = np.array([g[int(d)] for d in ball.depth], dtype=object)
    mask = np.array([bool(v) for v in gvals])
    ray = ball.lcp_array((0,) * rg)
    out = {}
    for r in range(rf + rg + 1):
        # v = the word 0^r; d(v, w) = r + |w| - 2 lcp(v, w)
        dist = r + ball.depth - 2 * np.minimum(ray, r)
        total = Fraction(0)
        for i in np.flatnonzero(mask):
            fv = f[int(dist[i])]
            if fv:
                total = total + fv * gvals[i]
        if total:
            out[r] = _ratify(total)
    return RadialFn(out)


def c_function(xi, q: float):
    xi = np.asarray(xi, dtype=complex)
    return (xi - 1 / (q * xi)) / (xi - 1 / xi)


def spherical(xi, t: int, q: int):
    """phi_xi at distance t via the c-function expansion, Chebyshev form near xi = +-1."""
    xi_arr = np.asarray(xi, dtype=complex)
    t = abs(t)
    near = np.isclose(xi_arr, 1, atol=1e-6) | np.isclose(xi_arr, -1, atol=1e-6)
    safe = np.where(near, 2.0, xi_arr)
    val = (safe**t * c_function(safe, q) + safe ** (-t) * c_function(1 / safe, q)) * q ** (-t / 2) / (1 + 1 / q)
    if near.any():
        z = (xi_arr + 1 / xi_arr) / 2
        val = np.where(near, spherical_z(z, t, q), val)
    return complex(val) if np.ndim(val) == 0 else val


def spherical_z(z, t: int, q: int):
    """q^(-t/2) F_t(z) / (1 + 1/q); exact when z is an exact scalar."""
    t = abs(t)
    ft = special_family("F", q=q)(t)
    if isinstance(z, (int, Fraction, QuadExt)) and not isinstance(z, bool):
        acc = Fraction(0)
        for k in range(ft.max_deg(), -1, -1):
            acc = acc * z + ft[k]
        return _ratify(acc * _q_half_power(q, -t) / (1 + Fraction(1, q)))
    return zpoly_eval(ft, z) * q ** (-t / 2) / (1 + 1 / q)


def plancherel_measure(q: int) -> SpectralMeasure:
    """(1 + 1/q)/(4 pi) d theta / (c(xi) c(1/xi)), a probability measure."""
    return ortho_measure(special_family("F", q=q)).scaled((1 + 1 / q) / (4 * math.pi))


def _theta(nodes: int) -> np.ndarray:
    return 2 * math.pi * (np.arange(nodes) + 0.5) / nodes


def inverse_satake(P: LaurentPoly, ell: int, q: int, nodes: int = 2048) -> float:
    """int Sat(f)(xi) phi_xi(ell) d mu_Pl, by the trapezoid rule."""
    if not P.is_symmetric():
        raise ValueError("Satake images are symmetric")
    theta = _theta(nodes)
    xi = np.exp(1j * theta)
    mu = plancherel_measure(q)
    vals = sum(complex(to_float(c)) * xi**k for k, c in P.items())
    phi = spherical_z(np.cos(theta), ell, q)
    out = np.sum(vals * phi * mu.density_theta(theta)) * 2 * math.pi / nodes
    return float(np.real(out))


def harmonic_measure(q: int, n: int) -> Fraction:
    """Mass of the cylinder Omega(v) for |v| = n."""
    if n == 0:
        return Fraction(1)
    return Fraction(1, (q + 1) * q ** (n - 1))


# -- wave equation ------------------------------------------------------------------------


@dataclass
class TreeWaveState:
    f1: object
    f2: object


@dataclass
class TreeSeries:
    space: object
    slices: dict[int, object]

    @property
    def times(self) -> list[int]:
        return sorted(self.slices)

    def __getitem__(self, t: int):
        return self.slices[t]


def _wave_op(space, f, strict: bool = True):
    return space.wave_op(f, strict)


def _apply_zpoly(space, p: LaurentPoly, f):
    """p(W) f by Horner's rule, W the wave operator of the space."""
    if p.is_zero():
        return f.scale(0) if _is_exact(f) else np.zeros_like(f)
    acc = None
    for k in range(p.max_deg(), -1, -1):
        c = p[k]
        term = f.scale(c) if _is_exact(f) else f * to_float(c)
        acc = term if acc is None else _wave_op(space, acc) + term
    return acc


def wave_solve_tree(space, basis: BasisPair, g1, g2, t_range: tuple[int, int]) -> TreeSeries:
    """u(t) = Ch_t^{m1}(W) g1 + Ch_t^{m2}(W) g2 via the three-term recurrence.

    ``space`` is a TreeBall or a radial space; W is its wave operator
    (A / 2 sqrt q, or B_q on a biregular ball).
    """
    from .chebyshev import cheb

    t0, t1 = t_range
    if t0 > t1:
        raise ValueError("empty time range")
    span = max(abs(t0), abs(t1), 1)
    c0 = [cheb(m, 0) for m in (basis.m1, basis.m2)]
    c1 = [cheb(m, 1) for m in (basis.m1, basis.m2)]
    deg = max((p.max_deg() for p in c0 + c1 if not p.is_zero()), default=0)
    supp = max(space.support_radius(g1), space.support_radius(g2), 0)
    if supp + space.step * max(span, deg) > space.radius:
        raise BallTooSmallError(
            f"radius {space.radius} cannot hold support {supp} evolved to |t| = {span}"
        )
    u0 = _apply_zpoly(space, c0[0], g1) + _apply_zpoly(space, c0[1], g2)
    u1 = _apply_zpoly(space, c1[0], g1) + _apply_zpoly(space, c1[1], g2)
    slices = {0: u0, 1: u1}
    for t in range(1, max(t1, 1)):
        slices[t + 1] = _twice(_wave_op(space, slices[t])) - slices[t - 1]
    for t in range(0, min(t0, 0), -1):
        slices[t - 1] = _twice(_wave_op(space, slices[t])) - slices[t + 1]
    # seeds at t = 0, 1 may fall one step outside the range; keep those too
    keep = {t: s for t, s in slices.items() if t0 - 1 <= t <= t1 + 1}
    return TreeSeries(space, keep)


def cheb_operator_series(space, h: LaurentPoly, g, t_max: int) -> list:
    """[Ch_t^h(W) g for t = 0..t_max], seeded by t = 0, 1 and continued by A_{t+1} = 2 W A_t - A_{t-1}."""
    from .chebyshev import cheb

    supp = max(space.support_radius(g), 0)
    if supp + space.step * max(t_max, 1) > space.radius:
        raise BallTooSmallError(f"radius {space.radius} is too small for t = {t_max}")
    out = [_apply_zpoly(space, cheb(h, 0), g), _apply_zpoly(space, cheb(h, 1), g)]
    for t in range(1, t_max):
        out.append(_twice(_wave_op(space, out[t])) - out[t - 1])
    return out[: t_max + 1]


def _twice(f):
    return f + f


def wave_residual_tree(series: TreeSeries, t: int):
    """(A/2 sqrt q) u(t) - (u(t+1) + u(t-1))/2."""
    space = series.space
    lhs = _wave_op(space, series[t])
    rhs = series[t + 1] + series[t - 1]
    if _is_exact(rhs):
        return lhs - rhs.scale(Fraction(1, 2))
    return lhs - rhs / 2


def kernel_closed_form(family: str, t: int, q: int) -> RadialFn:
    """Radial profile of T_t, U_t or F_t of A/(2 sqrt q) applied to delta_o."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    fam = family.upper()
    qh = lambda k: _q_half_power(q, k)  # noqa: E731
    qi = Fraction(1, q)
    out: dict[int, Scalar] = {}
    if fam == "F":
        out[t] = qh(-t) if t else 1 + qi
    elif fam == "U":
        for r in range(t % 2, t + 1, 2):
            out[r] = qh(-t)
    elif fam == "T":
        if t == 0:
            out[0] = Fraction(1)
        else:
            out[t] = qh(-t) / 2
            for r in range(t % 2, t - 1, 2):
                out[r] = _ratify((1 - q) / Fraction(2) * qh(-t))
    else:
        raise ValueError(f"unknown kernel family {family!r}")
    return RadialFn({r: _ratify(v) for r, v in out.items()})


def energy_form(space, g: tuple, f: tuple):
    """<(1 - W^2) g1, f1> + <g2, f2> with W the (self-adjoint) wave operator.

    For the regular tree 1 - W^2 = 1 - A^2/4q.  Computed as <g1, f1> - <W g1, W f1> + <g2, f2>.
    """
    if not isinstance(space, TreeBall):
        raise TypeError("energies need a TreeBall (radial arrays carry no sphere sizes)")
    g1, g2 = g
    f1, f2 = f
    wg, wf = space.wave_op(g1), space.wave_op(f1)
    if _is_exact(g1):
        return _ratify(g1.dot(f1) - wg.dot(wf) + g2.dot(f2))
    return float(np.vdot(f1, g1).real - np.vdot(wf, wg).real + np.vdot(f2, g2).real)


def _half_diff(a, b):
    if _is_exact(a):
        return (a - b).scale(Fraction(1, 2))
    return (a - b) / 2


def tree_energy(series: TreeSeries, t: int):
    u = series[t]
    j = _half_diff(series[t + 1], series[t - 1])
    return energy_form(series.space, (u, j), (u, j))


def plane_wave(ball: TreeBall, omega: Sequence[int], f: Mapping[int, Scalar], sign: int, t_range: tuple[int, int]) -> TreeSeries:
    """F_+-(v, t) = q^(h/2) f(h -+ t) sampled on the ball (values beyond the ball are not stored)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    h = ball.busemann_array(omega)
    slices = {}
    for t in range(t_range[0] - 1, t_range[1] + 2):
        vals = [_ratify(_q_half_power(ball.q, int(k)) * f.get(int(k) - sign * t, 0)) if f.get(int(k) - sign * t, 0) else 0 for k in h]
        slices[t] = RootVec.from_values(ball.q, ball.unit(), vals)
    return TreeSeries(ball, slices)


# -- Helgason transform and scattering ---------------------------------------------------


def helgason(ball: TreeBall, f, xi, omega: Sequence[int]):
    """sum_x f(x) q^(h/2) xi^h over the support of f; omega must reach the support radius."""
    vals = f.to_float() if _is_exact(f) else np.asarray(f)
    support = np.flatnonzero(vals)
    need = int(ball.depth[support].max()) if len(support) else 0
    if len(omega) < need:
        raise InsufficientDepthError("cylinder shallower than the support")
    xi = np.asarray(xi, dtype=complex)
    out = np.zeros_like(xi)
    for i in support:
        k = busemann(omega, ball.words[i])
        out = out + vals[i] * ball.q ** (k / 2) * xi**k
    return complex(out) if np.ndim(out) == 0 else out


class BoundaryGrid:
    """The boundary cut into the cylinders Omega(v), |v| = depth, all of equal harmonic measure.

    With ``p`` set the tree is the (p+1, q+1)-biregular tree rooted at a
    degree-(q+1) vertex; horocycle indices are then h/2 and the base is sqrt(pq).
    """

    def __init__(self, q: int, depth: int, nodes: int = 2048, p: int | None = None):
        self.q = q
        self.p = p
        self.depth = depth
        self.nodes = nodes
        self.ball = TreeBall(q, depth, p)
        self.cylinders = [self.ball.words[i] for i in self.ball.sphere(depth)]
        self.weight = 1.0 / len(self.cylinders)
        theta = _theta(nodes)
        self.theta = theta
        self.xi = np.exp(1j * theta)
        pp = 1 if p is None else p
        self.rho = math.sqrt(pp * q)
        self.ainv = 1 / math.sqrt(pp * q)
        self.binv = math.sqrt(pp / q)
        # horocycle index of every ball vertex against every cylinder
        h = np.stack([self.ball.busemann_array(c) for c in self.cylinders], axis=1)
        self.H = h if p is None else h / 2

    def bfun(self, xi):
        """Numerator of the c-function: (1 - a^-1/xi)(1 + b^-1/xi) xi."""
        return (1 - self.ainv / xi) * (1 + self.binv / xi) * xi

    def cinv(self, eta):
        return (eta - 1 / eta) / self.bfun(eta)

    def plancherel(self) -> SpectralMeasure:
        if self.p is None:
            return plancherel_measure(self.q)
        return ortho_measure(special_family("H", p=self.p, q=self.q)).scaled((1 + 1 / self.q) / (4 * math.pi))

    @property
    def size(self) -> int:
        return len(self.cylinders)

    def lift(self, f, ball: TreeBall) -> np.ndarray:
        """Restrict a function on a larger ball to this grid's ball (support must fit)."""
        vals = f.to_float() if _is_exact(f) else np.asarray(f, dtype=float)
        if ball.support_radius(vals) > self.depth:
            raise InsufficientDepthError("support is deeper than the cylinder depth")
        return vals[: self.ball.size]

    def hel(self, vals: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Hel(f)(xi, c) for every node and cylinder: shape (len(xi), cylinders)."""
        support = np.flatnonzero(vals)
        out = np.zeros((len(xi), self.size), dtype=complex)
        for i in support:
            h = self.H[i]
            out += vals[i] * (self.rho**h)[None, :] * xi[:, None] ** h[None, :]
        return out

    def integrate(self, F: np.ndarray) -> complex:
        """(2 pi / N) sum over nodes, times the cylinder weights: int F d theta d nu."""
        return complex(np.sum(F) * self.weight * 2 * math.pi / self.nodes)


@dataclass
class BoundaryCylFn:
    """A function on the boundary that is constant on the cylinders of a given depth."""

    q: int
    depth: int
    values: np.ndarray

    def refine(self, depth: int) -> BoundaryCylFn:
        if depth < self.depth:
            raise ValueError("can only refine to a deeper level")
        vals = self.values
        for d in range(self.depth, depth):
            vals = np.repeat(vals, self.q if d else self.q + 1, axis=-1)
        return BoundaryCylFn(self.q, depth, vals)

    def integral(self) -> complex:
        return complex(np.sum(self.values, axis=-1) * float(harmonic_measure(self.q, self.depth)))


def step_state(ball: TreeBall, f1, f2) -> tuple:
    """One step of the wave evolution: (u(1), (u(2) - u(0)) / 2)."""
    ser = wave_solve_tree(ball, STANDARD_BASIS, f1, f2, (0, 2))
    return ser[1], _half_diff(ser[2], ser[0])


def helgason_norm_sq(grid: BoundaryGrid, vals: np.ndarray) -> float:
    """int int |Hel f|^2 d mu_Pl d nu."""
    hel = grid.hel(vals, grid.xi)
    dens = grid.plancherel().density_theta(grid.theta)
    return grid.integrate(np.abs(hel) ** 2 * dens[:, None]).real


def T_plus(grid: BoundaryGrid, f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
    """Values of T_+(f1, f2) at (xi_j, cylinder c), xi_j on the midpoint circle grid."""
    xi = grid.xi
    eta = 1 / xi
    ci = grid.cinv(eta)[:, None]
    out = grid.hel(f1, eta) * ci * ((xi - eta) / 2)[:, None]
    out -= grid.hel(f2, eta) * ci
    return out


def tplus_norm_sq(grid: BoundaryGrid, T: np.ndarray, S: np.ndarray | None = None) -> complex:
    """<T, S> in L^2 of (1 + 1/q)/(4 pi) d theta x d nu (the normalization making T_+ isometric)."""
    S = T if S is None else S
    return grid.integrate(T * np.conj(S)) * (1 + 1 / grid.q) / (4 * math.pi)


def R_plus(grid: BoundaryGrid, T: np.ndarray) -> np.ndarray:
    xi = grid.xi[:, None]
    return T * (1 + 1 / grid.q) / grid.bfun(xi)


class KPlus:
    """k_+(t, c): the t-th Fourier coefficient of R_+ on each cylinder."""

    def __init__(self, grid: BoundaryGrid, R: np.ndarray):
        self.grid = grid
        self.R = R
        self._cache: dict[int, np.ndarray] = {}

    def __call__(self, t: int) -> np.ndarray:
        if t not in self._cache:
            self._cache[t] = np.mean(self.R * self.grid.xi[:, None] ** t, axis=0)
        return self._cache[t]

    def series(self, t_values: Sequence[int]) -> np.ndarray:
        return np.stack([self(t) for t in t_values])


def k_plus(grid: BoundaryGrid, f1, f2) -> KPlus:
    return KPlus(grid, R_plus(grid, T_plus(grid, f1, f2)))


def reconstruct(k: Callable[[int], np.ndarray], q: int, depth: int, ball: TreeBall, t: int) -> np.ndarray:
    """u(v, t) = int q^(h/2) k(h - t, omega) d nu for every vertex of ``ball``.

    k must be constant on cylinders of the given depth.  Cylinders that are not
    ancestors of v see a single Busemann value; on the ancestor cylinder the
    value depends on how far omega follows v, which is summed exactly.
    """
    if ball.q != q or ball.p is not None or ball.radius < depth:
        raise ValueError("ball must be a regular tree ball at least as deep as the cylinders")
    nu = lambda n: float(harmonic_measure(q, n))  # noqa: E731
    sph = ball.sphere(depth)
    cyl_words = [ball.words[i] for i in sph]
    L = np.stack([ball.lcp_array(c) for c in cyl_words], axis=1)  # (V, C)
    r = ball.depth
    H = 2 * L - r[:, None]
    own = (r[:, None] > depth) & (L == depth)
    # Busemann values of vertices in the ball lie in [-R, R]
    tmin, tmax = -ball.radius - t, ball.radius - t
    ktab = {s: np.asarray(k(s)) for s in range(tmin, tmax + 1)}
    K = np.stack([ktab[s] for s in range(tmin, tmax + 1)])  # (T, C)
    cidx = np.broadcast_to(np.arange(len(cyl_words)), H.shape)
    vals = K[H - t - tmin, cidx] * (q ** (H / 2.0))
    out = np.where(own, 0, vals).sum(axis=1) * nu(depth)
    # ancestor cylinder of deep vertices
    deep = np.flatnonzero(r > depth)
    if len(deep):
        anc = deep.copy()
        while True:
            mask = ball.depth[anc] > depth
            if not mask.any():
                break
            anc[mask] = ball.parent[anc[mask]]
        c_of = anc - ball.offsets[depth]
        rd = r[deep]
        for j in range(depth, int(rd.max()) + 1):
            sel = rd >= j
            w = np.where(rd[sel] == j, nu(j), nu(j) - nu(j + 1))
            hh = 2 * j - rd[sel]
            kv = np.array([ktab[int(s)][c] for s, c in zip(hh - t, c_of[sel])])
            out[deep[sel]] += w * q ** (hh / 2.0) * kv
    return out


def scattering_multiplier(xi, q: int):
    xi = np.asarray(xi, dtype=complex)
    if not np.allclose(np.abs(xi), 1, atol=1e-12):
        raise ValueError("the multiplier is evaluated on the unit circle")
    val = (1 / xi - xi / q) / (xi - 1 / (q * xi))
    return complex(val) if np.ndim(val) == 0 else val


def resonances(q: int) -> tuple:
    """Poles of the multiplier, +-q^(-1/2), as exact scalars."""
    r = _q_half_power(q, -1)
    return (r, _ratify(-r))


def cylinder_average_predicate(K: np.ndarray, t_values: Sequence[int], q: int, depth: int, tol: float = 1e-8) -> dict:
    """Finite-depth test of the zero-solution condition on averages of k over cylinders.

    K has shape (len(t_values), cylinders at ``depth``).  Checks that the average
    over the whole boundary vanishes and that q * k~(t, v) = k~(t - 2, v) for
    every other vertex v with |v| <= depth.
    """
    K = np.asarray(K)
    ball = TreeBall(q, depth)
    ts = list(t_values)
    pos = {t: i for i, t in enumerate(ts)}
    report: dict = {"root": True, "vertices": {}}
    root_avg = K.mean(axis=1)
    report["root"] = bool(np.all(np.abs(root_avg) <= tol))
    for d in range(1, depth + 1):
        n_d = len(ball.sphere(d))
        avg = K.reshape(len(ts), n_d, -1).mean(axis=2)
        for j, i in enumerate(ball.sphere(d)):
            ok = True
            for t in ts:
                if t - 2 in pos:
                    if abs(q * avg[pos[t], j] - avg[pos[t - 2], j]) > tol:
                        ok = False
                        break
            report["vertices"][ball.words[i]] = ok
    report["passed"] = report["root"] and all(report["vertices"].values())
    return report
