"""Delocalization certificates for eigenfunctions of B_q on finite biregular graphs.

A certificate bounds from below the size of any vertex set E in V_q that
carries more than eps of the mass of a normalized eigenfunction phi.  With a
kernel polynomial K satisfying K >= -1 on the spectrum and psi = phi * 1_E of
mass m = ||psi||^2 > eps:

    (K(lam) + 1) m^2 - m  <=  <K(B_q) psi, psi>  <=  ||K(B_q)||_{r->s} ||psi||_r^2
                                                  <=  ||K(B_q)||_{r->s} |E|^(2/r - 1) m,

so |E|^(2/r - 1) >= ((K(lam) + 1) eps - 1) / ||K(B_q)||_{r->s}.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .chebyshev import cheb, z_to_x
from .exactnum import Scalar
from .laurent import LaurentPoly

__all__ = [
    "BiregularGraph",
    "KernelPoly",
    "Certificate",
    "GraphError",
    "NTooSmallError",
    "HypothesisError",
    "InvalidEigenpairError",
    "gen_biregular",
    "load_graph",
    "save_graph",
    "a2q_matrix",
    "bq_matrix",
    "eig",
    "sn_matrix",
    "sn_norms",
    "sn_norm",
    "r_matrix",
    "riesz_thorin",
    "fejer_poly",
    "fejer",
    "tilde_F_poly",
    "cheb_identity_rhs",
    "correction_coefficient",
    "tilde_G_kernel1",
    "tilde_G_kernel2",
    "r_coefficients",
    "fejer_gamma",
    "default_M",
    "find_d",
    "build_K",
    "verify_K",
    "certify",
    "min_mass_set_size",
]


class GraphError(ValueError):
    """Invalid or infeasible biregular graph."""


class NTooSmallError(ValueError):
    """No admissible even d for the given N."""


class HypothesisError(RuntimeError):
    """The operator-norm hypothesis on S_n fails for the supplied constants."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


class InvalidEigenpairError(ValueError):
    pass


# -- graphs ------------------------------------------------------------------------------


@dataclass(frozen=True)
class BiregularGraph:
    """A finite bipartite graph with degrees p+1 on V_p and q+1 on V_q."""

    p: int
    q: int
    n: int
    edges: tuple[tuple[int, int], ...]
    vq: tuple[int, ...]
    vp: tuple[int, ...]

    def __post_init__(self):
        self.validate()

    @property
    def adj(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            out[u].append(v)
            out[v].append(u)
        return out

    def validate(self) -> None:
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise GraphError(f"loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphError(f"multi-edge {key}")
            seen.add(key)
        if set(self.vq) & set(self.vp) or len(self.vq) + len(self.vp) != self.n:
            raise GraphError("V_p and V_q must partition the vertex set")
        side = {v: "q" for v in self.vq} | {v: "p" for v in self.vp}
        adj = self.adj
        for v in range(self.n):
            want = self.q + 1 if side[v] == "q" else self.p + 1
            if len(adj[v]) != want:
                raise GraphError(f"vertex {v} has degree {len(adj[v])}, expected {want}")
            if any(side[w] == side[v] for w in adj[v]):
                raise GraphError("edges must join V_p to V_q")
        if len(self.vp) * (self.p + 1) != len(self.vq) * (self.q + 1):
            raise GraphError("edge counts of the two sides disagree")
        if not _connected(adj):
            raise GraphError("graph is not connected")

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def digest(self) -> str:
        lines = [f"{self.p} {self.q} {self.n}"] + [f"{u} {v}" for u, v in sorted(self.edges)]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()

    def to_text(self) -> str:
        rows = [f"# p={self.p} q={self.q}"] + [f"{u} {v}" for u, v in self.edges]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_edges(cls, p: int, q: int, edges: Sequence[tuple[int, int]]) -> BiregularGraph:
        n = 1 + max(max(e) for e in edges)
        deg = [0] * n
        for u, v in edges:
            deg[u] += 1
            deg[v] += 1
        if p != q:
            vq = tuple(v for v in range(n) if deg[v] == q + 1)
            vp = tuple(v for v in range(n) if deg[v] != q + 1)
        else:
            color = _two_colour(n, edges)
            vq = tuple(v for v in range(n) if color[v] == 0)
            vp = tuple(v for v in range(n) if color[v] == 1)
        return cls(p, q, n, tuple((int(u), int(v)) for u, v in edges), vq, vp)

    @classmethod
    def from_text(cls, text: str) -> BiregularGraph:
        p = q = None
        edges = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    key, _, val = tok.partition("=")
                    if key == "p":
                        p = int(val)
                    elif key == "q":
                        q = int(val)
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
        if p is None or q is None:
            raise GraphError("missing '# p=.. q=..' header")
        if not edges:
            raise GraphError("no edges")
        return cls.from_edges(p, q, edges)


def _connected(adj: list[list[int]]) -> bool:
    if not adj:
        return False
    seen = {0}
    todo = deque([0])
    while todo:
        v = todo.popleft()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return len(seen) == len(adj)


def _two_colour(n: int, edges) -> list[int]:
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    color = [-1] * n
    color[0] = 0
    todo = deque([0])
    while todo:
        v = todo.popleft()
        for w in adj[v]:
            if color[w] < 0:
                color[w] = 1 - color[v]
                todo.append(w)
            elif color[w] == color[v]:
                raise GraphError("graph is not bipartite")
    return color


def gen_biregular(n_q: int, p: int, q: int, seed: int, max_tries: int = 1000) -> BiregularGraph:
    """Configuration model: pair the (q+1) n_q half-edges of V_q with those of V_p.

    Pairings with repeated edges or disconnected results are rejected and redrawn.
    """
    if n_q <= 0 or p < 1 or q < 1:
        raise GraphError("need n_q > 0 and p, q >= 1")
    total = n_q * (q + 1)
    if total % (p + 1):
        raise GraphError(f"n_q (q+1) = {total} is not divisible by p+1 = {p + 1}")
    n_p = total // (p + 1)
    rng = np.random.default_rng(seed)
    q_stubs = np.repeat(np.arange(n_q), q + 1)
    p_stubs = np.repeat(np.arange(n_q, n_q + n_p), p + 1)
    for _ in range(max_tries):
        perm = rng.permutation(p_stubs)
        pairs = list(zip(q_stubs.tolist(), perm.tolist()))
        if len(set(pairs)) != len(pairs):
            continue
        try:
            return BiregularGraph(p, q, n_q + n_p, tuple(pairs), tuple(range(n_q)), tuple(range(n_q, n_q + n_p)))
        except GraphError:
            continue
    raise GraphError(f"no simple connected graph after {max_tries} tries")


def load_graph(path) -> BiregularGraph:
    return BiregularGraph.from_text(Path(path).read_text())


def save_graph(g: BiregularGraph, path) -> None:
    Path(path).write_text(g.to_text())


# -- operators on V_q ----------------------------------------------------------------------


def a2q_matrix(g: BiregularGraph) -> np.ndarray:
    """A_2^q = (A^2)|_{V_q} - (q + 1) I."""
    a = g.adjacency_matrix()
    idx = np.array(g.vq)
    a2 = (a @ a)[np.ix_(idx, idx)]
    return a2 - (g.q + 1) * np.eye(len(idx))


def bq_matrix(g: BiregularGraph) -> np.ndarray:
    """B_q = A_2^q / (2 sqrt pq) - (p - 1) / (2 sqrt pq)."""
    s = math.sqrt(g.p * g.q)
    return (a2q_matrix(g) - (g.p - 1) * np.eye(len(g.vq))) / (2 * s)


def eig(g: BiregularGraph) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in ascending order with orthonormal eigenvectors as columns."""
    vals, vecs = np.linalg.eigh(bq_matrix(g))
    return vals, vecs


def _sn_iter(g: BiregularGraph, n_max: int):
    """Yield S_0, S_1, ... where S_n sums over non-backtracking distance-2n walks divided by sqrt(pq)^n.

    On T_q the sphere operators obey S_{n+1} = 2 B_q S_n - S_{n-1} (n >= 2),
    S_1 = 2 B_q + (p - 1)/sqrt(pq), S_2 = 2 B_q S_1 - (1 + 1/q); the same
    relations hold for the non-backtracking counts on the graph.
    """
    b = bq_matrix(g)
    eye = np.eye(len(g.vq))
    a = math.sqrt(g.p * g.q)
    prev = eye
    yield prev
    if n_max < 1:
        return
    cur = 2 * b + (g.p - 1) / a * eye
    yield cur
    for n in range(1, n_max):
        corr = (1 + 1 / g.q) * eye if n == 1 else prev
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = 2 * b @ cur - corr
        prev, cur = cur, nxt
        yield cur


def sn_matrix(g: BiregularGraph, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be nonnegative")
    for k, s in enumerate(_sn_iter(g, n)):
        if k == n:
            return s
    raise AssertionError("unreachable")


def _check_r(r: float) -> None:
    if not 1 <= r < 2:
        raise ValueError(f"r must lie in [1, 2), got {r}")


def riesz_thorin(norm_1_inf: float, norm_2_2: float, r: float) -> float:
    """Upper bound for ||S||_{r->s} from ||S||_{1->inf} and ||S||_{2->2}."""
    _check_r(r)
    if r == 1:
        return norm_1_inf
    return norm_1_inf ** (2 / r - 1) * norm_2_2 ** (2 - 2 / r)


def _op_norm(s: np.ndarray, r: float) -> float:
    if not np.all(np.isfinite(s)):
        return math.inf
    n1 = float(np.max(np.abs(s)))
    if r == 1:
        return n1
    n2 = float(np.max(np.abs(np.linalg.eigvalsh((s + s.T) / 2))))
    return riesz_thorin(n1, n2, r)


def sn_norms(g: BiregularGraph, n_max: int, r: float = 1.0) -> np.ndarray:
    """||S_n||_{r->s} for n = 0..n_max (exact at r = 1, interpolation bound otherwise)."""
    _check_r(r)
    out = np.full(n_max + 1, math.inf)
    for n, s in enumerate(_sn_iter(g, n_max)):
        v = _op_norm(s, r)
        out[n] = v
        if not math.isfinite(v) or v > 1e280:
            break
    return out


def sn_norm(g: BiregularGraph, n: int, r: float = 1.0) -> float:
    _check_r(r)
    return _op_norm(sn_matrix(g, n), r)


def r_matrix(g: BiregularGraph, k: int) -> np.ndarray:
    """R_k(B_q) by the three-term recurrence, R_0 = 1, R_1 = 2 B_q + b^-1."""
    b = bq_matrix(g)
    eye = np.eye(len(g.vq))
    binv = math.sqrt(g.p / g.q)
    prev, cur = eye, 2 * b + binv * eye
    if k == 0:
        return prev
    for _ in range(k - 1):
        prev, cur = cur, 2 * b @ cur - prev
    return cur


# -- Fejer-type kernels ---------------------------------------------------------------------------


def fejer_poly(M: int) -> LaurentPoly:
    """F_M(y) = (1/M) |1 + y + ... + y^(M-1)|^2 = sum_{|j| < M} (1 - |j|/M) y^j."""
    if M < 1:
        raise ValueError("M must be positive")
    return LaurentPoly({j: Fraction(M - abs(j), M) for j in range(-M + 1, M)})


def fejer(M: int, y):
    y = np.asarray(y, dtype=complex)
    out = np.full(y.shape, 1.0 + 0j)
    for j in range(1, M):
        out = out + (1 - j / M) * (y**j + y ** (-j))
    return out.real if np.all(np.abs(out.imag) < 1e-9 * np.maximum(1, np.abs(out.real))) else out


def _x_power(poly: LaurentPoly, d: int) -> LaurentPoly:
    """poly(x^d)."""
    return LaurentPoly({k * d: v for k, v in poly.items()})


def tilde_F_poly(M: int, d: int) -> LaurentPoly:
    """F_M(x^d) - 1 - (M-1)/M (x^d + x^-d) = (1/M) sum_{j=2}^{M-1} (M-j)(x^{jd} + x^{-jd})."""
    f = _x_power(fejer_poly(M), d)
    return f - 1 - LaurentPoly({d: Fraction(M - 1, M), -d: Fraction(M - 1, M)})


_TWO_Z = LaurentPoly({1: 1, -1: 1})


class _ChebX:
    """Ch_t^h at z = (x + 1/x)/2 as Laurent polynomials in x, seeded from cheb and extended by the recurrence."""

    def __init__(self, h: LaurentPoly):
        self._rows = [z_to_x(cheb(h, 0)), z_to_x(cheb(h, 1))]

    def __call__(self, t: int) -> LaurentPoly:
        if t < 0:
            return LaurentPoly()
        rows = self._rows
        while len(rows) <= t:
            rows.append(_TWO_Z * rows[-1] - rows[-2])
        return rows[t]


def _R_h(beta: Scalar) -> LaurentPoly:
    return LaurentPoly({1: 1, 0: beta})


# standard second-kind U_t = Ch_t^x, so U_0 = 1 and U_1 = 2z
_U_H = LaurentPoly({1: 1})


def cheb_identity_rhs(k: int, ell: int, beta: Scalar) -> LaurentPoly:
    """R_k - b^-1 R_{k-1} - (1 - b^-2) sum_{j<=ell} (-b^-1)^j R_{k-2-j} - (1 - b^-2)(-b^-1)^(ell+1) U_{k-3-ell}.

    Equals x^k + x^-k for k >= 3 and 0 <= ell <= k - 3.
    """
    if k < 3 or not 0 <= ell <= k - 3:
        raise ValueError("need k >= 3 and 0 <= ell <= k - 3")
    r, u = _ChebX(_R_h(beta)), _ChebX(_U_H)
    one_m = 1 - beta * beta
    out = r(k) - r(k - 1) * beta
    for j in range(ell + 1):
        out = out - r(k - 2 - j) * (one_m * (-beta) ** j)
    out = out - u(k - 3 - ell) * (one_m * (-beta) ** (ell + 1))
    return out


def correction_coefficient(M: int, d: int, beta) -> Scalar:
    """Coefficient c_U with tilde_F(x^d) + c_U U_{d-3} a combination of R_t, t >= d - 2."""
    total = 0
    for j in range(2, M):
        total = total + (M - j) * (-beta) ** ((j - 1) * d + 1)
    return (1 - beta * beta) * total / M


def tilde_G_kernel1(M: int, d: int, beta: Scalar) -> LaurentPoly:
    """tilde_F_M(x^d) + c_U U_{d-3}, exact."""
    if d < 4 or d % 2:
        raise ValueError("d must be even and at least 4")
    return tilde_F_poly(M, d) + _ChebX(_U_H)(d - 3) * correction_coefficient(M, d, beta)


def r_coefficients(M: int, d: int, beta) -> dict[int, Scalar]:
    """Coefficients kappa_t with tilde_G = sum_t kappa_t R_t, from the R-expansion of each x^{jd} + x^{-jd}."""
    if d < 4 or d % 2:
        raise ValueError("d must be even and at least 4")
    one_m = 1 - beta * beta
    out: dict[int, Scalar] = {}

    def add(t, v):
        out[t] = out[t] + v if t in out else v

    for j in range(2, M):
        w = Fraction(M - j, M)
        add(j * d, w)
        add(j * d - 1, -w * beta)
        for i in range((j - 1) * d + 1):
            add(j * d - 2 - i, -w * one_m * (-beta) ** i)
    return out


def tilde_G_kernel2(M: int, d: int, beta: Scalar) -> LaurentPoly:
    """sum_t kappa_t R_t(z) as a Laurent polynomial in x."""
    r = _ChebX(_R_h(beta))
    out = LaurentPoly()
    for t, v in sorted(r_coefficients(M, d, beta).items()):
        out = out + r(t) * v
    return out


def _r_coefficients_float(M: int, d: int, beta: float) -> np.ndarray:
    kappa = np.zeros((M - 1) * d + 1)
    one_m = 1 - beta * beta
    for j in range(2, M):
        w = (M - j) / M
        kappa[j * d] += w
        kappa[j * d - 1] -= w * beta
        i = np.arange((j - 1) * d + 1)
        kappa[j * d - 2 - i] -= w * one_m * (-beta) ** i
    return kappa


def _fejer_circle(M: int, theta: np.ndarray) -> np.ndarray:
    """F_M(e^{i theta}) = sin^2(M theta / 2) / (M sin^2(theta / 2))."""
    s = np.sin(theta / 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(M * theta / 2) ** 2 / (M * s * s)
    return np.where(np.abs(s) < 1e-300, float(M), val)


@lru_cache(maxsize=None)
def fejer_gamma(M: int, points: int = 1000) -> float:
    """Largest gamma <= 1/2 with F_M(e^{i theta}) >= M/2 + 4 for |theta| < gamma / M (sampled)."""
    for gamma in np.linspace(0.5, 0.0, 501)[:-1]:
        theta = np.linspace(0, gamma / M, points)
        if np.all(_fejer_circle(M, theta) >= M / 2 + 4):
            return float(gamma)
    raise ValueError(f"no gamma works for M = {M}; the Fejer bound needs M >= 10")


def default_M(eps: float) -> int:
    """ceil(128 / eps), rounded up to even."""
    m = math.ceil(128 / eps)
    return m + (m % 2)


def find_d(theta0: float, M: int, gamma: float, N: int, min_d: int = 2) -> int:
    """Largest even d with M d <= N, |d theta0 mod 2 pi| <= gamma / M and d >= gamma N / (16 pi M^2)."""
    if M < 1 or gamma <= 0:
        raise ValueError("need M >= 1 and gamma > 0")
    if (N // M) / 4 < 1:
        raise NTooSmallError(f"N = {N} is too small for M = {M}")
    c = gamma / (16 * math.pi * M * M)
    lo = max(min_d, math.ceil(c * N))
    hi = N // M
    d = np.arange(hi - hi % 2, lo - 1, -2)
    d = d[d >= max(lo, 2)]
    if len(d) == 0:
        raise NTooSmallError(f"no even d in [{lo}, {hi}]")
    ang = np.mod(d * theta0 + math.pi, 2 * math.pi) - math.pi
    ok = np.abs(ang) <= gamma / M + 1e-12
    if not ok.any():
        raise NTooSmallError(f"no even d <= {hi} brings d*theta0 within {gamma / M:.3g} of 0 mod 2 pi")
    return int(d[np.argmax(ok)])


# -- kernel polynomial ---------------------------------------------------------------------------


@dataclass
class KernelPoly:
    """K = tilde_G / 4 at z = (x + 1/x)/2, stored by its R-coefficients."""

    lam: float
    N: int
    eps: float
    M: int
    d: int
    gamma: float
    beta: float
    c_u: float
    coeffs: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coeffs)
        return int(nz.max()) if len(nz) else 0

    def __call__(self, z):
        """Evaluate via the Fejer form tilde_F(x^d) + c_U U_{d-3}(z)."""
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            x = np.where(np.abs(z) <= 1, np.exp(1j * np.arccos(np.clip(z, -1, 1))), z + np.sign(z) * np.sqrt(np.maximum(z * z - 1, 0)) + 0j)
            y = x**self.d
            tf = np.zeros(z.shape)
            for j in range(2, self.M):
                tf = tf + (self.M - j) / self.M * (y**j + y ** (-j)).real
            u = _u_eval(self.d - 3, z)
            val = (tf + self.c_u * u) / 4
        # off [-1, 1] the term y^(M-1)/M dominates; overflow means a huge positive value
        val = np.where(np.isnan(val) & (np.abs(z) > 1), np.inf, val)
        return float(val) if val.ndim == 0 else val

    def eval_R(self, z):
        """Evaluate sum kappa_t R_t(z) by the three-term recurrence."""
        z = np.asarray(z, dtype=float)
        prev = np.ones_like(z)
        cur = 2 * z + self.beta
        total = self.coeffs[0] * prev
        with np.errstate(over="ignore", invalid="ignore"):
            for t in range(1, len(self.coeffs)):
                total = total + self.coeffs[t] * cur
                prev, cur = cur, 2 * z * cur - prev
        return float(total) if np.ndim(total) == 0 else total

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N,
            "eps": self.eps,
            "M": self.M,
            "d": self.d,
            "gamma": self.gamma,
            "b_inv": self.beta,
            "c_U": self.c_u,
            "degree": self.degree,
        }


def _u_eval(n: int, z):
    """U_n(z) via its recurrence."""
    z = np.asarray(z, dtype=float)
    if n < 0:
        return np.zeros_like(z)
    prev, cur = np.ones_like(z), 2 * z
    if n == 0:
        return prev
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n - 1):
            prev, cur = cur, 2 * z * cur - prev
    return cur


def build_K(lam: float, N: int, eps: float, p: int, q: int, M: int | None = None, gamma: float | None = None) -> KernelPoly:
    """K_lambda^N = tilde_K_M^d / 4; untempered lambda use K_1^N."""
    if not q > p >= 1:
        raise ValueError("kernel construction needs q > p >= 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    M = default_M(eps) if M is None else M + (M % 2)
    gamma = fejer_gamma(M) if gamma is None else gamma
    theta0 = math.acos(lam) if abs(lam) <= 1 else 0.0
    d = find_d(theta0, M, gamma, N, min_d=4)
    beta = math.sqrt(p / q)
    kappa = _r_coefficients_float(M, d, beta) / 4
    return KernelPoly(float(lam), N, eps, M, d, gamma, beta, float(correction_coefficient(M, d, beta)), kappa)


def verify_K(g: BiregularGraph, K: KernelPoly, r: float = 1.0, C: float | None = None, alpha: float = 0.5, norms: np.ndarray | None = None) -> dict:
    """Triangle-inequality bound sum_k |kappa_k| ||R_k(B_q)||_{r->s}, with R_k = sum_{n<=k} a^(n-k) S_n.

    Also checks ||S_n|| <= C (pq)^(-alpha n) for n <= N; with C unset the
    smallest such C is reported instead.
    """
    _check_r(r)
    N = K.N
    s = sn_norms(g, N, r) if norms is None else norms[: N + 1]
    pq = g.p * g.q
    a = math.sqrt(pq)
    n = np.arange(len(s))
    with np.errstate(over="ignore", invalid="ignore"):
        scaled = s * pq ** (alpha * n)
    if C is None:
        C = float(np.max(scaled))
    failing = [int(k) for k in np.flatnonzero(~(scaled <= C * (1 + 1e-12)))]
    # ||R_k|| <= c_k with c_k = c_{k-1} / a + ||S_k||
    ck = np.empty(len(K.coeffs))
    acc = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(len(K.coeffs)):
            acc = acc / a + (s[k] if k < len(s) else math.inf)
            ck[k] = acc
        terms = np.abs(K.coeffs) * ck
    terms = np.where(K.coeffs == 0, 0.0, terms)
    bound = float(np.sum(terms))
    eta = -math.log(bound) / (N * math.log(pq)) if 0 < bound < math.inf else (math.inf if bound == 0 else -math.inf)
    return {
        "hypothesis_holds": not failing,
        "failing_n": failing,
        "C": C,
        "alpha": alpha,
        "r": r,
        "norm_bound": bound,
        "B": 1.0,
        "eta": eta,
    }


# -- certificates ------------------------------------------------------------------------------


@dataclass
class Certificate:
    graph_hash: str
    p: int
    q: int
    n_q: int
    eigenvalue: float
    eps: float
    r: float
    s: float
    C: float
    alpha: float
    N: int
    M: int
    d: int
    gamma: float
    K_at_lambda: float
    K_min_on_spectrum: float
    norm_bound_composition: float
    norm_bound_direct: float
    norm_bound: float
    lower_bound: float
    lower_bound_int: int
    steps: dict[str, bool]
    failing_n: list[int] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(self.steps.values())

    def to_json(self) -> dict:
        out = asdict(self)
        out["valid"] = self.valid
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = str(v)
        return out


def min_mass_set_size(phi: np.ndarray, eps: float) -> int:
    """Smallest |E| with sum_E |phi|^2 > eps: the top-k set by |phi|^2."""
    w = np.sort(np.abs(phi) ** 2)[::-1]
    cum = np.cumsum(w)
    hit = np.flatnonzero(cum > eps)
    return int(hit[0]) + 1 if len(hit) else len(phi) + 1


def _weighted(values: np.ndarray, weights: np.ndarray) -> float:
    """sum values * weights, treating 0 * inf as 0."""
    mask = weights != 0
    with np.errstate(over="ignore", invalid="ignore"):
        return float(np.sum(values[mask] * weights[mask]))


def certify(
    g: BiregularGraph,
    phi: np.ndarray,
    lam: float,
    eps: float,
    r: float = 1.0,
    C: float | None = None,
    alpha: float = 0.5,
    N: int = 400,
    M: int | None = None,
    gamma: float | None = None,
    spectrum: tuple[np.ndarray, np.ndarray] | None = None,
    norms: np.ndarray | None = None,
) -> Certificate:
    """Lower bound on |E| for every E in V_q carrying more than eps of |phi|^2."""
    _check_r(r)
    if not g.q > g.p:
        raise ValueError("certificates need q > p")
    b = bq_matrix(g)
    phi = np.asarray(phi, dtype=float)
    if abs(np.linalg.norm(phi) - 1) > 1e-8 or np.linalg.norm(b @ phi - lam * phi) > 1e-8:
        raise InvalidEigenpairError("phi is not a normalized eigenvector for lambda")
    vals, vecs = eig(g) if spectrum is None else spectrum
    K = build_K(lam, N, eps, g.p, g.q, M, gamma)
    report = verify_K(g, K, r, C, alpha, norms)
    if C is not None and not report["hypothesis_holds"]:
        raise HypothesisError(f"operator-norm hypothesis fails at n = {report['failing_n'][:5]}", report)

    k_spec = np.asarray(K(vals), dtype=float)
    grid = np.linspace(-1, 1, 10_000)
    k_min = float(min(np.min(k_spec), np.min(K(grid))))
    k_lam = float(K(lam))

    # direct bound on ||K(B_q)||_{r->s} from the spectral decomposition
    if np.all(np.isfinite(k_spec)):
        kb = (vecs * k_spec) @ vecs.T
        direct = _op_norm(kb, r) if r != 1 else float(np.max(np.abs(kb)))
        if r != 1:
            direct = riesz_thorin(float(np.max(np.abs(kb))), float(np.max(np.abs(k_spec))), r)
        direct = direct * (1 + 1e-9) + 1e-12
    else:
        direct = math.inf
    bound = min(direct, report["norm_bound"])

    expo = 2 / r - 1
    num = (k_lam + 1) * eps - 1
    if num > 0 and math.isfinite(bound):
        big_l = (num / bound) ** (1 / expo) if math.isfinite(num) else math.inf
    else:
        big_l = 0.0
    if not math.isfinite(big_l):
        big_l = float(len(g.vq))
    l_int = max(0, math.ceil(big_l * (1 - 1e-9) - 1e-9))

    # check each inequality of the chain on the extremal set (top-k by mass)
    order = np.argsort(-np.abs(phi) ** 2, kind="stable")
    k_star = min_mass_set_size(phi, eps)
    psi = np.zeros_like(phi)
    psi[order[:k_star]] = phi[order[:k_star]]
    m = float(psi @ psi)
    coef = vecs.T @ psi
    quad = _weighted(k_spec, coef**2)
    lower = (k_lam + 1) * m * m - m if math.isfinite(k_lam) else math.inf
    norm_r = float(np.sum(np.abs(psi) ** r) ** (1 / r))
    steps = {
        "q_greater_than_p": g.q > g.p,
        "eigenpair": True,
        "hypothesis": report["hypothesis_holds"],
        "kernel_degree": K.degree <= N,
        "kernel_lower_bound": k_min >= -1 - 1e-9,
        "kernel_peak": k_lam >= 1 / eps,
        "spectral_inequality": quad >= lower - 1e-9 * max(1.0, abs(lower)) if math.isfinite(lower) else quad == math.inf,
        "holder_inequality": norm_r <= k_star ** (1 / r - 0.5) * math.sqrt(m) * (1 + 1e-12),
        "norm_inequality": abs(quad) <= bound * norm_r**2 * (1 + 1e-9) + 1e-12,
        "bound_within_graph": big_l <= len(g.vq),
    }
    s_exp = math.inf if r == 1 else r / (r - 1)
    return Certificate(
        graph_hash=g.digest(),
        p=g.p,
        q=g.q,
        n_q=len(g.vq),
        eigenvalue=float(lam),
        eps=eps,
        r=r,
        s=s_exp,
        C=float(report["C"]),
        alpha=alpha,
        N=N,
        M=K.M,
        d=K.d,
        gamma=K.gamma,
        K_at_lambda=k_lam,
        K_min_on_spectrum=k_min,
        norm_bound_composition=float(report["norm_bound"]),
        norm_bound_direct=float(direct),
        norm_bound=float(bound),
        lower_bound=float(big_l),
        lower_bound_int=int(l_int),
        steps=steps,
        failing_n=report["failing_n"][:20],
    )
