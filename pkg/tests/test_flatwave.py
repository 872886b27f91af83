import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discwave.chebyshev import special_family, sym_to_z
from discwave.flatwave import (
    DegenerateParameterError,
    apply_matrix,
    dalembert_decompose,
    energy,
    energy_lr,
    fundamental_solution,
    matrix_power,
    propagator_matrix,
    solve,
    spectral_eval,
    spectral_solve,
    wave_residual,
)
from discwave.laurent import STANDARD_BASIS, BasisPair, LaurentPoly

H = Fraction(1, 2)
ONE = LaurentPoly({0: 1})
M1 = LaurentPoly({1: H, -1: -H})
DELTA = LaurentPoly({0: 1})
ZERO = LaurentPoly()
Z = LaurentPoly({1: H, -1: H})  # z = (x + 1/x)/2 as a Laurent polynomial

coef = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def zfuncs(radius):
    return st.dictionaries(st.integers(-radius, radius), coef, max_size=2 * radius + 1).map(LaurentPoly)


def test_delta_position():
    grid = solve(STANDARD_BASIS, DELTA, ZERO, (0, 3))
    assert grid.slice(3) == LaurentPoly({3: H, -3: H})


def test_delta_velocity():
    grid = solve(STANDARD_BASIS, ZERO, DELTA, (0, 2))
    assert grid.slice(2) == LaurentPoly({1: 1, -1: 1})


def test_zero_data():
    grid = solve(BasisPair.of(ONE, LaurentPoly({1: 1})), ZERO, ZERO, (-4, 4))
    assert all(grid.slice(t).is_zero() for t in grid.times)


def test_initial_functionals_recover_data():
    g1 = LaurentPoly({0: 1, 2: Fraction(-1, 3)})
    g2 = LaurentPoly({-1: 2, 1: Fraction(1, 5)})
    for basis in (STANDARD_BASIS, BasisPair.of(ONE, LaurentPoly({1: 1}))):
        grid = solve(basis, g1, g2, (-3, 3))
        assert grid.initial_functional(basis.h1) == g1
        assert grid.initial_functional(basis.h2) == g2


def test_fundamental_solution_values():
    assert fundamental_solution(M1, 4, 4) == H
    assert all(fundamental_solution(ONE, n, 0) == 0 for n in range(-3, 4))
    # (x^3 - x^-3)/(x - 1/x) = x^2 + 1 + x^-2 has no x^1 term
    assert fundamental_solution(ONE, 1, 3) == 0
    assert fundamental_solution(ONE, 2, 3) == 1


def test_propagator_standard():
    P = propagator_matrix(STANDARD_BASIS)
    assert P == ((Z, ONE), (Z * Z - ONE, Z))


@pytest.mark.parametrize("t", range(0, 8))
def test_propagator_power_diagonal(t):
    P = matrix_power(propagator_matrix(STANDARD_BASIS), t)
    T = special_family("T")(t)
    U = special_family("U")(t)  # h = 1 gives U_{t-1}
    assert sym_to_z(P[0][0]) == T
    assert sym_to_z(P[1][1]) == T
    assert sym_to_z(P[0][1]) == U


def test_propagator_matches_solve_other_basis():
    basis = BasisPair.of(ONE, LaurentPoly({1: 1}))
    g1 = LaurentPoly({0: 1, 2: Fraction(1, 3)})
    g2 = LaurentPoly({-1: 2})
    grid = solve(basis, g1, g2, (0, 5))
    P = propagator_matrix(basis)
    for t in range(6):
        got = apply_matrix(matrix_power(P, t), (g1, g2))
        assert got == (grid.initial_functional(basis.h1, t), grid.initial_functional(basis.h2, t))


def test_dalembert_delta():
    grid = solve(STANDARD_BASIS, DELTA, ZERO, (-3, 3))
    wp, wm = dalembert_decompose(grid)
    for k in range(-8, 9):
        expect = H if k == 0 else 0
        assert wp(k) == expect and wm(k) == expect


def test_dalembert_velocity_recombines():
    grid = solve(STANDARD_BASIS, ZERO, DELTA, (-6, 6))
    wp, wm = dalembert_decompose(grid)
    for t in grid.times:
        for n in range(-9, 10):
            assert wp(n - t) + wm(n + t) == grid[n, t]


def test_dalembert_zero():
    wp, wm = dalembert_decompose(solve(STANDARD_BASIS, ZERO, ZERO, (0, 1)))
    assert all(wp(k) == 0 and wm(k) == 0 for k in range(-5, 6))


def test_energy_examples():
    grid = solve(STANDARD_BASIS, DELTA, ZERO, (-6, 6))
    assert energy(grid, 0) == H
    assert energy(grid, 5) == H
    assert energy_lr(*dalembert_decompose(grid)) == H
    assert energy(solve(STANDARD_BASIS, ZERO, ZERO, (0, 1)), 0) == 0


def test_spectral_examples():
    xi = cmath.exp(0.7j)
    g_inf, g_minf = spectral_solve(2, xi + 1 / xi, xi)
    assert abs(g_inf - 1) < 1e-12 and abs(g_minf - 1) < 1e-12
    g_inf, g_minf = spectral_solve(1, xi, xi)
    assert abs(g_inf - 1) < 1e-12 and abs(g_minf) < 1e-12


@pytest.mark.parametrize("xi", [1.0, -1.0])
def test_spectral_degenerate(xi):
    with pytest.raises(DegenerateParameterError):
        spectral_solve(1, 1, xi)


def test_spectral_recurrence_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
        xi = complex(*rng.normal(size=2))
        gi, gm = spectral_solve(a, b, xi)
        assert abs(spectral_eval(gi, gm, xi, 0) - a) < 1e-10
        assert abs(spectral_eval(gi, gm, xi, 1) - b) < 1e-10 * max(1, abs(b))
        for t in range(-20, 21):
            lhs = spectral_eval(gi, gm, xi, t + 1) + spectral_eval(gi, gm, xi, t - 1)
            rhs = (xi + 1 / xi) * spectral_eval(gi, gm, xi, t)
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=40, deadline=None)
@given(zfuncs(4), zfuncs(4))
def test_residual_zero_and_finite_speed(f, g):
    r = 3
    f = LaurentPoly({k: v for k, v in f.items() if abs(k) <= r})
    g = LaurentPoly({k: v for k, v in g.items() if abs(k) <= r + 1})
    grid = solve(STANDARD_BASIS, f, g, (-30, 30))
    for t in range(-29, 30):
        assert grid.support_radius(t) <= r + abs(t)
        for n in range(-r - abs(t) - 2, r + abs(t) + 3):
            assert wave_residual(grid, n, t) == 0


@settings(max_examples=40, deadline=None)
@given(zfuncs(5), zfuncs(5))
def test_energy_conserved(f, g):
    grid = solve(STANDARD_BASIS, f, g, (-6, 6))
    e0 = energy(grid, 0)
    assert all(energy(grid, t) == e0 for t in (-5, 3, 5))
    assert energy_lr(*dalembert_decompose(grid)) == e0


@given(st.integers(-6, 6), st.integers(0, 8))
def test_time_symmetry(n, t):
    assert fundamental_solution(M1, n, -t) == fundamental_solution(M1, n, t)
    assert fundamental_solution(ONE, n, -t) == -fundamental_solution(ONE, n, t)


@settings(max_examples=30, deadline=None)
@given(zfuncs(3), zfuncs(3), coef, coef)
def test_dalembert_parity_ambiguity(f, g, even, odd):
    grid = solve(STANDARD_BASIS, f, g, (-4, 4))
    wp, wm = dalembert_decompose(grid)
    # a constant per parity class can move from one component to the other
    wp2 = wp.shifted(even, odd)
    wm2 = wm.shifted(-even, -odd)
    for t in grid.times:
        for n in range(-8, 9):
            assert wp2(n - t) + wm2(n + t) == grid[n, t]
    diff = [wp2(k) - wp(k) for k in range(-6, 7)]
    assert all(d == (even if k % 2 == 0 else odd) for k, d in zip(range(-6, 7), diff))
