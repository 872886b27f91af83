import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discwave.chebyshev import (
    ChebFamily,
    UnsupportedMeasureError,
    cheb,
    cheb_recurrence_step,
    closed_form_density,
    ortho_measure,
    pushforward_to_z,
    quad_inner,
    quad_inner_z,
    residue_value,
    special_family,
    sym_to_z,
    z_to_x,
)
from discwave.laurent import LaurentPoly

H = Fraction(1, 2)
X = LaurentPoly({1: 1})
XI = LaurentPoly({-1: 1})


def zpoly(*coeffs):
    return LaurentPoly(dict(enumerate(coeffs)))


FAMILIES = [
    ("T", {}),
    ("U", {}),
    ("V", {}),
    ("W", {}),
    ("F", {"q": 2}),
    ("F", {"q": 3}),
    ("F", {"q": 4}),
    ("MP", {"binv": Fraction(1, 2)}),
    ("MP", {"binv": 2}),
    ("H", {"p": 2, "q": 3}),
    ("H", {"p": 3, "q": 2}),
    ("R", {"p": 2, "q": 3}),
]


def defining_identity(fam: ChebFamily, t: int) -> bool:
    lhs = z_to_x(fam(t)) * (X - XI)
    w = LaurentPoly({-k: v for k, v in fam.h.items()})
    return lhs == fam.h.shift(t) - w.shift(-t)


def test_first_kind_t2():
    assert cheb(LaurentPoly({1: H, -1: -H}), 2) == zpoly(-1, 0, 2)


@pytest.mark.parametrize("t", range(1, 9))
def test_h_one_is_shifted_second_kind(t):
    U = [zpoly(1), zpoly(0, 2)]
    for _ in range(t):
        U.append(cheb_recurrence_step(U[-1], U[-2]))
    got = cheb(LaurentPoly({0: 1}), t)
    assert got == U[t - 1]
    assert got.max_deg() == t - 1


def test_third_kind_family():
    V = special_family("V")
    assert V.h == X - 1
    # V_0 = 1, V_1 = 2z - 1
    assert V(0) == zpoly(1) and V(1) == zpoly(-1, 2)


def test_recurrence_examples():
    assert cheb_recurrence_step(zpoly(0, 1), zpoly(1)) == zpoly(-1, 0, 2)
    assert cheb_recurrence_step(zpoly(0, 2), zpoly(1)) == zpoly(-1, 0, 4)


@pytest.mark.parametrize("name,params", FAMILIES)
def test_recurrence_matches_cheb(name, params):
    fam = special_family(name, **params)
    for t in range(1, 12):
        assert cheb_recurrence_step(fam(t), fam(t - 1)) == fam(t + 1)


@pytest.mark.parametrize("name,params", FAMILIES)
def test_defining_identity(name, params):
    fam = special_family(name, **params)
    for t in range(0, 41, 5):
        assert defining_identity(fam, t)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_F_in_terms_of_U(q):
    F = special_family("F", q=q)
    Ush = special_family("U")  # U(t) is U_{t-1}
    for t in range(2, 12):
        assert F(t) == Ush(t + 1) - Ush(t - 1) * Fraction(1, q)


def test_T_in_terms_of_U():
    T = special_family("T")
    Ush = special_family("U")
    for t in range(2, 12):
        assert T(t) == (Ush(t + 1) - Ush(t - 1)) * H


def test_arcsine_measure():
    mu = ortho_measure(special_family("T"))
    theta = np.linspace(0.1, 3.0, 7)
    assert np.allclose(mu.density_theta(theta), 4.0)
    nu = pushforward_to_z(mu)
    z = np.linspace(-0.9, 0.9, 11)
    assert np.allclose(nu.density(z), 4 / np.sqrt(1 - z * z))


def test_semicircle_pushforward():
    nu = pushforward_to_z(ortho_measure(special_family("U")))
    z = np.linspace(-0.95, 0.95, 21)
    assert np.allclose(nu.density(z), 4 * np.sqrt(1 - z * z))


@pytest.mark.parametrize(
    "name,params,tag",
    [
        ("V", {}, "third-kind"),
        ("W", {}, "fourth-kind"),
        ("F", {"q": 3}, "kesten-mckay"),
        ("MP", {"binv": Fraction(1, 2)}, "marchenko-pastur"),
        ("MP", {"binv": 2}, "marchenko-pastur"),
        ("H", {"p": 2, "q": 3}, "biregular"),
        ("H", {"p": 3, "q": 2}, "biregular"),
    ],
)
def test_pushforward_matches_closed_form(name, params, tag):
    nu = pushforward_to_z(ortho_measure(special_family(name, **params)))
    z = np.linspace(-0.97, 0.97, 33)
    assert np.allclose(nu.density(z), closed_form_density(tag, z, **{k: float(v) for k, v in params.items()}))


def test_marchenko_pastur_atom():
    mu = ortho_measure(special_family("MP", binv=2))
    assert len(mu.atoms) == 1
    xi, mass = mu.atoms[0]
    b = 0.5
    assert abs(xi + b) < 1e-15
    assert abs(mass - 4 * math.pi * (1 - b * b)) < 1e-12
    nu = pushforward_to_z(mu)
    assert abs(nu.atoms[0][0] + (b + 1 / b) / 2) < 1e-12


def test_no_atom_for_small_binv():
    assert ortho_measure(special_family("MP", binv=Fraction(1, 2))).atoms == []


def test_unit_circle_root_rejected():
    fam = ChebFamily("generic", LaurentPoly({1: 1, -1: 1}), 1, (1j, -1j))
    with pytest.raises(UnsupportedMeasureError):
        ortho_measure(fam)


def test_kesten_mckay_degenerates_to_arcsine():
    # h = x - 1/x is twice the first-kind h, so the weight is a quarter of 4 d theta
    km = pushforward_to_z(ortho_measure(special_family("F", q=1)))
    arc = pushforward_to_z(ortho_measure(special_family("T")))
    z = np.cos(np.pi * (np.arange(64) + 0.5) / 64)
    assert np.max(np.abs(4 * km.density(z) - arc.density(z))) < 1e-12 * np.max(arc.density(z))


def test_F_orthogonality_example():
    fam = special_family("F", q=3)
    mu = ortho_measure(fam)
    assert abs(quad_inner(fam(2), fam(5), mu, 4096)) < 1e-8
    assert quad_inner(fam(0), fam(0), mu, 4096) > 0


def test_atom_needed_for_orthogonality():
    fam = special_family("MP", binv=2)
    mu = ortho_measure(fam)
    assert abs(quad_inner(fam(1), fam(3), mu)) < 1e-8
    without = quad_inner(fam(1), fam(3), mu, atoms=False)
    assert abs(without - residue_value(0.0, 2.0, 1, 3)) < 1e-8
    assert abs(without) > 1e-3


@pytest.mark.parametrize("ainv,binv", [(0.0, 2.0), (0.25, 3.0), (1 / math.sqrt(6), math.sqrt(1.5))])
def test_residue_matches_atom_share(ainv, binv):
    # a.c. part of <f_k, f_n> is minus the atom contribution, by orthogonality
    fam = ChebFamily("generic", LaurentPoly({1: 1, 0: binv - ainv, -1: -ainv * binv}), 1, (ainv, -binv))
    mu = ortho_measure(fam)
    for k, n in ((0, 1), (1, 3), (2, 5)):
        ac = quad_inner(fam(k), fam(n), mu, atoms=False)
        assert abs(ac - residue_value(ainv, binv, n, k)) < 1e-8


def test_z_line_quadrature_agrees():
    # the z-line measure covers one sheet, i.e. half of the circle integral
    fam = special_family("H", p=3, q=2)
    mu = ortho_measure(fam)
    nu = pushforward_to_z(mu)
    for k, n in ((0, 0), (1, 1), (2, 4)):
        assert abs(2 * quad_inner_z(fam(k), fam(n), nu) - quad_inner(fam(k), fam(n), mu)) < 1e-8


def test_min_nodes():
    fam = special_family("T")
    with pytest.raises(ValueError):
        quad_inner(fam(0), fam(0), ortho_measure(fam), nodes=32)


@pytest.mark.parametrize("name,params", FAMILIES)
def test_orthogonality(name, params):
    fam = special_family(name, **params)
    mu = ortho_measure(fam)
    for k in range(13):
        for n in range(k + 1, 13):
            assert abs(quad_inner(fam(k), fam(n), mu, 4096)) < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=5), min_size=1, max_size=6))
def test_z_round_trip(coeffs):
    p = zpoly(*coeffs)
    assert sym_to_z(z_to_x(p)) == p
