import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from discwave.exactnum import (
    IncompatibleRingError,
    NotInvertibleError,
    QuadExt,
    format_scalar,
    parse_scalar,
    quad_inv,
    quad_mul,
    scalar_from_json,
    scalar_to_json,
    sqrt_in_ring,
    to_float,
)

small = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def quads(p=2, q=3):
    return st.builds(lambda a, b, c, d: QuadExt(p, q, a, b, c, d), small, small, small, small)


def test_sqrt_squared():
    s = QuadExt.sqrt_p(2, 3)
    assert quad_mul(s, s) == 2


def test_sqrt_p_times_sqrt_q():
    prod = quad_mul(QuadExt.sqrt_p(2, 3), QuadExt.sqrt_q(2, 3))
    assert prod.coeffs == (0, 0, 0, 1)


def test_conjugate_product():
    x = QuadExt(2, 3, 1, 1)
    y = QuadExt(2, 3, 1, -1)
    prod = quad_mul(x, y)
    assert prod == -1
    # float cross-check
    assert abs(float(x) * float(y) + 1) < 1e-12


def test_tag_mismatch():
    with pytest.raises(IncompatibleRingError):
        quad_mul(QuadExt(2, 3, 1), QuadExt(2, 5, 1))


def test_inverse_examples():
    assert quad_inv(QuadExt.sqrt_q(3, 2)) == QuadExt(3, 2, 0, 0, Fraction(1, 2))
    assert quad_inv(QuadExt(2, 3, 1)) == 1
    x = QuadExt(3, 2, 2, 1)
    inv = quad_inv(x)
    assert inv == QuadExt(3, 2, 2, -1)
    assert abs(float(inv) - 1 / (2 + math.sqrt(3))) < 1e-12


def test_zero_divisor_reported():
    # with p = 4 the element 2 + sqrt(p) kills 2 - sqrt(p)
    with pytest.raises(NotInvertibleError):
        quad_inv(QuadExt(4, 3, 2, 1))
    with pytest.raises(NotInvertibleError):
        quad_inv(QuadExt(2, 3))


def test_to_float():
    assert to_float(Fraction(1, 2)) == 0.5
    assert abs(to_float(QuadExt.sqrt_p(2, 3)) - 1.41421356237) < 1e-10
    prod = quad_mul(QuadExt(2, 3, 1, 1), QuadExt(2, 3, 1, -1))
    assert abs(to_float(prod) + 1.0) < 1e-12


def test_promotion():
    x = QuadExt(2, 3, 1, 1)
    assert isinstance(x + Fraction(1, 2), QuadExt)
    assert isinstance(x * 0.5, float)


def test_sqrt_in_ring():
    assert sqrt_in_ring(9, 2, 3) == 3
    s = sqrt_in_ring(6, 2, 3)
    assert s * s == 6
    with pytest.raises(ValueError):
        sqrt_in_ring(5, 2, 3)


@pytest.mark.parametrize(
    "value",
    [Fraction(-7, 3), Fraction(0), QuadExt(2, 3, Fraction(1, 2), -1, 3, Fraction(-5, 7)), 0.1, -2.5e-300],
)
def test_json_round_trip(value):
    text = json.dumps(scalar_to_json(value))
    back = scalar_from_json(json.loads(text))
    assert back == value and type(back) is type(value)


def test_big_integers_survive_json():
    v = Fraction(3**80, 2**70)
    assert scalar_from_json(json.loads(json.dumps(scalar_to_json(v)))) == v


@pytest.mark.parametrize("value", [Fraction(5, 9), QuadExt(2, 5, -1, Fraction(2, 3), 0, 4), QuadExt(3, 2, 0, 0, -1)])
def test_format_parse_round_trip(value):
    assert parse_scalar(format_scalar(value)) == value


@settings(max_examples=200, deadline=None)
@given(quads(), quads(), quads())
def test_ring_axioms(x, y, z):
    assert quad_mul(quad_mul(x, y), z) == quad_mul(x, quad_mul(y, z))
    assert quad_mul(x, y + z) == quad_mul(x, y) + quad_mul(x, z)
    assert quad_mul(x, y) == quad_mul(y, x)


@settings(max_examples=1000, deadline=None)
@given(quads(2, 3))
def test_inverse_round_trip(x):
    if not x:
        return
    # Q[sqrt 2, sqrt 3] is a field, so every nonzero element is invertible
    assert quad_mul(x, quad_inv(x)) == 1


@settings(max_examples=200, deadline=None)
@given(quads(2, 5), quads(2, 5))
def test_float_homomorphism(x, y):
    for exact, approx in ((x + y, float(x) + float(y)), (quad_mul(x, y), float(x) * float(y))):
        assert abs(to_float(exact) - approx) <= 1e-10 * max(1.0, abs(approx))
