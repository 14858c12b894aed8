from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from ma_lab.exactnum import (
    DomainError,
    RationalInterval,
    SqrtSum,
    format_scalar,
    interval_arith,
    parse_rational,
    parse_scalar,
    sqrt_normalize,
    sqrt_of,
)


def _brute_normalize(n):
    scale = 1
    for s in range(1, n + 1):
        if n % (s * s) == 0:
            scale = s
    return scale, n // (scale * scale)


@pytest.mark.parametrize("n,expected", [(8, (2, 2)), (1, (1, 1)), (360, (6, 10)), (49, (7, 1)), (30, (1, 30))])
def test_sqrt_normalize_examples(n, expected):
    assert sqrt_normalize(n) == expected


@given(st.integers(min_value=1, max_value=5000))
def test_sqrt_normalize_matches_brute_force(n):
    assert sqrt_normalize(n) == _brute_normalize(n)


def test_sqrt_normalize_large_cofactor():
    p, q = 1_000_003, 1_000_033  # both prime, beyond the trial-division range
    assert sqrt_normalize(p * p * q) == (p, q)


def test_sqrt_normalize_rejects_nonpositive():
    with pytest.raises((DomainError, ValueError)):
        sqrt_normalize(0)


def test_sqrt_products():
    r2 = sqrt_of(2)
    assert r2 * r2 == 2
    assert r2 * sqrt_of(8) == 4
    a = SqrtSum({1: F(1, 3), 2: F(1, 3)})
    b = SqrtSum({1: F(2, 3), 2: F(-1, 3)})
    assert a + b == 1
    assert (a + b).is_rational()


def test_sqrt_of_rational_and_squares():
    assert sqrt_of(F(1, 4)) == F(1, 2)
    assert sqrt_of(F(1, 2)) * 2 == sqrt_of(2)
    assert sqrt_of(F(8, 9)) == SqrtSum({2: F(2, 3)})


def test_sqrtsum_order_and_sign():
    assert sqrt_of(2) > F(141, 100)
    assert sqrt_of(2) < F(142, 100)
    assert sqrt_of(3) - sqrt_of(2) > 0
    assert (sqrt_of(2) - sqrt_of(3)).sign() == -1
    assert not SqrtSum({})


small = st.fractions(min_value=-5, max_value=5, max_denominator=12)
sums = st.dictionaries(st.sampled_from([1, 2, 3, 5, 6, 7]), small, max_size=3).map(SqrtSum)


@given(sums, sums, sums)
def test_ring_laws(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) * c == a * c + b * c
    assert (a - a).is_zero()


@given(sums)
def test_format_parse_roundtrip(a):
    back = parse_scalar(format_scalar(a))
    assert back == a


def test_parse_scalar_forms():
    assert parse_scalar("1/3*sqrt(2)") == SqrtSum({2: F(1, 3)})
    assert isinstance(parse_scalar("3/4"), F)
    assert parse_scalar("-1/2+1/3*sqrt(8)") == SqrtSum({1: F(-1, 2), 2: F(2, 3)})
    with pytest.raises(ValueError):
        parse_scalar("1/0")
    with pytest.raises(ValueError):
        parse_rational("abc")


def test_interval_examples():
    assert interval_arith(RationalInterval(0, F(1, 3)), None, "square") == RationalInterval(0, F(1, 9))
    quarter = RationalInterval.point(F(1, 4))
    assert interval_arith(quarter, RationalInterval(0, 0), "add") == quarter
    assert RationalInterval(0, F(1, 3)).scale(2).square() == RationalInterval(0, F(4, 9))


def test_interval_errors():
    with pytest.raises(DomainError):
        RationalInterval(1, 0)
    with pytest.raises(DomainError):
        RationalInterval(0, 1).mul_nonneg(RationalInterval(-1, 1))
    with pytest.raises(DomainError):
        RationalInterval(-1, 1).reciprocal()


@given(small, small, small, small)
def test_interval_add_and_square_enclose(a, b, c, d):
    x, y = RationalInterval(min(a, b), max(a, b)), RationalInterval(min(c, d), max(c, d))
    for p in (x.lo, x.hi, (x.lo + x.hi) / 2):
        for q in (y.lo, y.hi):
            assert p + q in x + y
        assert p * p in x.square()
