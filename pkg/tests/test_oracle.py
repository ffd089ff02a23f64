import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdlsq.layout import StaggeredMatrix, StaggeredVector
from mdlsq.md_arith import MultiDouble, two_prod, two_sum
from mdlsq.oracle import (
    DyadicRational,
    exact_inf_norm,
    exact_lstsq_small,
    exact_matvec,
    exact_normal_residual,
    exact_residual,
    exact_upper_inverse,
    exact_value,
    log2_relative_error,
    relative_error,
)

finite = st.floats(allow_nan=False, allow_infinity=False)
dyadics = st.builds(DyadicRational, st.integers(-(2**200), 2**200), st.integers(-300, 300))


def test_exact_value_of_expansion():
    v = exact_value(MultiDouble((1.0, 2.0**-60)))
    assert v.to_fraction() == Fraction(2**60 + 1, 2**60)
    assert v == DyadicRational(2**60 + 1, -60)


def test_canonical_form():
    assert DyadicRational(12, 0) == DyadicRational(3, 2)
    assert DyadicRational(12, 0).num == 3
    assert DyadicRational(0, 17).exp == 0


@given(finite)
def test_float_round_trip(x):
    d = DyadicRational.from_float(x)
    assert float(d) == x
    assert d.to_fraction() == Fraction(x)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        DyadicRational.from_float(math.inf)
    with pytest.raises(ValueError):
        DyadicRational.coerce(Fraction(1, 3))


@given(dyadics, dyadics, dyadics)
def test_associative_commutative(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a - a) == DyadicRational(0)


@given(dyadics, dyadics)
def test_ordering_matches_fractions(a, b):
    assert (a < b) == (a.to_fraction() < b.to_fraction())
    assert (a + b).to_fraction() == a.to_fraction() + b.to_fraction()


@given(finite, finite)
def test_two_sum_against_oracle(a, b):
    s, e = two_sum(a, b)
    if math.isfinite(s):
        assert exact_value(s) + exact_value(e) == exact_value(a) + exact_value(b)


@given(st.floats(min_value=-1e150, max_value=1e150).filter(lambda v: v == 0 or abs(v) > 1e-140),
       st.floats(min_value=-1e150, max_value=1e150).filter(lambda v: v == 0 or abs(v) > 1e-140))
def test_two_prod_against_oracle(a, b):
    p, e = two_prod(a, b)
    assert exact_value(p) + exact_value(e) == exact_value(a) * exact_value(b)


@pytest.mark.parametrize("m", [1, 2, 4, 8])
@given(dyadics)
def test_multidouble_round_trip(m, d):
    if not d:
        assert d.to_multidouble(m).to_fraction() == 0
        return
    if not -900 < d.log2_abs() < 900:
        return
    back = exact_value(d.to_multidouble(m))
    assert log2_relative_error(back, d) <= -53 * m


def test_relative_error_helpers():
    assert relative_error(DyadicRational(3), DyadicRational(4)) == 0.25
    assert relative_error(Fraction(1, 2), 0) == 0.5
    assert log2_relative_error(DyadicRational(5, -3), DyadicRational(5, -3)) == -math.inf
    assert log2_relative_error(DyadicRational(2**400 + 1, -400), DyadicRational(1)) == -400


def test_log2_abs_beyond_float_range():
    assert DyadicRational(1, -5000).log2_abs() == -5000
    assert DyadicRational(3, 2000).log2_abs() == pytest.approx(2000 + math.log2(3))


def test_residual_of_identity_is_zero():
    x = StaggeredVector.from_array([0.5, -1.25, 3.0], 4)
    I = StaggeredMatrix.identity(3, 4)
    assert all(not r for r in exact_residual(I, x, x))


def test_matvec_complex_entries():
    A = [[complex(1, 1), 2.0], [0.0, complex(0, 1)]]
    x = [complex(0, 1), 1.0]
    y = exact_matvec(A, x)
    assert y[0] == (DyadicRational(1), DyadicRational(1))
    assert y[1] == (DyadicRational(0), DyadicRational(1))


def test_lstsq_two_by_one():
    assert exact_lstsq_small([[1.0], [1.0]], [0.0, 2.0]) == [Fraction(1)]


def test_lstsq_identity():
    b = [0.5, -3.0, 7.25]
    I = [[float(i == j) for j in range(3)] for i in range(3)]
    assert exact_lstsq_small(I, b) == [Fraction(v) for v in b]


def test_lstsq_satisfies_normal_equations():
    A = [[1.0, 2.0], [3.0, -1.0], [0.5, 4.0], [2.0, 2.0]]
    b = [1.0, 0.0, -2.0, 3.0]
    x = exact_lstsq_small(A, b)
    ra = [Fraction(bi) - sum(Fraction(a) * xj for a, xj in zip(row, x)) for row, bi in zip(A, b)]
    for j in range(2):
        assert sum(Fraction(A[i][j]) * ra[i] for i in range(4)) == 0


def test_lstsq_guards():
    with pytest.raises(ValueError):
        exact_lstsq_small([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        exact_lstsq_small([[1.0] * 13], [1.0])
    with pytest.raises(ValueError):
        exact_lstsq_small([[complex(1, 1)]], [1.0])


def test_normal_residual_zero_at_solution():
    A = [[1.0], [1.0]]
    assert exact_normal_residual(A, [1.0], [0.0, 2.0]) == [DyadicRational(0)]
    assert exact_normal_residual(A, [0.5], [0.0, 2.0]) == [DyadicRational(1)]


def test_upper_inverse_and_norm():
    V = exact_upper_inverse([[2.0, 1.0], [0.0, 4.0]])
    assert V == [[Fraction(1, 2), Fraction(-1, 8)], [0, Fraction(1, 4)]]
    assert exact_inf_norm(V) == Fraction(5, 8)
