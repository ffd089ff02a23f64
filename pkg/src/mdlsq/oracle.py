"""Exact dyadic-rational arithmetic for verification.

Every binary64 value, and so every multiple double, is a dyadic rational
``num * 2**exp``.  Sums, differences and products of dyadics stay dyadic, so
residuals and normal equations are evaluated with no rounding at all.  Only
the final solve of the normal equations leaves the dyadics, via fraction-free
elimination that returns :class:`fractions.Fraction` values.
"""

import math
from fractions import Fraction
from functools import total_ordering

from .md_arith import ComplexMultiDouble, MultiDouble


@total_ordering
class DyadicRational:
    """Exact value ``num * 2**exp`` with odd ``num`` (or zero with exp 0)."""

    __slots__ = ("num", "exp")

    def __init__(self, num=0, exp=0):
        num = int(num)
        exp = int(exp)
        if num == 0:
            exp = 0
        else:
            tz = (num & -num).bit_length() - 1
            num >>= tz
            exp += tz
        self.num = num
        self.exp = exp

    @classmethod
    def from_float(cls, x):
        x = float(x)
        if not math.isfinite(x):
            raise ValueError("non-finite value has no exact dyadic form")
        p, q = x.as_integer_ratio()
        return cls(p, -(q.bit_length() - 1))

    @classmethod
    def coerce(cls, x):
        if isinstance(x, DyadicRational):
            return x
        if isinstance(x, int):
            return cls(x)
        if isinstance(x, Fraction):
            q = x.denominator
            if q & (q - 1):
                raise ValueError(f"{x} is not dyadic")
            return cls(x.numerator, -(q.bit_length() - 1))
        if isinstance(x, MultiDouble):
            return exact_value(x)
        return cls.from_float(x)

    def __add__(self, other):
        o = DyadicRational.coerce(other)
        if self.num == 0:
            return o
        if o.num == 0:
            return self
        e = min(self.exp, o.exp)
        return DyadicRational((self.num << (self.exp - e)) + (o.num << (o.exp - e)), e)

    __radd__ = __add__

    def __neg__(self):
        return DyadicRational(-self.num, self.exp)

    def __sub__(self, other):
        return self + (-DyadicRational.coerce(other))

    def __rsub__(self, other):
        return DyadicRational.coerce(other) - self

    def __mul__(self, other):
        o = DyadicRational.coerce(other)
        return DyadicRational(self.num * o.num, self.exp + o.exp)

    __rmul__ = __mul__

    def __abs__(self):
        return DyadicRational(abs(self.num), self.exp)

    def __bool__(self):
        return self.num != 0

    def sign(self):
        return (self.num > 0) - (self.num < 0)

    def __eq__(self, other):
        try:
            o = DyadicRational.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.num == o.num and self.exp == o.exp

    def __lt__(self, other):
        return (self - other).num < 0

    def __hash__(self):
        return hash(self.to_fraction())

    def to_fraction(self):
        if self.exp >= 0:
            return Fraction(self.num << self.exp)
        return Fraction(self.num, 1 << -self.exp)

    def __float__(self):
        return float(self.to_fraction())

    def log2_abs(self):
        """log2 |x| as a float, valid far outside the binary64 range."""
        if self.num == 0:
            return -math.inf
        nb = abs(self.num).bit_length()
        top = abs(self.num) >> max(nb - 60, 0)
        return math.log2(top) + max(nb - 60, 0) + self.exp

    def to_multidouble(self, m):
        """Nearest m-limb expansion."""
        return MultiDouble.from_fraction(self.to_fraction(), m)

    def __repr__(self):
        return f"DyadicRational({self.num}, {self.exp})"


ZERO = DyadicRational(0)


def exact_value(x):
    """Exact dyadic value of a float, a limb sequence or a MultiDouble."""
    if isinstance(x, MultiDouble):
        x = x.limbs
    if isinstance(x, (int, float)):
        return DyadicRational.from_float(x)
    total = ZERO
    for v in x:
        total = total + DyadicRational.from_float(v)
    return total


def exact_sum(values):
    total = ZERO
    for v in values:
        total = total + v
    return total


def relative_error(computed, exact):
    """|computed - exact| / |exact| as a float (absolute error when exact is 0)."""
    c = DyadicRational.coerce(computed) if not isinstance(computed, Fraction) else computed
    e = DyadicRational.coerce(exact) if not isinstance(exact, Fraction) else exact
    cf = c.to_fraction() if isinstance(c, DyadicRational) else c
    ef = e.to_fraction() if isinstance(e, DyadicRational) else e
    if ef == 0:
        return float(abs(cf))
    return float(abs(cf - ef) / abs(ef))


def log2_relative_error(computed, exact):
    """log2 of the relative error, robust where the float result would underflow."""
    c = DyadicRational.coerce(computed)
    e = DyadicRational.coerce(exact)
    d = c - e
    if not d:
        return -math.inf
    if not e:
        return d.log2_abs()
    return d.log2_abs() - e.log2_abs()


# ----------------------------------------------------------------------
# matrices as nested lists of exact values; complex entries are (re, im)


def _entries(A):
    """Nested lists of exact entries from a StaggeredMatrix or nested input.

    Complex entries become (re, im) pairs of dyadics.
    """
    from .layout import StaggeredMatrix, StaggeredVector

    if isinstance(A, StaggeredVector):
        return [row[0] for row in _entries(A.as_matrix())]
    if isinstance(A, StaggeredMatrix):
        out = []
        for i in range(A.rows):
            row = []
            for j in range(A.cols):
                re = exact_value(A.re[:, i, j])
                row.append((re, exact_value(A.im[:, i, j])) if A.is_complex else re)
            out.append(row)
        return out
    return [_entry_row(r) for r in A]


def _entry_row(r):
    if isinstance(r, (list, tuple)):
        return [_entry(v) for v in r]
    return _entry(r)


def _entry(v):
    if isinstance(v, ComplexMultiDouble):
        return (exact_value(v.re), exact_value(v.im))
    if isinstance(v, complex):
        return (DyadicRational.from_float(v.real), DyadicRational.from_float(v.imag))
    if isinstance(v, tuple):
        return (DyadicRational.coerce(v[0]), DyadicRational.coerce(v[1]))
    return DyadicRational.coerce(v)


def _cmul(a, b):
    if isinstance(a, tuple) or isinstance(b, tuple):
        ar, ai = a if isinstance(a, tuple) else (a, ZERO)
        br, bi = b if isinstance(b, tuple) else (b, ZERO)
        return (ar * br - ai * bi, ar * bi + ai * br)
    return a * b


def _cadd(a, b):
    if isinstance(a, tuple) or isinstance(b, tuple):
        ar, ai = a if isinstance(a, tuple) else (a, ZERO)
        br, bi = b if isinstance(b, tuple) else (b, ZERO)
        return (ar + br, ai + bi)
    return a + b


def _cneg(a):
    return (-a[0], -a[1]) if isinstance(a, tuple) else -a


def _conj(a):
    return (a[0], -a[1]) if isinstance(a, tuple) else a


def exact_matvec(A, x):
    """Exact A x for nested or staggered inputs."""
    A = _entries(A)
    x = _entries(x)
    out = []
    for row in A:
        acc = ZERO
        for a, v in zip(row, x):
            acc = _cadd(acc, _cmul(a, v))
        out.append(acc)
    return out


def exact_residual(A, x, b):
    """Exact b - A x, one dyadic (or (re, im) pair) per row."""
    ax = exact_matvec(A, x)
    return [_cadd(bi, _cneg(v)) for bi, v in zip(_entries(b), ax)]


def exact_normal_residual(A, x, b):
    """Exact A^H (b - A x), the least squares optimality residual."""
    r = exact_residual(A, x, b)
    A = _entries(A)
    cols = len(A[0])
    out = []
    for j in range(cols):
        acc = ZERO
        for i in range(len(A)):
            acc = _cadd(acc, _cmul(_conj(A[i][j]), r[i]))
        out.append(acc)
    return out


def exact_lstsq_small(A, b):
    """Exact solution of A^T A x = A^T b for real A with at most 12 columns.

    Returns a list of Fractions.  The normal equations are scaled to integers
    and solved by Bareiss fraction-free elimination.
    """
    A = _entries(A)
    b = _entries(b)
    if any(isinstance(v, tuple) for row in A for v in row) or any(isinstance(v, tuple) for v in b):
        raise ValueError("exact_lstsq_small supports real systems only")
    rows, cols = len(A), len(A[0])
    if cols > 12:
        raise ValueError("exact_lstsq_small is limited to 12 columns")
    if len(b) != rows:
        raise ValueError("right-hand side length does not match the matrix")
    G = [[exact_sum(A[k][i] * A[k][j] for k in range(rows)) for j in range(cols)] for i in range(cols)]
    h = [exact_sum(A[k][i] * b[k] for k in range(rows)) for i in range(cols)]
    aug = [G[i] + [h[i]] for i in range(cols)]
    emin = min((v.exp for row in aug for v in row if v), default=0)
    M = [[v.num << (v.exp - emin) if v else 0 for v in row] for row in aug]
    return _bareiss_solve(M, cols)


def _bareiss_solve(M, n):
    prev = 1
    for k in range(n):
        piv = next((r for r in range(k, n) if M[r][k] != 0), None)
        if piv is None:
            raise ValueError("normal matrix is singular")
        if piv != k:
            M[k], M[piv] = M[piv], M[k]
        for i in range(k + 1, n):
            for j in range(k + 1, n + 1):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
            M[i][k] = 0
        prev = M[k][k]
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = Fraction(M[i][n])
        for j in range(i + 1, n):
            s -= M[i][j] * x[j]
        x[i] = s / M[i][i]
    return x


def exact_upper_inverse(U):
    """Exact inverse of a real upper triangular matrix, as Fractions."""
    U = [[v.to_fraction() for v in row] for row in _entries(U)]
    n = len(U)
    V = [[Fraction(0)] * n for _ in range(n)]
    for k in range(n):
        V[k][k] = 1 / U[k][k]
        for r in range(k - 1, -1, -1):
            s = sum((U[r][c] * V[c][k] for c in range(r + 1, k + 1)), Fraction(0))
            V[r][k] = -s / U[r][r]
    return V


def exact_inf_norm(rows):
    """Max row sum of absolute values for real nested Fractions or dyadics."""
    best = Fraction(0)
    for row in rows:
        s = sum((abs(v.to_fraction() if isinstance(v, DyadicRational) else Fraction(v)) for v in row), Fraction(0))
        best = max(best, s)
    return best
