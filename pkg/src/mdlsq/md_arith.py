"""Scalar multiple-double values.

A :class:`MultiDouble` is an unevaluated sum of ``m`` binary64 limbs, most
significant first, with ``m`` in {1, 2, 4, 8}.  Arithmetic delegates to the
active kernel core so scalar and array results agree bit for bit.
"""

import math
import numbers
import warnings
from fractions import Fraction

import numpy as np

from ._backend import core

PRECISIONS = {"d": 1, "dd": 2, "qd": 4, "od": 8}
_NAMES = {m: name for name, m in PRECISIONS.items()}

_SPLITTER = 134217729.0
_SPLIT_BIG = 2.0**996
_TINY = 2.0**-1022


def precision_level(p):
    """Map a precision name ('dd') or limb count (2) to the limb count."""
    if isinstance(p, str):
        try:
            return PRECISIONS[p]
        except KeyError:
            raise ValueError(f"unknown precision {p!r}") from None
    if p not in _NAMES:
        raise ValueError(f"precision level must be one of 1, 2, 4, 8, got {p!r}")
    return int(p)


def precision_name(m):
    return _NAMES[precision_level(m)]


# ----------------------------------------------------------------------
# error-free transformations on Python floats


def two_sum(a, b):
    """Return (s, e) with s = fl(a + b) and s + e = a + b exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def fast_two_sum(a, b):
    """two_sum for |a| >= |b|, three flops."""
    s = a + b
    return s, b - (s - a)


def _split(a):
    if abs(a) > _SPLIT_BIG:
        hi, lo = _split(a * 2.0**-28)
        return hi * 2.0**28, lo * 2.0**28
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    """Return (p, e) with p = fl(a * b) and p + e = a * b exactly.

    Uses Dekker splitting, which matches a fused multiply-add bit for bit
    whenever the product error is representable.  Warns when the error term
    falls into the subnormal range, where exactness is lost.
    """
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    if e != 0.0 and abs(e) < _TINY or (p == 0.0 and a != 0.0 and b != 0.0):
        warnings.warn("two_prod error term underflows; product not exact", RuntimeWarning, stacklevel=2)
    return p, e


def is_nonoverlapping(limbs):
    """Check |limb[i+1]| <= ulp(limb[i]) / 2 for consecutive nonzero limbs."""
    for a, b in zip(limbs, limbs[1:]):
        if a == 0.0:
            if b != 0.0:
                return False
            continue
        if abs(b) > math.ulp(a) / 2:
            return False
    return True


def renormalize(expansion, m):
    """Compress any finite sequence of doubles into an m-limb MultiDouble.

    Terms are sorted by decreasing magnitude first; the sweep-based
    renormalisation is only faithful on roughly ordered input.
    """
    m = precision_level(m)
    terms = sorted((float(t) for t in expansion), key=abs, reverse=True)
    if not terms:
        terms = [0.0]
    if not all(math.isfinite(t) for t in terms):
        raise ValueError("cannot renormalize non-finite terms")
    # fold long inputs from the small end through 8-limb partial sums
    while len(terms) > 18:
        low = _renorm_column(terms[-18:], 8)
        terms = sorted(terms[:-18] + [v for v in low if v != 0.0], key=abs, reverse=True) or [0.0]
    z = _renorm_column(terms, m)
    out = MultiDouble.__new__(MultiDouble)
    out._limbs = z
    return out


def _renorm_column(terms, m):
    return tuple(float(v) for v in core.renorm(np.array(terms, dtype=np.float64).reshape(-1, 1), m)[:, 0])


def _limbs_of(x, m):
    if isinstance(x, MultiDouble):
        if x.m != m:
            raise ValueError(f"precision mismatch: {x.m} vs {m}")
        return x._limbs
    if isinstance(x, numbers.Integral):
        return MultiDouble.from_fraction(Fraction(int(x)), m)._limbs
    if isinstance(x, numbers.Real):
        return (float(x),) + (0.0,) * (m - 1)
    raise TypeError(f"cannot use {type(x).__name__} as a multiple double")


def _ew(op, m, *operands):
    cols = [np.array(t, dtype=np.float64).reshape(m, 1) for t in operands]
    names = ("xr", "yr") if len(cols) <= 2 else ("xr", "xi", "yr", "yi")
    zr, zi = core.ew(op, **dict(zip(names, cols)))
    re = tuple(float(v) for v in zr[:, 0])
    if zi is None:
        return re
    return re, tuple(float(v) for v in zi[:, 0])


def _wrap(limbs):
    out = MultiDouble.__new__(MultiDouble)
    out._limbs = limbs
    return out


class MultiDouble:
    """An m-limb expansion, immutable and hashable."""

    __slots__ = ("_limbs",)

    def __init__(self, limbs):
        if isinstance(limbs, MultiDouble):
            self._limbs = limbs._limbs
            return
        limbs = tuple(float(v) for v in limbs)
        precision_level(len(limbs))
        self._limbs = renormalize(limbs, len(limbs))._limbs

    # construction

    @classmethod
    def zero(cls, m):
        return _wrap((0.0,) * precision_level(m))

    @classmethod
    def one(cls, m):
        return _wrap((1.0,) + (0.0,) * (precision_level(m) - 1))

    @classmethod
    def from_float(cls, x, m):
        return _wrap((float(x),) + (0.0,) * (precision_level(m) - 1))

    @classmethod
    def from_fraction(cls, q, m):
        """Nearest-limb greedy conversion of an exact rational."""
        m = precision_level(m)
        q = Fraction(q)
        limbs = []
        for _ in range(m):
            f = float(q)
            limbs.append(f)
            q -= Fraction(f)
        return renormalize(limbs, m)

    @classmethod
    def parse(cls, text, m):
        """Parse a decimal string such as '3.14159e-2'."""
        try:
            q = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a finite decimal number: {text!r}") from None
        return cls.from_fraction(q, m)

    # inspection

    @property
    def m(self):
        return len(self._limbs)

    @property
    def limbs(self):
        return self._limbs

    def is_finite(self):
        return all(math.isfinite(v) for v in self._limbs)

    def is_valid(self):
        """Finite and non-overlapping."""
        return self.is_finite() and is_nonoverlapping(self._limbs)

    def to_fraction(self):
        if not self.is_finite():
            raise ValueError("non-finite multiple double has no exact value")
        return sum((Fraction(v) for v in self._limbs), Fraction(0))

    def __float__(self):
        return float(sum(self._limbs[1:], self._limbs[0])) if self.m > 1 else self._limbs[0]

    # arithmetic

    def _coerce(self, other):
        try:
            return _limbs_of(other, self.m)
        except TypeError:
            return None

    def __add__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else _wrap(_ew("add", self.m, self._limbs, y))

    __radd__ = __add__

    def __sub__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else _wrap(_ew("sub", self.m, self._limbs, y))

    def __rsub__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else _wrap(_ew("sub", self.m, y, self._limbs))

    def __mul__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else _wrap(_ew("mul", self.m, self._limbs, y))

    __rmul__ = __mul__

    def __truediv__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        if y[0] == 0.0:
            raise ZeroDivisionError("multiple-double division by zero")
        return _wrap(_ew("div", self.m, self._limbs, y))

    def __rtruediv__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        return _wrap(y) / self

    def __neg__(self):
        return _wrap(tuple(-v for v in self._limbs))

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self._limbs[0] < 0.0 else self

    def sqrt(self):
        if self._limbs[0] < 0.0:
            raise ValueError("square root of a negative multiple double")
        return _wrap(_ew("sqrt", self.m, self._limbs))

    # comparison; the leading limb of a renormalised difference carries its sign

    def cmp(self, other):
        y = _limbs_of(other, self.m)
        d = _ew("sub", self.m, self._limbs, y)[0]
        return (d > 0.0) - (d < 0.0)

    def __eq__(self, other):
        try:
            return self.cmp(other) == 0
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def __hash__(self):
        return hash(self._limbs)

    # text

    def format(self, digits=None):
        """Scientific notation; the default is the shortest round-trip string."""
        if not self.is_finite():
            return str(self._limbs[0] if not math.isfinite(self._limbs[0]) else float("nan"))
        q = self.to_fraction()
        if digits is not None:
            return _format_fraction(q, digits)
        d = 16 * self.m
        while True:
            s = _format_fraction(q, d)
            if MultiDouble.parse(s, self.m).to_fraction() == q or d > 800:
                return s
            d += 8

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"MultiDouble({precision_name(self.m)}, {self.format()})"

    def hex(self):
        return " ".join(v.hex() for v in self._limbs)


class ComplexMultiDouble:
    """Real and imaginary MultiDouble parts of the same precision."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        if not isinstance(re, MultiDouble):
            raise TypeError("real part must be a MultiDouble")
        im = MultiDouble.zero(re.m) if im is None else im
        if not isinstance(im, MultiDouble) or im.m != re.m:
            raise ValueError("real and imaginary parts need the same precision")
        self.re = re
        self.im = im

    @property
    def m(self):
        return self.re.m

    def _coerce(self, other):
        if isinstance(other, ComplexMultiDouble):
            if other.m != self.m:
                raise ValueError(f"precision mismatch: {other.m} vs {self.m}")
            return other
        if isinstance(other, complex):
            return ComplexMultiDouble(
                MultiDouble.from_float(other.real, self.m), MultiDouble.from_float(other.imag, self.m)
            )
        if isinstance(other, (MultiDouble, numbers.Real)):
            return ComplexMultiDouble(_wrap(_limbs_of(other, self.m)))
        return None

    def __add__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else ComplexMultiDouble(self.re + y.re, self.im + y.im)

    __radd__ = __add__

    def __sub__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else ComplexMultiDouble(self.re - y.re, self.im - y.im)

    def __rsub__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else y - self

    def __mul__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        re, im = _ew("cmul", self.m, self.re.limbs, self.im.limbs, y.re.limbs, y.im.limbs)
        return ComplexMultiDouble(_wrap(re), _wrap(im))

    __rmul__ = __mul__

    def __truediv__(self, other):
        y = self._coerce(other)
        if y is None:
            return NotImplemented
        if y.re.limbs[0] == 0.0 and y.im.limbs[0] == 0.0:
            raise ZeroDivisionError("complex multiple-double division by zero")
        re, im = _ew("cdiv", self.m, self.re.limbs, self.im.limbs, y.re.limbs, y.im.limbs)
        return ComplexMultiDouble(_wrap(re), _wrap(im))

    def __rtruediv__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else y / self

    def __neg__(self):
        return ComplexMultiDouble(-self.re, -self.im)

    def conj(self):
        return ComplexMultiDouble(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __eq__(self, other):
        y = self._coerce(other)
        return NotImplemented if y is None else (self.re == y.re and self.im == y.im)

    def __hash__(self):
        return hash((self.re, self.im))

    def to_complex(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ComplexMultiDouble({precision_name(self.m)}, {self.re.format()}, {self.im.format()})"


def _format_fraction(q, digits):
    if q == 0:
        return "0." + "0" * (digits - 1) + "e+00"
    sign = "-" if q < 0 else ""
    q = abs(q)
    e10 = len(str(q.numerator)) - len(str(q.denominator))
    if q < Fraction(10) ** e10:
        e10 -= 1
    scaled = round(q * Fraction(10) ** (digits - 1 - e10))
    if scaled >= 10**digits:
        e10 += 1
        scaled = round(q * Fraction(10) ** (digits - 1 - e10))
    s = str(scaled)
    return f"{sign}{s[0]}.{s[1:]}e{e10:+03d}"


# functional spellings


def md_add(x, y):
    return x + y


def md_sub(x, y):
    return x - y


def md_mul(x, y):
    return x * y


def md_div(x, y):
    return x / y


def md_neg(x):
    return -x


def md_abs(x):
    return abs(x)


def md_cmp(x, y):
    return x.cmp(y)


def md_sqrt(x):
    return x.sqrt()


def cmd_add(x, y):
    return x + y


def cmd_sub(x, y):
    return x - y


def cmd_mul(x, y):
    return x * y


def cmd_div(x, y):
    return x / y


def cmd_conj(x):
    return x.conj()
