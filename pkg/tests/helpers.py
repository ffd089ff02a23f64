"""Shared generators and exact checks for the test suite."""

import math
from fractions import Fraction

import numpy as np

from mdlsq.layout import renormalize_planes
from mdlsq.md_arith import MultiDouble
from mdlsq.oracle import DyadicRational


def rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def random_limbs(gen, m, n, spread=20):
    """(m, n) planes of valid expansions with random signs and exponents in 2^[-spread, spread]."""
    p = np.stack([gen.uniform(-1.0, 1.0, n) * 2.0 ** (-53 * k) for k in range(m)])
    p *= 2.0 ** gen.integers(-spread, spread + 1, n)
    return renormalize_planes(p.reshape(m, n, 1))[:, :, 0]


def md(col):
    return MultiDouble([float(v) for v in col])


def exact(col):
    return sum((Fraction(float(v)) for v in col), Fraction(0))


def log2_rel(computed, exact_value):
    """log2 |computed - exact| / |exact| for Fractions; -inf when exact."""
    d = abs(computed - exact_value)
    if d == 0:
        return -math.inf
    r = d / abs(exact_value) if exact_value else d
    return math.log2(r.numerator) - math.log2(r.denominator)


def dyadic(x):
    return DyadicRational.coerce(x)


def well_conditioned_upper(n, m, seed, cplx=False):
    """Diagonally dominant upper triangular matrix with condition number near 1."""
    from mdlsq.layout import StaggeredMatrix, random_matrix

    A = random_matrix(n, n, m, seed, cplx)
    mask = np.triu(np.ones((n, n)))
    re = A.re / (2 * n)
    d = np.diag_indices(n)
    re[0][d] += 1.0 + 0.5 * np.abs(A.re[0][d])
    re = renormalize_planes(re * mask)
    im = None if not cplx else renormalize_planes(A.im / (2 * n) * mask)
    return StaggeredMatrix(re, im)


def ulp_scale(m):
    """Relative spacing of an m-limb value: 2^-52 for doubles, 2^-105 for dd, ..."""
    return 2.0 ** (-53 * m + 1)
