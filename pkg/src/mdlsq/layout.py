"""Staggered storage: m significance-ordered planes of plain doubles.

A matrix of multiple doubles is kept as a float64 array of shape
``(m, rows, cols)``; ``re[0]`` holds the most significant limbs.  Complex
matrices carry a second array ``im`` of the same shape.  Kernels receive the
plane arrays directly, so a transpose is just ``re.transpose(0, 2, 1)``.
"""

import struct

import numpy as np
import scipy.linalg

from ._backend import core
from .md_arith import ComplexMultiDouble, MultiDouble, precision_level

# planes are row-major (C order) two-dimensional arrays
PLANE_ORDER = "C"

RNG_ID = "numpy-philox4x64-10"

_MAGIC = "# mdlsq staggered matrix v1"


def make_rng(seed):
    """Counter-based generator; the algorithm id is recorded in file headers."""
    return np.random.Generator(np.random.Philox(int(seed)))


def renormalize_planes(planes):
    """Renormalise an (m, ...) stack of limb planes elementwise.

    Limbs are first sorted by decreasing magnitude, which the renormalisation
    needs for arbitrary input; planes that are already valid keep their order.
    """
    m = planes.shape[0]
    flat = planes.reshape(m, -1)
    order = np.argsort(-np.abs(flat), axis=0, kind="stable")
    flat = np.take_along_axis(flat, order, axis=0)
    return core.renorm(flat, m).reshape(planes.shape)


def nonoverlap_mask(planes):
    """True where the limbs of an element satisfy |l[i+1]| <= ulp(l[i]) / 2."""
    ok = np.ones(planes.shape[1:], dtype=bool)
    for a, b in zip(planes[:-1], planes[1:]):
        half_ulp = np.spacing(np.abs(a)) / 2
        ok &= np.where(a == 0.0, b == 0.0, np.abs(b) <= half_ulp)
    return ok & np.all(np.isfinite(planes), axis=0)


class StaggeredMatrix:
    """A rows x cols matrix of m-limb values, optionally complex."""

    def __init__(self, re, im=None):
        re = np.ascontiguousarray(re, dtype=np.float64)
        if re.ndim != 3:
            raise ValueError("planes must have shape (m, rows, cols)")
        precision_level(re.shape[0])
        if im is not None:
            im = np.ascontiguousarray(im, dtype=np.float64)
            if im.shape != re.shape:
                raise ValueError("real and imaginary planes differ in shape")
            if np.shares_memory(re, im):
                raise ValueError("real and imaginary planes must not alias")
        self.re = re
        self.im = im

    # construction

    @classmethod
    def placeholder(cls, rows, cols, m, complex=False):
        """Read-only zero matrix backed by a single element, for dry runs at large sizes."""
        out = cls.__new__(cls)
        z = np.broadcast_to(np.zeros(1), (m, rows, cols))
        out.re = z
        out.im = np.broadcast_to(np.zeros(1), (m, rows, cols)) if complex else None
        return out

    @classmethod
    def zeros(cls, rows, cols, m, complex=False):
        m = precision_level(m)
        shape = (m, rows, cols)
        return cls(np.zeros(shape), np.zeros(shape) if complex else None)

    @classmethod
    def identity(cls, n, m, complex=False):
        A = cls.zeros(n, n, m, complex)
        A.re[0] = np.eye(n)
        return A

    @classmethod
    def from_planes(cls, re, im=None):
        """Wrap limb planes, renormalising every element on ingest."""
        re = renormalize_planes(np.asarray(re, dtype=np.float64))
        im = None if im is None else renormalize_planes(np.asarray(im, dtype=np.float64))
        return cls(re, im)

    @classmethod
    def from_array(cls, a, m):
        """Promote a float or complex numpy matrix to m limbs (exactly)."""
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError("expected a two-dimensional array")
        m = precision_level(m)
        out = cls.zeros(a.shape[0], a.shape[1], m, np.iscomplexobj(a))
        out.re[0] = a.real
        if out.im is not None:
            out.im[0] = a.imag
        return out

    @classmethod
    def from_elements(cls, rows):
        """Build from nested lists of MultiDouble or ComplexMultiDouble values."""
        rows = [list(r) for r in rows]
        first = rows[0][0]
        cplx = isinstance(first, ComplexMultiDouble)
        out = cls.zeros(len(rows), len(rows[0]), first.m, cplx)
        for i, r in enumerate(rows):
            if len(r) != out.cols:
                raise ValueError("ragged rows")
            for j, v in enumerate(r):
                out.set(i, j, v)
        return out

    # shape

    @property
    def m(self):
        return self.re.shape[0]

    @property
    def rows(self):
        return self.re.shape[1]

    @property
    def cols(self):
        return self.re.shape[2]

    @property
    def shape(self):
        return self.re.shape[1:]

    @property
    def is_complex(self):
        return self.im is not None

    @property
    def planes(self):
        return list(self.re)

    @property
    def imag_planes(self):
        return None if self.im is None else list(self.im)

    def copy(self):
        return StaggeredMatrix(self.re.copy(), None if self.im is None else self.im.copy())

    # element access

    def _check(self, i, j):
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"index ({i}, {j}) out of range for {self.rows}x{self.cols}")

    def get(self, i, j):
        self._check(i, j)
        re = MultiDouble.__new__(MultiDouble)
        re._limbs = tuple(float(v) for v in self.re[:, i, j])
        if self.im is None:
            return re
        im = MultiDouble.__new__(MultiDouble)
        im._limbs = tuple(float(v) for v in self.im[:, i, j])
        return ComplexMultiDouble(re, im)

    def set(self, i, j, value):
        self._check(i, j)
        re, im = _split_value(value, self.m)
        self.re[:, i, j] = re
        if self.im is not None:
            self.im[:, i, j] = im
        elif any(v != 0.0 for v in im):
            raise TypeError("cannot store a complex value in a real matrix")

    def to_elements(self):
        return [[self.get(i, j) for j in range(self.cols)] for i in range(self.rows)]

    # summaries

    def leading(self):
        """Leading-limb approximation as a float64 or complex128 array."""
        return self.re[0] if self.im is None else self.re[0] + 1j * self.im[0]

    def to_numpy(self):
        """Limb sum rounded to a numpy float64/complex128 array."""
        re = self.re.sum(axis=0)
        return re if self.im is None else re + 1j * self.im.sum(axis=0)

    def max_abs(self):
        """Leading-limb max modulus, accurate to one part in 2^52."""
        return float(np.max(np.abs(self.leading()), initial=0.0))

    def inf_norm(self):
        return float(np.max(np.sum(np.abs(self.leading()), axis=1), initial=0.0))

    def is_valid(self):
        ok = nonoverlap_mask(self.re)
        if self.im is not None:
            ok &= nonoverlap_mask(self.im)
        return bool(ok.all())

    def renormalize(self):
        self.re = renormalize_planes(self.re)
        if self.im is not None:
            self.im = renormalize_planes(self.im)
        return self

    def bits_equal(self, other):
        """Bitwise identity of all limbs, signed zeros included."""
        if self.re.shape != other.re.shape or self.is_complex != other.is_complex:
            return False
        same = np.array_equal(self.re.view(np.int64), other.re.view(np.int64))
        if self.im is not None:
            same = same and np.array_equal(self.im.view(np.int64), other.im.view(np.int64))
        return same

    def __repr__(self):
        kind = "complex " if self.is_complex else ""
        return f"StaggeredMatrix({self.rows}x{self.cols}, m={self.m}, {kind}planes)"

    # files

    def save(self, path, seed=None, rng=RNG_ID):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps(seed=seed, rng=rng))

    def dumps(self, seed=None, rng=RNG_ID):
        lines = [
            _MAGIC,
            f"rows {self.rows}",
            f"cols {self.cols}",
            f"m {self.m}",
            f"complex {int(self.is_complex)}",
            f"rng {rng}",
            f"seed {'-' if seed is None else seed}",
            "planes",
        ]
        for part in (self.re,) if self.im is None else (self.re, self.im):
            for plane in part:
                for row in plane:
                    lines.append(" ".join(_hex(v) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())[0]

    @classmethod
    def loads(cls, text):
        """Parse the text format; returns (matrix, header dict)."""
        lines = text.splitlines()
        if not lines or lines[0] != _MAGIC:
            raise ValueError("not a staggered matrix file")
        header = {}
        k = 1
        while lines[k] != "planes":
            key, _, val = lines[k].partition(" ")
            header[key] = val
            k += 1
        rows, cols, m = int(header["rows"]), int(header["cols"]), int(header["m"])
        cplx = header["complex"] == "1"
        body = lines[k + 1 :]
        nplanes = m * (2 if cplx else 1)
        if len(body) != nplanes * rows:
            raise ValueError("plane data has the wrong number of rows")
        vals = np.array([[_unhex(t) for t in line.split()] for line in body], dtype=np.float64)
        vals = vals.reshape(nplanes, rows, cols)
        return cls(vals[:m].copy(), vals[m:].copy() if cplx else None), header


class StaggeredVector:
    """A length-n vector of m-limb values, stored as (m, n) planes."""

    def __init__(self, re, im=None):
        re = np.ascontiguousarray(re, dtype=np.float64)
        if re.ndim != 2:
            raise ValueError("planes must have shape (m, n)")
        precision_level(re.shape[0])
        if im is not None:
            im = np.ascontiguousarray(im, dtype=np.float64)
            if im.shape != re.shape:
                raise ValueError("real and imaginary planes differ in shape")
        self.re = re
        self.im = im

    @classmethod
    def zeros(cls, n, m, complex=False):
        m = precision_level(m)
        return cls(np.zeros((m, n)), np.zeros((m, n)) if complex else None)

    @classmethod
    def from_planes(cls, re, im=None):
        re = renormalize_planes(np.asarray(re, dtype=np.float64))
        im = None if im is None else renormalize_planes(np.asarray(im, dtype=np.float64))
        return cls(re, im)

    @classmethod
    def from_array(cls, a, m):
        a = np.asarray(a)
        out = cls.zeros(a.shape[0], m, np.iscomplexobj(a))
        out.re[0] = a.real
        if out.im is not None:
            out.im[0] = a.imag
        return out

    @classmethod
    def from_elements(cls, values):
        values = list(values)
        cplx = isinstance(values[0], ComplexMultiDouble)
        out = cls.zeros(len(values), values[0].m, cplx)
        for i, v in enumerate(values):
            out.set(i, v)
        return out

    @property
    def m(self):
        return self.re.shape[0]

    @property
    def length(self):
        return self.re.shape[1]

    def __len__(self):
        return self.re.shape[1]

    @property
    def is_complex(self):
        return self.im is not None

    @property
    def planes(self):
        return list(self.re)

    def copy(self):
        return StaggeredVector(self.re.copy(), None if self.im is None else self.im.copy())

    def as_matrix(self):
        """An n x 1 StaggeredMatrix sharing this vector's memory."""
        out = StaggeredMatrix.__new__(StaggeredMatrix)
        out.re = self.re[:, :, None]
        out.im = None if self.im is None else self.im[:, :, None]
        return out

    def get(self, i):
        if not 0 <= i < self.length:
            raise IndexError(f"index {i} out of range for length {self.length}")
        return self.as_matrix().get(i, 0)

    def set(self, i, value):
        if not 0 <= i < self.length:
            raise IndexError(f"index {i} out of range for length {self.length}")
        self.as_matrix().set(i, 0, value)

    def to_elements(self):
        return [self.get(i) for i in range(self.length)]

    def leading(self):
        return self.re[0] if self.im is None else self.re[0] + 1j * self.im[0]

    def to_numpy(self):
        re = self.re.sum(axis=0)
        return re if self.im is None else re + 1j * self.im.sum(axis=0)

    def max_abs(self):
        return float(np.max(np.abs(self.leading()), initial=0.0))

    def is_valid(self):
        return self.as_matrix().is_valid()

    def bits_equal(self, other):
        return self.as_matrix().bits_equal(other.as_matrix())

    def __repr__(self):
        kind = "complex " if self.is_complex else ""
        return f"StaggeredVector({self.length}, m={self.m}, {kind}planes)"


# ----------------------------------------------------------------------
# seeded test data


def _random_planes(gen, shape, m):
    planes = np.stack([gen.uniform(-1.0, 1.0, shape) * 2.0 ** (-53 * k) for k in range(m)])
    return renormalize_planes(planes)


def random_matrix(rows, cols, m, seed, complex=False):
    """Leading limbs uniform in [-1, 1]; lower limbs are fresh draws scaled by 2^(-53k)."""
    if rows < 1 or cols < 1:
        raise ValueError("dimensions must be positive")
    m = precision_level(m)
    gen = make_rng(seed)
    re = _random_planes(gen, (rows, cols), m)
    im = _random_planes(gen, (rows, cols), m) if complex else None
    return StaggeredMatrix(re, im)


def random_vector(n, m, seed, complex=False):
    A = random_matrix(n, 1, m, seed, complex)
    return StaggeredVector(A.re[:, :, 0], None if A.im is None else A.im[:, :, 0])


def random_upper_triangular(n, m, seed, complex=False, min_diag=1e-3, attempts=100):
    """U from an LU factorisation with partial pivoting of a seeded random matrix.

    The LU runs on the leading limbs in double precision; the triangle then
    receives fresh lower limbs like :func:`random_matrix`.  Draws whose
    diagonal has an entry below ``min_diag`` in modulus are resampled.
    """
    if n < 1:
        raise ValueError("dimension must be positive")
    m = precision_level(m)
    gen = make_rng(seed)
    for _ in range(attempts):
        a = gen.uniform(-1.0, 1.0, (n, n))
        if complex:
            a = a + 1j * gen.uniform(-1.0, 1.0, (n, n))
        u = scipy.linalg.lu(a)[2]
        if np.min(np.abs(np.diag(u))) >= min_diag:
            break
    else:
        raise RuntimeError(f"no random triangular matrix with |u_ii| >= {min_diag} in {attempts} draws")
    mask = np.triu(np.ones((n, n), dtype=bool))

    def planes(lead):
        p = np.zeros((m, n, n))
        p[0] = lead
        for k in range(1, m):
            p[k] = gen.uniform(-1.0, 1.0, (n, n)) * 2.0 ** (-53 * k) * np.abs(lead)
        p[:, ~mask] = 0.0
        return renormalize_planes(p)

    re = planes(u.real)
    im = planes(u.imag) if complex else None
    return StaggeredMatrix(re, im)


def _split_value(value, m):
    if isinstance(value, ComplexMultiDouble):
        if value.m != m:
            raise ValueError("precision mismatch")
        return value.re.limbs, value.im.limbs
    zero = (0.0,) * m
    if isinstance(value, MultiDouble):
        if value.m != m:
            raise ValueError("precision mismatch")
        return value.limbs, zero
    if isinstance(value, complex):
        return (value.real,) + zero[1:], (value.imag,) + zero[1:]
    if isinstance(value, (int, float, np.floating, np.integer)):
        return (float(value),) + zero[1:], zero
    limbs = tuple(float(v) for v in value)
    if len(limbs) != m:
        raise ValueError(f"expected {m} limbs, got {len(limbs)}")
    z = renormalize_planes(np.array(limbs).reshape(m, 1))[:, 0]
    return tuple(z), zero


def _hex(v):
    return struct.pack(">d", v).hex()


def _unhex(s):
    return struct.unpack(">d", bytes.fromhex(s))[0]
