# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled multiple-double kernels.

Thin wrappers that turn numpy plane arrays into strided views and release
the GIL around the C loops in ``_mdcore.h``.  The pure-Python twin with the
same signatures lives in ``_pycore.py``.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef extern from "_mdcore.h" nogil:
    ctypedef struct mdv:
        double *p
        Py_ssize_t ls
        Py_ssize_t rs
        Py_ssize_t cs

    int md_have_fma()
    void mdk_gemm(int m, int cplx, mdv C, mdv Ci, mdv A, mdv Ai, mdv B, mdv Bi,
                  int conjA, int conjB, int mode, int upper, Py_ssize_t K,
                  Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1)
    void mdk_geadd(int m, int cplx, mdv C, mdv Ci, mdv A, mdv Ai,
                   Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1)
    void mdk_scale(int m, int cplx, mdv Y, mdv Yi, mdv X, mdv Xi,
                   const double *sr, const double *si, int scplx,
                   Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1)
    int mdk_sumsq(int m, int cplx, mdv X, mdv Xi, Py_ssize_t col,
                  Py_ssize_t r0, Py_ssize_t r1, double *out)
    int mdk_treesum(int m, int cplx, mdv O, mdv Oi, mdv P, mdv Pi,
                    Py_ssize_t nrows, Py_ssize_t c0, Py_ssize_t c1)
    void mdk_invtile(int m, int cplx, mdv V, mdv Vi, mdv U, mdv Ui,
                     Py_ssize_t n, Py_ssize_t k0, Py_ssize_t k1)
    void mdk_ew(int m, int op, double *zr, double *zi, const double *xr,
                const double *xi, const double *yr, const double *yi,
                Py_ssize_t n)
    void mdk_renorm(int m, double *z, const double *x, int nterms, Py_ssize_t n)


NAME = "compiled"

EW_OPS = {"add": 0, "sub": 1, "mul": 2, "div": 3, "sqrt": 4, "cmul": 5, "cdiv": 6}


def have_fma():
    return bool(md_have_fma())


cdef mdv _view(object a) except *:
    cdef mdv v
    cdef cnp.ndarray arr
    v.p = NULL
    v.ls = 0
    v.rs = 0
    v.cs = 0
    if a is None:
        return v
    arr = <cnp.ndarray?>a
    if arr.dtype != np.float64 or arr.ndim != 3:
        raise TypeError("expected a float64 array of shape (m, rows, cols)")
    if not arr.flags.writeable:
        raise ValueError("plane array is read-only")
    v.p = <double *>cnp.PyArray_DATA(arr)
    v.ls = arr.strides[0] // 8
    v.rs = arr.strides[1] // 8
    v.cs = arr.strides[2] // 8
    return v


cdef int _cplx(tuple arrays) except -1:
    cdef int nnone = 0
    for a in arrays:
        if a is None:
            nnone += 1
    if nnone == len(arrays):
        return 0
    if nnone:
        raise ValueError("mixed real and complex operands")
    return 1


def gemm(Cr, Ci, Ar, Ai, Br, Bi, bint conj_a, bint conj_b, int mode, bint upper,
         Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1):
    cdef int cplx = _cplx((Ci, Ai, Bi,))
    cdef int m = Cr.shape[0]
    cdef Py_ssize_t K = Ar.shape[2]
    if Br.shape[1] != K or Ar.shape[0] != m or Br.shape[0] != m:
        raise ValueError("gemm shape mismatch")
    cdef mdv vC = _view(Cr), vCi = _view(Ci), vA = _view(Ar), vAi = _view(Ai)
    cdef mdv vB = _view(Br), vBi = _view(Bi)
    with nogil:
        mdk_gemm(m, cplx, vC, vCi, vA, vAi, vB, vBi, conj_a, conj_b, mode, upper,
                 K, r0, r1, c0, c1)


def geadd(Cr, Ci, Ar, Ai, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1):
    cdef int cplx = _cplx((Ci, Ai,))
    cdef int m = Cr.shape[0]
    cdef mdv vC = _view(Cr), vCi = _view(Ci), vA = _view(Ar), vAi = _view(Ai)
    with nogil:
        mdk_geadd(m, cplx, vC, vCi, vA, vAi, r0, r1, c0, c1)


def scale(Yr, Yi, Xr, Xi, sr, si, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0,
          Py_ssize_t c1):
    cdef int cplx = _cplx((Yi, Xi,))
    cdef int m = Yr.shape[0]
    cdef double[::1] s_r = np.ascontiguousarray(sr, dtype=np.float64)
    cdef double[::1] s_i = np.ascontiguousarray(sr if si is None else si, dtype=np.float64)
    cdef int scplx = si is not None
    if scplx and not cplx:
        raise ValueError("complex scalar with real data")
    cdef mdv vY = _view(Yr), vYi = _view(Yi), vX = _view(Xr), vXi = _view(Xi)
    with nogil:
        mdk_scale(m, cplx, vY, vYi, vX, vXi, &s_r[0], &s_i[0], scplx, r0, r1, c0, c1)


def sumsq(Xr, Xi, Py_ssize_t col, Py_ssize_t r0, Py_ssize_t r1):
    cdef int m = Xr.shape[0]
    cdef int cplx = Xi is not None
    out = np.zeros(m)
    cdef double[::1] o = out
    cdef mdv vX = _view(Xr), vXi = _view(Xi)
    cdef int rc
    with nogil:
        rc = mdk_sumsq(m, cplx, vX, vXi, col, r0, r1, &o[0])
    if rc:
        raise MemoryError()
    return out


def treesum(Or, Oi, Pr, Pi, Py_ssize_t c0, Py_ssize_t c1):
    cdef int cplx = _cplx((Oi, Pi,))
    cdef int m = Or.shape[0]
    cdef Py_ssize_t nrows = Pr.shape[1]
    cdef mdv vO = _view(Or), vOi = _view(Oi), vP = _view(Pr), vPi = _view(Pi)
    cdef int rc
    with nogil:
        rc = mdk_treesum(m, cplx, vO, vOi, vP, vPi, nrows, c0, c1)
    if rc:
        raise MemoryError()


def invtile(Vr, Vi, Ur, Ui, Py_ssize_t k0, Py_ssize_t k1):
    cdef int cplx = _cplx((Vi, Ui,))
    cdef int m = Ur.shape[0]
    cdef Py_ssize_t n = Ur.shape[1]
    cdef mdv vV = _view(Vr), vVi = _view(Vi), vU = _view(Ur), vUi = _view(Ui)
    with nogil:
        mdk_invtile(m, cplx, vV, vVi, vU, vUi, n, k0, k1)


def ew(str op, xr, xi=None, yr=None, yi=None):
    """Elementwise op over (m, n) limb arrays; returns (zr, zi)."""
    cdef int code = EW_OPS[op]
    cdef cnp.ndarray ax = np.ascontiguousarray(xr, dtype=np.float64)
    cdef int m = ax.shape[0]
    cdef Py_ssize_t n = ax.shape[1]
    cdef cnp.ndarray ay = np.ascontiguousarray(xr if yr is None else yr, dtype=np.float64)
    cdef cnp.ndarray axi, ayi
    zr = np.empty((m, n))
    zi = None
    if code >= 5:
        axi = np.ascontiguousarray(xi, dtype=np.float64)
        ayi = np.ascontiguousarray(yi, dtype=np.float64)
        zi = np.empty((m, n))
    else:
        axi = ax
        ayi = ay
    if ay.shape[0] != m or ay.shape[1] != n:
        raise ValueError("operand shapes differ")
    cdef double *pzi = <double *>cnp.PyArray_DATA(zi if zi is not None else zr)
    cdef double *pzr = <double *>cnp.PyArray_DATA(zr)
    cdef double *px = <double *>cnp.PyArray_DATA(ax)
    cdef double *pxi = <double *>cnp.PyArray_DATA(axi)
    cdef double *py = <double *>cnp.PyArray_DATA(ay)
    cdef double *pyi = <double *>cnp.PyArray_DATA(ayi)
    if n:
        with nogil:
            mdk_ew(m, code, pzr, pzi, px, pxi, py, pyi, n)
    return zr, zi


def renorm(x, int m):
    """Renormalise the columns of an (nterms, n) array into m limbs."""
    cdef cnp.ndarray ax = np.ascontiguousarray(x, dtype=np.float64)
    cdef int nterms = ax.shape[0]
    cdef Py_ssize_t n = ax.shape[1]
    if nterms < 1 or nterms > 18:
        raise ValueError("renorm supports 1..18 terms")
    z = np.empty((m, n))
    cdef double *pz = <double *>cnp.PyArray_DATA(z)
    cdef double *px = <double *>cnp.PyArray_DATA(ax)
    if n:
        with nogil:
            mdk_renorm(m, pz, px, nterms, n)
    return z
