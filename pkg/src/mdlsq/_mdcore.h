/*
 * Multiple-double arithmetic on m in {1, 2, 4, 8} limbs, most significant
 * limb first, plus the strided kernels used by the linear algebra layer.
 *
 * Every function that takes `const int m` is force-inlined so that callers
 * dispatching on a literal m get fully specialised code.
 *
 * Must be compiled without value-changing floating-point optimisations:
 * -ffp-contract=off and no -ffast-math.  The operation order of every
 * routine is mirrored by mdlsq/_pycore.py; keep the two in sync.
 */
#ifndef MDLSQ_MDCORE_H
#define MDLSQ_MDCORE_H

#include <math.h>
#include <stddef.h>
#include <stdlib.h>
#include <string.h>

#define MD_MAX 8
#define MD_LEVEL_CAP 80
#define MD_INLINE static inline __attribute__((always_inline))

#if defined(__FMA__) || defined(MDLSQ_FORCE_FMA)
#define MD_HAVE_FMA 1
#else
#define MD_HAVE_FMA 0
#endif

/* ---------------------------------------------------------------------- */
/* error-free transformations                                              */

MD_INLINE double two_sum(double a, double b, double *e)
{
    double s = a + b;
    double bb = s - a;
    *e = (a - (s - bb)) + (b - bb);
    return s;
}

MD_INLINE double fast_two_sum(double a, double b, double *e)
{
    double s = a + b;
    *e = b - (s - a);
    return s;
}

#if !MD_HAVE_FMA
MD_INLINE void md_split(double a, double *hi, double *lo)
{
    const double big = 6.69692879491417e+299; /* 2^996 */
    if (fabs(a) > big) {
        double as = a * 3.7252902984619140625e-09; /* 2^-28 */
        double c = 134217729.0 * as;
        double h = c - (c - as);
        double l = as - h;
        *hi = h * 268435456.0;
        *lo = l * 268435456.0;
    } else {
        double c = 134217729.0 * a;
        double h = c - (c - a);
        *hi = h;
        *lo = a - h;
    }
}
#endif

MD_INLINE double two_prod(double a, double b, double *e)
{
    double p = a * b;
#if MD_HAVE_FMA
    *e = fma(a, b, -p);
#else
    double ah, al, bh, bl;
    md_split(a, &ah, &al);
    md_split(b, &bh, &bl);
    *e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
#endif
    return p;
}

static int md_have_fma(void) { return MD_HAVE_FMA; }

/* ---------------------------------------------------------------------- */
/* renormalisation                                                         */

/*
 * Compress n >= 1 terms (any order, any overlap) into m non-overlapping
 * limbs.  Pass 1 is an exact bottom-up sweep, pass 2 extracts limbs top
 * down skipping zero errors, pass 3 repeats adjacent two_sum sweeps until
 * a fixpoint so that |out[i+1]| <= ulp(out[i]) / 2.
 */
MD_INLINE void md_renorm(const double *x, const int n, double *out, const int m)
{
    double e[2 * MD_MAX + 2];
    double s = x[n - 1];
    for (int i = n - 2; i >= 0; --i)
        s = two_sum(x[i], s, &e[i + 1]);
    e[0] = s;

    double eps = e[0], tail = 0.0;
    int j = 0;
    for (int i = 1; i < n; ++i) {
        if (j < m - 1) {
            double t;
            double r = two_sum(eps, e[i], &t);
            if (t != 0.0) {
                out[j++] = r;
                eps = t;
            } else {
                eps = r;
            }
        } else {
            tail += e[i];
        }
    }
    out[j++] = eps + tail;
    for (; j < m; ++j)
        out[j] = 0.0;

    for (int pass = 0; pass < 2 * m; ++pass) {
        int changed = 0;
        for (int i = 0; i < m - 1; ++i) {
            double t;
            double a = out[i], b = out[i + 1];
            double s2 = two_sum(a, b, &t);
            changed |= (s2 != a) | (t != b);
            out[i] = s2;
            out[i + 1] = t;
        }
        if (!changed)
            break;
    }
}

/* ---------------------------------------------------------------------- */
/* real multiple-double operations; z may alias x or y                     */

MD_INLINE void md_copy(const double *x, double *z, const int m)
{
    for (int l = 0; l < m; ++l)
        z[l] = x[l];
}

MD_INLINE void md_neg(const double *x, double *z, const int m)
{
    for (int l = 0; l < m; ++l)
        z[l] = -x[l];
}

MD_INLINE void md_zero(double *z, const int m)
{
    for (int l = 0; l < m; ++l)
        z[l] = 0.0;
}

MD_INLINE void md_add(const double *x, const double *y, double *z, const int m)
{
    if (m == 1) {
        z[0] = x[0] + y[0];
        return;
    }
    double g[2 * MD_MAX];
    int i = 0, j = 0, k = 0;
    while (i < m && j < m) {
        if (fabs(y[j]) > fabs(x[i]))
            g[k++] = y[j++];
        else
            g[k++] = x[i++];
    }
    while (i < m)
        g[k++] = x[i++];
    while (j < m)
        g[k++] = y[j++];
    md_renorm(g, 2 * m, z, m);
}

MD_INLINE void md_sub(const double *x, const double *y, double *z, const int m)
{
    double ny[MD_MAX];
    md_neg(y, ny, m);
    md_add(x, ny, z, m);
}

/* pairwise two_sum tree over one level; errors go to the next level */
MD_INLINE double md_level_tree(double *t, int cnt, double *nxt, int *ncnt)
{
    while (cnt > 1) {
        int w = 0;
        for (int i = 0; i < cnt; i += 2) {
            if (i + 1 < cnt) {
                double e;
                t[w++] = two_sum(t[i], t[i + 1], &e);
                nxt[(*ncnt)++] = e;
            } else {
                t[w++] = t[i];
            }
        }
        cnt = w;
    }
    return t[0];
}

MD_INLINE void md_mul(const double *x, const double *y, double *z, const int m)
{
    if (m == 1) {
        z[0] = x[0] * y[0];
        return;
    }
    double lev[MD_MAX + 1][MD_LEVEL_CAP];
    int cnt[MD_MAX + 1];
    for (int k = 0; k <= m; ++k)
        cnt[k] = 0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; i + j < m; ++j) {
            double e;
            double p = two_prod(x[i], y[j], &e);
            lev[i + j][cnt[i + j]++] = p;
            lev[i + j + 1][cnt[i + j + 1]++] = e;
        }
    }
    for (int i = 1; i < m; ++i)
        lev[m][cnt[m]++] = x[i] * y[m - i];
    double heads[MD_MAX + 1];
    for (int k = 0; k < m; ++k)
        heads[k] = md_level_tree(lev[k], cnt[k], lev[k + 1], &cnt[k + 1]);
    double s = 0.0;
    for (int t = 0; t < cnt[m]; ++t)
        s += lev[m][t];
    heads[m] = s;
    md_renorm(heads, m + 1, z, m);
}

MD_INLINE int md_newton_steps(const int m)
{
    return m >= 8 ? 3 : (m >= 4 ? 2 : 1);
}

MD_INLINE void md_div(const double *x, const double *y, double *z, const int m)
{
    if (m == 1) {
        z[0] = x[0] / y[0];
        return;
    }
    double r[MD_MAX], t[MD_MAX], one[MD_MAX], q[MD_MAX];
    md_zero(one, m);
    one[0] = 1.0;
    md_zero(r, m);
    r[0] = 1.0 / y[0];
    for (int it = 0; it < md_newton_steps(m); ++it) {
        md_mul(y, r, t, m);
        md_sub(one, t, t, m);
        md_mul(r, t, t, m);
        md_add(r, t, r, m);
    }
    md_mul(x, r, q, m);
    md_mul(y, q, t, m);
    md_sub(x, t, t, m);
    md_mul(r, t, t, m);
    md_add(q, t, z, m);
}

MD_INLINE void md_sqrt(const double *x, double *z, const int m)
{
    if (m == 1) {
        z[0] = sqrt(x[0]);
        return;
    }
    if (x[0] == 0.0) {
        md_zero(z, m);
        return;
    }
    if (x[0] < 0.0) {
        for (int l = 0; l < m; ++l)
            z[l] = NAN;
        return;
    }
    double r[MD_MAX], t[MD_MAX], one[MD_MAX], s[MD_MAX];
    md_zero(one, m);
    one[0] = 1.0;
    md_zero(r, m);
    r[0] = 1.0 / sqrt(x[0]);
    for (int it = 0; it < md_newton_steps(m); ++it) {
        md_mul(x, r, t, m);
        md_mul(t, r, t, m);
        md_sub(one, t, t, m);
        md_mul(t, r, t, m);
        for (int l = 0; l < m; ++l)
            t[l] *= 0.5;
        md_add(r, t, r, m);
    }
    md_mul(x, r, s, m);
    md_mul(s, s, t, m);
    md_sub(x, t, t, m);
    md_mul(t, r, t, m);
    for (int l = 0; l < m; ++l)
        t[l] *= 0.5;
    md_add(s, t, z, m);
}

/* ---------------------------------------------------------------------- */
/* complex operations on separate real/imaginary limb arrays              */

MD_INLINE void cmd_mul(const double *ar, const double *ai, const double *br,
                       const double *bi, double *zr, double *zi, const int m)
{
    double t1[MD_MAX], t2[MD_MAX], t3[MD_MAX], t4[MD_MAX];
    md_mul(ar, br, t1, m);
    md_mul(ai, bi, t2, m);
    md_mul(ar, bi, t3, m);
    md_mul(ai, br, t4, m);
    md_sub(t1, t2, zr, m);
    md_add(t3, t4, zi, m);
}

MD_INLINE void cmd_div(const double *ar, const double *ai, const double *br,
                       const double *bi, double *zr, double *zi, const int m)
{
    double t1[MD_MAX], t2[MD_MAX], den[MD_MAX], nr[MD_MAX], ni[MD_MAX];
    md_mul(br, br, t1, m);
    md_mul(bi, bi, t2, m);
    md_add(t1, t2, den, m);
    md_mul(ar, br, t1, m);
    md_mul(ai, bi, t2, m);
    md_add(t1, t2, nr, m);
    md_mul(ai, br, t1, m);
    md_mul(ar, bi, t2, m);
    md_sub(t1, t2, ni, m);
    md_div(nr, den, zr, m);
    md_div(ni, den, zi, m);
}

/* ---------------------------------------------------------------------- */
/* strided plane views                                                     */

typedef struct {
    double *p;
    ptrdiff_t ls, rs, cs; /* strides in doubles: limb, row, column */
} mdv;

MD_INLINE void ld(const mdv v, ptrdiff_t i, ptrdiff_t j, double *x, const int m)
{
    const double *q = v.p + i * v.rs + j * v.cs;
    for (int l = 0; l < m; ++l)
        x[l] = q[l * v.ls];
}

MD_INLINE void st(const mdv v, ptrdiff_t i, ptrdiff_t j, const double *x, const int m)
{
    double *q = v.p + i * v.rs + j * v.cs;
    for (int l = 0; l < m; ++l)
        q[l * v.ls] = x[l];
}

/* load a possibly complex element; conj flips the imaginary sign */
MD_INLINE void ldc(const mdv vr, const mdv vi, ptrdiff_t i, ptrdiff_t j, int conj,
                   double *xr, double *xi, const int m, const int cplx)
{
    ld(vr, i, j, xr, m);
    if (cplx) {
        ld(vi, i, j, xi, m);
        if (conj)
            md_neg(xi, xi, m);
    }
}

MD_INLINE void stc(const mdv vr, const mdv vi, ptrdiff_t i, ptrdiff_t j,
                   const double *xr, const double *xi, const int m, const int cplx)
{
    st(vr, i, j, xr, m);
    if (cplx)
        st(vi, i, j, xi, m);
}

MD_INLINE void xmul(const double *ar, const double *ai, const double *br, const double *bi,
                    double *zr, double *zi, const int m, const int cplx)
{
    if (cplx)
        cmd_mul(ar, ai, br, bi, zr, zi, m);
    else
        md_mul(ar, br, zr, m);
}

MD_INLINE void xadd(const double *ar, const double *ai, const double *br, const double *bi,
                    double *zr, double *zi, const int m, const int cplx)
{
    md_add(ar, br, zr, m);
    if (cplx)
        md_add(ai, bi, zi, m);
}

MD_INLINE void xsub(const double *ar, const double *ai, const double *br, const double *bi,
                    double *zr, double *zi, const int m, const int cplx)
{
    md_sub(ar, br, zr, m);
    if (cplx)
        md_sub(ai, bi, zi, m);
}

MD_INLINE void xdiv(const double *ar, const double *ai, const double *br, const double *bi,
                    double *zr, double *zi, const int m, const int cplx)
{
    if (cplx)
        cmd_div(ar, ai, br, bi, zr, zi, m);
    else
        md_div(ar, br, zr, m);
}

/* ---------------------------------------------------------------------- */
/* kernels                                                                 */

/*
 * C[i, j] (=|-=) sum_k opA(A[i, k]) opB(B[k, j]) for i in [r0, r1),
 * j in [c0, c1).  The sum runs k = k0 .. K-1 left to right, k0 = i when
 * `upper` is set (A upper triangular) and 0 otherwise.  mode 0 stores the
 * sum, mode 1 stores C - sum.
 */
MD_INLINE void gemm_impl(const int m, const int cplx, mdv C, mdv Ci, mdv A, mdv Ai,
                         mdv B, mdv Bi, int conjA, int conjB, int mode, int upper,
                         ptrdiff_t K, ptrdiff_t r0, ptrdiff_t r1, ptrdiff_t c0, ptrdiff_t c1)
{
    double ar[MD_MAX], ai[MD_MAX], br[MD_MAX], bi[MD_MAX];
    double pr[MD_MAX], pi[MD_MAX], sr[MD_MAX], si[MD_MAX];
    for (ptrdiff_t i = r0; i < r1; ++i) {
        for (ptrdiff_t j = c0; j < c1; ++j) {
            ptrdiff_t k0 = upper ? i : 0;
            if (k0 >= K) {
                md_zero(sr, m);
                md_zero(si, m);
            } else {
                ldc(A, Ai, i, k0, conjA, ar, ai, m, cplx);
                ldc(B, Bi, k0, j, conjB, br, bi, m, cplx);
                xmul(ar, ai, br, bi, sr, si, m, cplx);
                for (ptrdiff_t k = k0 + 1; k < K; ++k) {
                    ldc(A, Ai, i, k, conjA, ar, ai, m, cplx);
                    ldc(B, Bi, k, j, conjB, br, bi, m, cplx);
                    xmul(ar, ai, br, bi, pr, pi, m, cplx);
                    xadd(sr, si, pr, pi, sr, si, m, cplx);
                }
            }
            if (mode == 1) {
                ldc(C, Ci, i, j, 0, pr, pi, m, cplx);
                xsub(pr, pi, sr, si, sr, si, m, cplx);
            }
            stc(C, Ci, i, j, sr, si, m, cplx);
        }
    }
}

/* C[i, j] = C[i, j] + A[i, j] */
MD_INLINE void geadd_impl(const int m, const int cplx, mdv C, mdv Ci, mdv A, mdv Ai,
                          ptrdiff_t r0, ptrdiff_t r1, ptrdiff_t c0, ptrdiff_t c1)
{
    double ar[MD_MAX], ai[MD_MAX], cr[MD_MAX], ci[MD_MAX];
    for (ptrdiff_t i = r0; i < r1; ++i) {
        for (ptrdiff_t j = c0; j < c1; ++j) {
            ldc(C, Ci, i, j, 0, cr, ci, m, cplx);
            ldc(A, Ai, i, j, 0, ar, ai, m, cplx);
            xadd(cr, ci, ar, ai, cr, ci, m, cplx);
            stc(C, Ci, i, j, cr, ci, m, cplx);
        }
    }
}

/*
 * Y[i, j] = X[i, j] * s.  scplx says whether the scalar is complex; a real
 * scalar times complex data costs two real products.
 */
MD_INLINE void scale_impl(const int m, const int cplx, mdv Y, mdv Yi, mdv X, mdv Xi,
                          const double *sr, const double *si, int scplx,
                          ptrdiff_t r0, ptrdiff_t r1, ptrdiff_t c0, ptrdiff_t c1)
{
    double xr[MD_MAX], xi[MD_MAX], zr[MD_MAX], zi[MD_MAX];
    for (ptrdiff_t i = r0; i < r1; ++i) {
        for (ptrdiff_t j = c0; j < c1; ++j) {
            ldc(X, Xi, i, j, 0, xr, xi, m, cplx);
            if (cplx && scplx) {
                cmd_mul(xr, xi, sr, si, zr, zi, m);
            } else {
                md_mul(xr, sr, zr, m);
                if (cplx)
                    md_mul(xi, sr, zi, m);
            }
            stc(Y, Yi, i, j, zr, zi, m, cplx);
        }
    }
}

/* pairwise sum of n values stored at buf[k * m ...]; result in buf[0..m) */
MD_INLINE void tree_inplace(double *buf, ptrdiff_t n, const int m)
{
    while (n > 1) {
        ptrdiff_t w = 0;
        for (ptrdiff_t i = 0; i < n; i += 2) {
            if (i + 1 < n)
                md_add(buf + i * m, buf + (i + 1) * m, buf + w * m, m);
            else
                md_copy(buf + i * m, buf + w * m, m);
            ++w;
        }
        n = w;
    }
}

/* out = sum over rows [r0, r1) of column c of |X[i, c]|^2 by a pairwise tree */
MD_INLINE int sumsq_impl(const int m, const int cplx, mdv X, mdv Xi, ptrdiff_t col,
                         ptrdiff_t r0, ptrdiff_t r1, double *out)
{
    ptrdiff_t n = r1 - r0;
    if (n <= 0) {
        md_zero(out, m);
        return 0;
    }
    double *buf = (double *)malloc(sizeof(double) * (size_t)(n * m));
    if (!buf)
        return -1;
    double xr[MD_MAX], xi[MD_MAX], t[MD_MAX];
    for (ptrdiff_t i = 0; i < n; ++i) {
        ldc(X, Xi, r0 + i, col, 0, xr, xi, m, cplx);
        md_mul(xr, xr, buf + i * m, m);
        if (cplx) {
            md_mul(xi, xi, t, m);
            md_add(buf + i * m, t, buf + i * m, m);
        }
    }
    tree_inplace(buf, n, m);
    md_copy(buf, out, m);
    free(buf);
    return 0;
}

/* out[0, j] = pairwise sum over rows of P[:, j] for j in [c0, c1) */
MD_INLINE int treesum_impl(const int m, const int cplx, mdv O, mdv Oi, mdv P, mdv Pi,
                           ptrdiff_t nrows, ptrdiff_t c0, ptrdiff_t c1)
{
    if (nrows <= 0)
        return 0;
    double *br = (double *)malloc(sizeof(double) * (size_t)(nrows * m));
    double *bi = (double *)malloc(sizeof(double) * (size_t)(nrows * m));
    if (!br || !bi) {
        free(br);
        free(bi);
        return -1;
    }
    double dummy[MD_MAX];
    for (ptrdiff_t j = c0; j < c1; ++j) {
        for (ptrdiff_t i = 0; i < nrows; ++i)
            ldc(P, Pi, i, j, 0, br + i * m, cplx ? bi + i * m : dummy, m, cplx);
        tree_inplace(br, nrows, m);
        if (cplx)
            tree_inplace(bi, nrows, m);
        stc(O, Oi, 0, j, br, bi, m, cplx);
    }
    free(br);
    free(bi);
    return 0;
}

/*
 * Inverse of an upper triangular n x n tile, one column per thread:
 * column k solves U v = e_k bottom-up.  V must not alias U.
 */
MD_INLINE void invtile_impl(const int m, const int cplx, mdv V, mdv Vi, mdv U, mdv Ui,
                            ptrdiff_t n, ptrdiff_t k0, ptrdiff_t k1)
{
    double one_r[MD_MAX], one_i[MD_MAX], ur[MD_MAX], ui[MD_MAX], vr[MD_MAX], vi[MD_MAX];
    double sr[MD_MAX], si[MD_MAX], pr[MD_MAX], pi[MD_MAX];
    md_zero(one_r, m);
    md_zero(one_i, m);
    one_r[0] = 1.0;
    for (ptrdiff_t k = k0; k < k1; ++k) {
        md_zero(sr, m);
        md_zero(si, m);
        for (ptrdiff_t r = k + 1; r < n; ++r)
            stc(V, Vi, r, k, sr, si, m, cplx);
        ldc(U, Ui, k, k, 0, ur, ui, m, cplx);
        xdiv(one_r, one_i, ur, ui, vr, vi, m, cplx);
        stc(V, Vi, k, k, vr, vi, m, cplx);
        for (ptrdiff_t r = k - 1; r >= 0; --r) {
            ldc(U, Ui, r, r + 1, 0, ur, ui, m, cplx);
            ldc(V, Vi, r + 1, k, 0, vr, vi, m, cplx);
            xmul(ur, ui, vr, vi, sr, si, m, cplx);
            for (ptrdiff_t c = r + 2; c <= k; ++c) {
                ldc(U, Ui, r, c, 0, ur, ui, m, cplx);
                ldc(V, Vi, c, k, 0, vr, vi, m, cplx);
                xmul(ur, ui, vr, vi, pr, pi, m, cplx);
                xadd(sr, si, pr, pi, sr, si, m, cplx);
            }
            md_neg(sr, sr, m);
            md_neg(si, si, m);
            ldc(U, Ui, r, r, 0, ur, ui, m, cplx);
            xdiv(sr, si, ur, ui, vr, vi, m, cplx);
            stc(V, Vi, r, k, vr, vi, m, cplx);
        }
    }
}

/* ---------------------------------------------------------------------- */
/* elementwise operations over n consecutive elements, planes n apart      */

#define MD_EW_ADD 0
#define MD_EW_SUB 1
#define MD_EW_MUL 2
#define MD_EW_DIV 3
#define MD_EW_SQRT 4
#define MD_EW_CMUL 5
#define MD_EW_CDIV 6

MD_INLINE void ew_impl(const int m, int op, double *zr, double *zi, const double *xr,
                       const double *xi, const double *yr, const double *yi, ptrdiff_t n)
{
    double a[MD_MAX], ai[MD_MAX], b[MD_MAX], bi[MD_MAX], c[MD_MAX], ci[MD_MAX];
    for (ptrdiff_t k = 0; k < n; ++k) {
        for (int l = 0; l < m; ++l) {
            a[l] = xr[l * n + k];
            if (op != MD_EW_SQRT)
                b[l] = yr[l * n + k];
            if (op >= MD_EW_CMUL) {
                ai[l] = xi[l * n + k];
                bi[l] = yi[l * n + k];
            }
        }
        switch (op) {
        case MD_EW_ADD: md_add(a, b, c, m); break;
        case MD_EW_SUB: md_sub(a, b, c, m); break;
        case MD_EW_MUL: md_mul(a, b, c, m); break;
        case MD_EW_DIV: md_div(a, b, c, m); break;
        case MD_EW_SQRT: md_sqrt(a, c, m); break;
        case MD_EW_CMUL: cmd_mul(a, ai, b, bi, c, ci, m); break;
        default: cmd_div(a, ai, b, bi, c, ci, m); break;
        }
        for (int l = 0; l < m; ++l) {
            zr[l * n + k] = c[l];
            if (op >= MD_EW_CMUL)
                zi[l * n + k] = ci[l];
        }
    }
}

/* renormalise columns of an (nterms, n) array into (m, n) */
MD_INLINE void ew_renorm_impl(const int m, double *z, const double *x, int nterms, ptrdiff_t n)
{
    double t[2 * MD_MAX + 2], c[MD_MAX];
    for (ptrdiff_t k = 0; k < n; ++k) {
        for (int l = 0; l < nterms; ++l)
            t[l] = x[l * n + k];
        md_renorm(t, nterms, c, m);
        for (int l = 0; l < m; ++l)
            z[l * n + k] = c[l];
    }
}

/* ---------------------------------------------------------------------- */
/* dispatch on literal m and complexity                                    */

#define MD_DISPATCH_M(CALL, m)                                                 \
    do {                                                                       \
        switch (m) {                                                           \
        case 1: CALL(1); break;                                                \
        case 2: CALL(2); break;                                                \
        case 4: CALL(4); break;                                                \
        default: CALL(8); break;                                               \
        }                                                                      \
    } while (0)

static void mdk_gemm(int m, int cplx, mdv C, mdv Ci, mdv A, mdv Ai, mdv B, mdv Bi,
                     int conjA, int conjB, int mode, int upper, ptrdiff_t K,
                     ptrdiff_t r0, ptrdiff_t r1, ptrdiff_t c0, ptrdiff_t c1)
{
#define GEMM_R(M) gemm_impl(M, 0, C, Ci, A, Ai, B, Bi, conjA, conjB, mode, upper, K, r0, r1, c0, c1)
#define GEMM_C(M) gemm_impl(M, 1, C, Ci, A, Ai, B, Bi, conjA, conjB, mode, upper, K, r0, r1, c0, c1)
    if (cplx)
        MD_DISPATCH_M(GEMM_C, m);
    else
        MD_DISPATCH_M(GEMM_R, m);
#undef GEMM_R
#undef GEMM_C
}

static void mdk_geadd(int m, int cplx, mdv C, mdv Ci, mdv A, mdv Ai,
                      ptrdiff_t r0, ptrdiff_t r1, ptrdiff_t c0, ptrdiff_t c1)
{
#define GEADD_R(M) geadd_impl(M, 0, C, Ci, A, Ai, r0, r1, c0, c1)
#define GEADD_C(M) geadd_impl(M, 1, C, Ci, A, Ai, r0, r1, c0, c1)
    if (cplx)
        MD_DISPATCH_M(GEADD_C, m);
    else
        MD_DISPATCH_M(GEADD_R, m);
#undef GEADD_R
#undef GEADD_C
}

static void mdk_scale(int m, int cplx, mdv Y, mdv Yi, mdv X, mdv Xi, const double *sr,
                      const double *si, int scplx, ptrdiff_t r0, ptrdiff_t r1,
                      ptrdiff_t c0, ptrdiff_t c1)
{
#define SCALE_R(M) scale_impl(M, 0, Y, Yi, X, Xi, sr, si, scplx, r0, r1, c0, c1)
#define SCALE_C(M) scale_impl(M, 1, Y, Yi, X, Xi, sr, si, scplx, r0, r1, c0, c1)
    if (cplx)
        MD_DISPATCH_M(SCALE_C, m);
    else
        MD_DISPATCH_M(SCALE_R, m);
#undef SCALE_R
#undef SCALE_C
}

static int mdk_sumsq(int m, int cplx, mdv X, mdv Xi, ptrdiff_t col, ptrdiff_t r0,
                     ptrdiff_t r1, double *out)
{
    int rc = 0;
#define SUMSQ_R(M) rc = sumsq_impl(M, 0, X, Xi, col, r0, r1, out)
#define SUMSQ_C(M) rc = sumsq_impl(M, 1, X, Xi, col, r0, r1, out)
    if (cplx)
        MD_DISPATCH_M(SUMSQ_C, m);
    else
        MD_DISPATCH_M(SUMSQ_R, m);
#undef SUMSQ_R
#undef SUMSQ_C
    return rc;
}

static int mdk_treesum(int m, int cplx, mdv O, mdv Oi, mdv P, mdv Pi, ptrdiff_t nrows,
                       ptrdiff_t c0, ptrdiff_t c1)
{
    int rc = 0;
#define TREE_R(M) rc = treesum_impl(M, 0, O, Oi, P, Pi, nrows, c0, c1)
#define TREE_C(M) rc = treesum_impl(M, 1, O, Oi, P, Pi, nrows, c0, c1)
    if (cplx)
        MD_DISPATCH_M(TREE_C, m);
    else
        MD_DISPATCH_M(TREE_R, m);
#undef TREE_R
#undef TREE_C
    return rc;
}

static void mdk_invtile(int m, int cplx, mdv V, mdv Vi, mdv U, mdv Ui, ptrdiff_t n,
                        ptrdiff_t k0, ptrdiff_t k1)
{
#define INV_R(M) invtile_impl(M, 0, V, Vi, U, Ui, n, k0, k1)
#define INV_C(M) invtile_impl(M, 1, V, Vi, U, Ui, n, k0, k1)
    if (cplx)
        MD_DISPATCH_M(INV_C, m);
    else
        MD_DISPATCH_M(INV_R, m);
#undef INV_R
#undef INV_C
}

static void mdk_ew(int m, int op, double *zr, double *zi, const double *xr, const double *xi,
                   const double *yr, const double *yi, ptrdiff_t n)
{
#define EW(M) ew_impl(M, op, zr, zi, xr, xi, yr, yi, n)
    MD_DISPATCH_M(EW, m);
#undef EW
}

static void mdk_renorm(int m, double *z, const double *x, int nterms, ptrdiff_t n)
{
#define RN(M) ew_renorm_impl(M, z, x, nterms, n)
    MD_DISPATCH_M(RN, m);
#undef RN
}

#endif /* MDLSQ_MDCORE_H */
