"""Pure-Python (numpy-vectorised) twin of the compiled kernels.

Each routine mirrors the operation order of ``_mdcore.h`` exactly, so both
cores produce bit-identical limbs.  Products use Dekker splitting instead of
a fused multiply-add; both give the exact product error, hence the same
result.  Limb sequences are lists of arrays, most significant first.
"""

import functools

import numpy as np

NAME = "python"


def _quiet(fn):
    # inf/nan propagate as in C; silence numpy's warnings about them
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(all="ignore"):
            return fn(*args, **kwargs)

    return wrapper

_SPLITTER = 134217729.0
_SPLIT_BIG = 2.0**996


def have_fma():
    return False


def two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a):
    big = np.abs(a) > _SPLIT_BIG
    a_s = np.where(big, a * 2.0**-28, a)
    c = _SPLITTER * a_s
    hi = c - (c - a_s)
    lo = a_s - hi
    return np.where(big, hi * 2.0**28, hi), np.where(big, lo * 2.0**28, lo)


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _renorm(x, m):
    """Renormalise a list of n term arrays into m limb arrays."""
    n = len(x)
    shape = np.broadcast_shapes(*[np.shape(t) for t in x])
    x = [np.broadcast_to(np.asarray(t, dtype=np.float64), shape).ravel() for t in x]
    size = x[0].size
    e = [None] * n
    s = x[n - 1]
    for i in range(n - 2, -1, -1):
        s, e[i + 1] = two_sum(x[i], s)
    e[0] = s

    out = np.zeros((m, size))
    cols = np.arange(size)
    eps = e[0]
    tail = np.zeros(size)
    j = np.zeros(size, dtype=np.intp)
    for i in range(1, n):
        act = j < m - 1
        r, t = two_sum(eps, e[i])
        emit = act & (t != 0.0)
        out[j[emit], cols[emit]] = r[emit]
        eps = np.where(act, np.where(emit, t, r), eps)
        j = j + emit
        tail = np.where(act, tail, tail + e[i])
    out[j, cols] = eps + tail

    active = np.ones(size, dtype=bool)
    for _ in range(2 * m):
        if not active.any():
            break
        changed = np.zeros(size, dtype=bool)
        for i in range(m - 1):
            a = out[i]
            b = out[i + 1]
            s2, t = two_sum(a, b)
            changed |= (s2 != a) | (t != b)
            out[i] = np.where(active, s2, a)
            out[i + 1] = np.where(active, t, b)
        active &= changed
    return [out[l].reshape(shape) for l in range(m)]


def md_add(x, y):
    m = len(x)
    if m == 1:
        return [x[0] + y[0]]
    shape = np.broadcast_shapes(np.shape(x[0]), np.shape(y[0]))
    X = np.stack([np.broadcast_to(t, shape).ravel() for t in x])
    Y = np.stack([np.broadcast_to(t, shape).ravel() for t in y])
    size = X.shape[1]
    cols = np.arange(size)
    i = np.zeros(size, dtype=np.intp)
    j = np.zeros(size, dtype=np.intp)
    g = []
    for _ in range(2 * m):
        xv = X[np.minimum(i, m - 1), cols]
        yv = Y[np.minimum(j, m - 1), cols]
        take_y = (j < m) & ((i >= m) | (np.abs(yv) > np.abs(xv)))
        g.append(np.where(take_y, yv, xv))
        j = j + take_y
        i = i + ~take_y
    return [t.reshape(shape) for t in _renorm(g, m)]


def md_neg(x):
    return [-t for t in x]


def md_sub(x, y):
    return md_add(x, md_neg(y))


def _level_tree(terms, nxt):
    while len(terms) > 1:
        w = []
        for i in range(0, len(terms), 2):
            if i + 1 < len(terms):
                s, e = two_sum(terms[i], terms[i + 1])
                w.append(s)
                nxt.append(e)
            else:
                w.append(terms[i])
        terms = w
    return terms[0]


def md_mul(x, y):
    m = len(x)
    if m == 1:
        return [x[0] * y[0]]
    lev = [[] for _ in range(m + 1)]
    for i in range(m):
        for j in range(m - i):
            p, e = two_prod(x[i], y[j])
            lev[i + j].append(p)
            lev[i + j + 1].append(e)
    for i in range(1, m):
        lev[m].append(x[i] * y[m - i])
    heads = []
    for k in range(m):
        heads.append(_level_tree(lev[k], lev[k + 1]))
    s = 0.0
    for t in lev[m]:
        s = s + t
    heads.append(s)
    return _renorm(heads, m)


def _newton_steps(m):
    return 3 if m >= 8 else (2 if m >= 4 else 1)


def md_div(x, y):
    m = len(x)
    if m == 1:
        return [x[0] / y[0]]
    shape = np.broadcast_shapes(np.shape(x[0]), np.shape(y[0]))
    one = [np.ones(shape)] + [np.zeros(shape) for _ in range(m - 1)]
    r = [1.0 / np.broadcast_to(y[0], shape)] + [np.zeros(shape) for _ in range(m - 1)]
    for _ in range(_newton_steps(m)):
        t = md_mul(y, r)
        t = md_sub(one, t)
        t = md_mul(r, t)
        r = md_add(r, t)
    q = md_mul(x, r)
    t = md_mul(y, q)
    t = md_sub(x, t)
    t = md_mul(r, t)
    return md_add(q, t)


def md_sqrt(x):
    m = len(x)
    x0 = np.asarray(x[0], dtype=np.float64)
    if m == 1:
        with np.errstate(invalid="ignore"):
            return [np.sqrt(x0)]
    shape = x0.shape
    zero = x0 == 0.0
    neg = x0 < 0.0
    safe = [np.where(zero | neg, 1.0, x0)] + [np.where(zero | neg, 0.0, t) for t in x[1:]]
    one = [np.ones(shape)] + [np.zeros(shape) for _ in range(m - 1)]
    r = [1.0 / np.sqrt(safe[0])] + [np.zeros(shape) for _ in range(m - 1)]
    for _ in range(_newton_steps(m)):
        t = md_mul(safe, r)
        t = md_mul(t, r)
        t = md_sub(one, t)
        t = md_mul(t, r)
        t = [l * 0.5 for l in t]
        r = md_add(r, t)
    s = md_mul(safe, r)
    t = md_mul(s, s)
    t = md_sub(safe, t)
    t = md_mul(t, r)
    t = [l * 0.5 for l in t]
    z = md_add(s, t)
    return [np.where(neg, np.nan, np.where(zero, 0.0, l)) for l in z]


def cmd_mul(ar, ai, br, bi):
    t1 = md_mul(ar, br)
    t2 = md_mul(ai, bi)
    t3 = md_mul(ar, bi)
    t4 = md_mul(ai, br)
    return md_sub(t1, t2), md_add(t3, t4)


def cmd_div(ar, ai, br, bi):
    t1 = md_mul(br, br)
    t2 = md_mul(bi, bi)
    den = md_add(t1, t2)
    t1 = md_mul(ar, br)
    t2 = md_mul(ai, bi)
    nr = md_add(t1, t2)
    t1 = md_mul(ai, br)
    t2 = md_mul(ar, bi)
    ni = md_sub(t1, t2)
    return md_div(nr, den), md_div(ni, den)


# ----------------------------------------------------------------------
# complex-or-real helpers on (re, im) pairs; im is None for real data


def _xmul(a, b):
    if a[1] is None:
        return md_mul(a[0], b[0]), None
    return cmd_mul(a[0], a[1], b[0], b[1])


def _xadd(a, b):
    if a[1] is None:
        return md_add(a[0], b[0]), None
    return md_add(a[0], b[0]), md_add(a[1], b[1])


def _xsub(a, b):
    if a[1] is None:
        return md_sub(a[0], b[0]), None
    return md_sub(a[0], b[0]), md_sub(a[1], b[1])


def _xdiv(a, b):
    if a[1] is None:
        return md_div(a[0], b[0]), None
    return cmd_div(a[0], a[1], b[0], b[1])


def _limbs(arr, idx, conj=False):
    if arr is None:
        return None
    out = [arr[(l,) + idx] for l in range(arr.shape[0])]
    return [-t for t in out] if conj else out


def _ld(re, im, idx, conj=False):
    return _limbs(re, idx), _limbs(im, idx, conj)


def _st(re, im, idx, val):
    for l in range(re.shape[0]):
        re[(l,) + idx] = val[0][l]
        if im is not None:
            im[(l,) + idx] = val[1][l]


def _check_cplx(*ims):
    n = sum(a is None for a in ims)
    if n not in (0, len(ims)):
        raise ValueError("mixed real and complex operands")


# ----------------------------------------------------------------------
# kernels, same signatures as the compiled core


@_quiet
def gemm(Cr, Ci, Ar, Ai, Br, Bi, conj_a, conj_b, mode, upper, r0, r1, c0, c1):
    _check_cplx(Ci, Ai, Bi)
    K = Ar.shape[2]
    if Br.shape[1] != K:
        raise ValueError("gemm shape mismatch")
    if r1 <= r0 or c1 <= c0:
        return
    cplx = Ai is not None
    rows = slice(r0, r1)
    cols = slice(c0, c1)
    R, C = r1 - r0, c1 - c0
    m = Cr.shape[0]

    def term(k):
        a = _ld(Ar, Ai, (rows, slice(k, k + 1)), conj_a)
        b = _ld(Br, Bi, (slice(k, k + 1), cols), conj_b)
        return _xmul(a, b)

    zero = [np.zeros((R, C)) for _ in range(m)]
    s = (zero, [np.zeros((R, C)) for _ in range(m)] if cplx else None)
    if not upper:
        if K > 0:
            s = term(0)
            for k in range(1, K):
                s = _xadd(s, term(k))
        s = tuple(None if part is None else [np.broadcast_to(l, (R, C)) for l in part] for part in s)
    else:
        row_idx = np.arange(r0, r1)[:, None]
        for k in range(min(r0, K), K):
            started = row_idx < k
            first = row_idx == k
            if not (started.any() or first.any()):
                continue
            p = term(k)
            acc = _xadd(s, p)
            s = tuple(
                None
                if s[q] is None
                else [
                    np.where(first, np.broadcast_to(p[q][l], (R, C)),
                             np.where(started, acc[q][l], s[q][l]))
                    for l in range(m)
                ]
                for q in range(2)
            )
    if mode == 1:
        c = _ld(Cr, Ci, (rows, cols))
        s = _xsub(c, s)
    _st(Cr, Ci, (rows, cols), s)


@_quiet
def geadd(Cr, Ci, Ar, Ai, r0, r1, c0, c1):
    _check_cplx(Ci, Ai)
    if r1 <= r0 or c1 <= c0:
        return
    idx = (slice(r0, r1), slice(c0, c1))
    c = _ld(Cr, Ci, idx)
    a = _ld(Ar, Ai, idx)
    _st(Cr, Ci, idx, _xadd(c, a))


@_quiet
def scale(Yr, Yi, Xr, Xi, sr, si, r0, r1, c0, c1):
    _check_cplx(Yi, Xi)
    if si is not None and Xi is None:
        raise ValueError("complex scalar with real data")
    if r1 <= r0 or c1 <= c0:
        return
    idx = (slice(r0, r1), slice(c0, c1))
    x = _ld(Xr, Xi, idx)
    s_r = [np.float64(v) for v in sr]
    if Xi is not None and si is not None:
        z = cmd_mul(x[0], x[1], s_r, [np.float64(v) for v in si])
    else:
        z = (md_mul(x[0], s_r), None if Xi is None else md_mul(x[1], s_r))
    _st(Yr, Yi, idx, z)


def _tree(vals):
    """Pairwise sum of a (m, n, ...) stack along axis 1."""
    while vals.shape[1] > 1:
        n = vals.shape[1]
        half = n // 2
        a = [vals[l, 0 : 2 * half : 2] for l in range(vals.shape[0])]
        b = [vals[l, 1 : 2 * half : 2] for l in range(vals.shape[0])]
        s = np.stack(md_add(a, b))
        if n % 2:
            s = np.concatenate([s, vals[:, n - 1 : n]], axis=1)
        vals = s
    return vals[:, 0]


@_quiet
def sumsq(Xr, Xi, col, r0, r1):
    m = Xr.shape[0]
    if r1 <= r0:
        return np.zeros(m)
    x = [Xr[l, r0:r1, col] for l in range(m)]
    q = md_mul(x, x)
    if Xi is not None:
        xi = [Xi[l, r0:r1, col] for l in range(m)]
        q = md_add(q, md_mul(xi, xi))
    return _tree(np.stack(q)).copy()


@_quiet
def treesum(Or, Oi, Pr, Pi, c0, c1):
    _check_cplx(Oi, Pi)
    if Pr.shape[1] == 0 or c1 <= c0:
        return
    Or[:, 0, c0:c1] = _tree(Pr[:, :, c0:c1])
    if Pi is not None:
        Oi[:, 0, c0:c1] = _tree(Pi[:, :, c0:c1])


@_quiet
def invtile(Vr, Vi, Ur, Ui, k0, k1):
    _check_cplx(Vi, Ui)
    n = Ur.shape[1]
    m = Ur.shape[0]
    if k1 <= k0:
        return
    cplx = Ui is not None
    ks = np.arange(k0, k1)
    cols = slice(k0, k1)
    W = k1 - k0
    for part in (Vr, Vi) if cplx else (Vr,):
        for k in ks:
            part[:, k + 1 :, k] = 0.0
    one = ([np.ones(W)] + [np.zeros(W) for _ in range(m - 1)],
           [np.zeros(W) for _ in range(m)] if cplx else None)
    diag = (
        [Ur[l, ks, ks] for l in range(m)],
        None if not cplx else [Ui[l, ks, ks] for l in range(m)],
    )
    v = _xdiv(one, diag)
    for l in range(m):
        Vr[l, ks, ks] = v[0][l]
        if cplx:
            Vi[l, ks, ks] = v[1][l]
    for r in range(k1 - 2, -1, -1):
        act = ks > r
        if not act.any():
            continue
        s = None
        for c in range(r + 1, k1):
            live = ks >= c
            if not live.any():
                break
            u = _ld(Ur, Ui, (r, c))
            u = tuple(None if p is None else [np.full(W, t) for t in p] for p in u)
            vv = _ld(Vr, Vi, (c, cols))
            p = _xmul(u, vv)
            if s is None:
                s = p
            else:
                acc = _xadd(s, p)
                s = tuple(
                    None if s[q] is None
                    else [np.where(live, acc[q][l], s[q][l]) for l in range(m)]
                    for q in range(2)
                )
        s = (md_neg(s[0]), None if s[1] is None else md_neg(s[1]))
        d = _ld(Ur, Ui, (r, r))
        d = tuple(None if p is None else [np.full(W, t) for t in p] for p in d)
        q = _xdiv(s, d)
        for l in range(m):
            Vr[l, r, cols] = np.where(act, q[0][l], Vr[l, r, cols])
            if cplx:
                Vi[l, r, cols] = np.where(act, q[1][l], Vi[l, r, cols])


_EW = {"add": md_add, "sub": md_sub, "mul": md_mul, "div": md_div}


@_quiet
def ew(op, xr, xi=None, yr=None, yi=None):
    xr = np.asarray(xr, dtype=np.float64)
    x = list(xr)
    if op == "sqrt":
        return np.stack(md_sqrt(x)), None
    y = list(np.asarray(yr, dtype=np.float64))
    if op in _EW:
        return np.stack(_EW[op](x, y)), None
    xi_l = list(np.asarray(xi, dtype=np.float64))
    yi_l = list(np.asarray(yi, dtype=np.float64))
    if op == "cmul":
        zr, zi = cmd_mul(x, xi_l, y, yi_l)
    elif op == "cdiv":
        zr, zi = cmd_div(x, xi_l, y, yi_l)
    else:
        raise KeyError(op)
    return np.stack(zr), np.stack(zi)


@_quiet
def renorm(x, m):
    """Renormalise the columns of an (nterms, n) array into m limbs."""
    x = np.asarray(x, dtype=np.float64)
    if not 1 <= x.shape[0] <= 18:
        raise ValueError("renorm supports 1..18 terms")
    return np.stack(_renorm(list(x), m))
