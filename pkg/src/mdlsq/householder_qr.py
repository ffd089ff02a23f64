"""Blocked Householder QR with the WY representation.

Each panel of n columns is factored column by column.  The n reflectors
H_j = I - beta_j v_j v_j^H aggregate into P = I + W Y^H, which then updates
Q and the trailing columns of R by matrix products:

    Q <- Q + (Q W) Y^H          via  T = Y W^H,  QWY = Q T^H
    R <- R + Y (W^H C)          via  YWTC = T C

For complex data every transpose is a Hermitian transpose.

The reflector of x maps it to -sign(x_1) ||x|| e_1 with sign(0) = +1,
v_1 = 1 and beta = 2 / (v^H v).  A column whose trailing part is already
zero still gets beta = 2 (when x_1 != 0), flipping its sign; only x = 0
gives the identity (beta = 0).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from ._backend import core as _default_core
from .exec_model import Device, LaunchSpec
from .flop_model import OpTally, element_bytes
from .kernels import T, gemm_launch, gemm_tally, geadd_launch, planes, row_blocks, sub
from .layout import StaggeredMatrix
from .md_arith import ComplexMultiDouble, MultiDouble

STAGES = ("beta_v", "betaRTv", "update_R", "compute_W", "YWT", "QWYT", "YWTC", "Q_plus_QWY", "R_plus_YWTC")


@dataclass
class HouseholderPanel:
    """Reflectors of one panel: Y[:, j] = v_j (unit at row j), W[:, j] = z_j.

    Rows are relative to the panel's first row ``row0``; Y and W have
    M - row0 rows.
    """

    row0: int
    Y: tuple
    W: tuple
    betas: list = field(default_factory=list)

    @property
    def n(self):
        return self.Y[0].shape[2]

    @property
    def rows(self):
        return self.Y[0].shape[1]


@dataclass
class QrFactors:
    Q: StaggeredMatrix
    R: StaggeredMatrix
    device: Device = None
    wall_ms: float = 0.0

    @property
    def ledger(self):
        return self.device.ledger

    @property
    def trace(self):
        return self.device.trace


# ----------------------------------------------------------------------
# scalar part of a reflector


def _element(Pr, Pi, i, j):
    re = MultiDouble.__new__(MultiDouble)
    re._limbs = tuple(float(v) for v in Pr[:, i, j])
    if Pi is None:
        return re
    im = MultiDouble.__new__(MultiDouble)
    im._limbs = tuple(float(v) for v in Pi[:, i, j])
    return ComplexMultiDouble(re, im)


def _store(Pr, Pi, i, j, val):
    if Pi is None:
        Pr[:, i, j] = val.limbs
    else:
        Pr[:, i, j] = val.re.limbs
        Pi[:, i, j] = val.im.limbs


def house_scalars(x0, sigma):
    """Scalars of the reflector for a column with head x0 and tail sum of squares sigma.

    Returns (inv, beta, diag, tally): the tail scales by ``inv`` to give v,
    ``diag`` is the new leading entry.  inv is None for the x = 0 case.
    """
    cplx = isinstance(x0, ComplexMultiDouble)
    m = sigma.m
    one = MultiDouble.one(m)
    ax2 = x0.abs2() if cplx else x0 * x0
    tally = OpTally.of(cplx, abs2=1)
    zero_head = ax2.limbs[0] == 0.0
    if zero_head and sigma.limbs[0] == 0.0:
        return None, MultiDouble.zero(m), x0, tally
    mu = (ax2 + sigma).sqrt()
    tally.update(OpTally.real(add=1, sqrt=1))
    if not cplx:
        smu = -mu if x0.limbs[0] < 0.0 else mu
    elif zero_head:
        smu = ComplexMultiDouble(mu)
    else:
        ax = ax2.sqrt()
        smu = ComplexMultiDouble(x0.re / ax * mu, x0.im / ax * mu)
        tally.update(OpTally.real(sqrt=1, div=2, mul=2))
    v0 = x0 + smu
    inv = one / v0 if not cplx else ComplexMultiDouble(one) / v0
    inv2 = inv.abs2() if cplx else inv * inv
    beta = MultiDouble.from_float(2.0, m) / (one + sigma * inv2)
    tally.update(OpTally.of(cplx, add=1, div=1, abs2=1))
    tally.update(OpTally.real(mul=1, add=1, div=1))
    return inv, beta, -smu, tally


def _scalar_planes(v, cplx):
    if not cplx:
        return np.array(v.limbs), None
    if isinstance(v, MultiDouble):
        return np.array(v.limbs), None
    return np.array(v.re.limbs), np.array(v.im.limbs)


def house(x, core=None):
    """Reflector of a StaggeredVector x: returns (v, beta) with v[0] = 1.

    Applying I - beta v v^H to x gives -sign(x_1) ||x|| e_1.
    """
    core = core or _default_core
    X = x.copy().as_matrix()
    Xp = planes(X)
    L = X.rows
    sigma_limbs = core.sumsq(Xp[0], Xp[1], 0, 1, L)
    sigma = MultiDouble.__new__(MultiDouble)
    sigma._limbs = tuple(float(v) for v in sigma_limbs)
    x0 = _element(*Xp, 0, 0)
    inv, beta, _, _ = house_scalars(x0, sigma)
    v = X.copy()
    v_p = planes(v)
    if inv is None:
        v.re[:] = 0.0
        if v.im is not None:
            v.im[:] = 0.0
    else:
        sr, si = _scalar_planes(inv, x.is_complex)
        core.scale(v_p[0], v_p[1], Xp[0], Xp[1], sr, si, 1, L, 0, 1)
    v.re[:, 0, 0] = 0.0
    v.re[0, 0, 0] = 1.0
    if v.im is not None:
        v.im[:, 0, 0] = 0.0
    from .layout import StaggeredVector

    return StaggeredVector(v.re[:, :, 0], None if v.im is None else v.im[:, :, 0]), beta


# ----------------------------------------------------------------------
# panel factorisation


class QrContext:
    """Shapes and handles shared by the stages of one factorisation."""

    def __init__(self, R, Q, n, device, core):
        self.R = R
        self.Q = Q
        self.Rp = planes(R)
        self.Qp = planes(Q)
        self.n = n
        self.device = device
        self.core = core
        self.m = R.m
        self.cplx = R.is_complex
        self.eb = element_bytes(self.m, self.cplx)
        self.M, self.K = R.rows, R.cols

    @classmethod
    def start(cls, A, n, device=None, core=None):
        """Context for factoring A with panels of n columns: R = copy of A, Q = I."""
        R = A.copy()
        Q = StaggeredMatrix.identity(A.rows, A.m, A.is_complex)
        return cls(R, Q, n, device or Device(A.m), core or _default_core)

    def zeros(self, *shape):
        re = np.zeros((self.m,) + shape)
        return re, (np.zeros((self.m,) + shape) if self.cplx else None)


def _beta_v(ctx, panel, j):
    """Reflector of column c = row0 + j of R; fills Y[:, j], beta_j and R[c:, c].

    Short columns (at most n entries) take one single-block launch.  Longer
    ones take three: block partial sums of squares over row ranges of n, a
    one-block finish reducing them and forming the head, and a scaling launch.
    The scalar part of the tally depends on the data (zero heads cost less),
    so it is added while the kernel runs; dry runs charge the generic case.
    """
    core, n, m, cplx = ctx.core, ctx.n, ctx.m, ctx.cplx
    Rr, Ri = ctx.Rp
    Yr, Yi = panel.Y
    c = panel.row0 + j
    M = ctx.M
    ns = M - c - 1
    dev = ctx.device
    state = {"beta": MultiDouble.zero(m)}

    def finish(sigma_limbs, tally):
        sigma = MultiDouble.__new__(MultiDouble)
        sigma._limbs = tuple(float(v) for v in sigma_limbs)
        inv, beta, diag, t = house_scalars(_element(Rr, Ri, c, c), sigma)
        state.update(inv=inv, beta=beta)
        tally.update(t)
        _store(Rr, Ri, c, c, diag)
        Yr[:, j, j] = 0.0
        Yr[0, j, j] = 1.0
        if Yi is not None:
            Yi[:, j, j] = 0.0

    def scale_rows(r0, r1, tally=None):
        # v_i = x_i inv on global rows [r0, r1), then clear them in R
        inv = state["inv"]
        ya, yb = r0 - panel.row0, r1 - panel.row0
        if inv is not None:
            sr, si = _scalar_planes(inv, cplx)
            core.scale(Yr[:, ya:yb, j : j + 1], None if Yi is None else Yi[:, ya:yb, j : j + 1],
                       Rr[:, r0:r1, c : c + 1], None if Ri is None else Ri[:, r0:r1, c : c + 1],
                       sr, si, 0, r1 - r0, 0, 1)
            if tally is not None:
                tally.update(OpTally.of(cplx, mul=r1 - r0))
        Rr[:, r0:r1, c] = 0.0
        if Ri is not None:
            Ri[:, r0:r1, c] = 0.0

    sumsq_tally = OpTally.of(cplx, abs2=ns, add=max(ns - 1, 0))
    if ns + 1 <= n:
        tally = OpTally(sumsq_tally)

        def block_body(_):
            finish(core.sumsq(Rr, Ri, c, c + 1, M), tally)
            if ns:
                scale_rows(c + 1, M, tally)

        if dev.dry_run:
            tally.update(_dry_house_tally(cplx) + OpTally.of(cplx, mul=ns))
        dev.launch(LaunchSpec("beta_v", 1, ns + 1, block_body=block_body, tally=tally,
                              nbytes=ctx.eb * 2 * (ns + 1)))
        panel.betas.append(state["beta"])
        return

    nb = row_blocks(ns, n)
    P = np.zeros((m, nb, 1))

    def partial(b):
        r0 = c + 1 + b * n
        P[:, b, 0] = core.sumsq(Rr, Ri, c, r0, min(r0 + n, M))

    sizes = [min(n, ns - b * n) for b in range(nb)]
    part_tally = OpTally.of(cplx, abs2=ns, add=sum(sz - 1 for sz in sizes))
    dev.launch(LaunchSpec("beta_v", nb, n, block_body=partial, tally=part_tally, nbytes=ctx.eb * ns))

    O = np.zeros((m, 1, 1))
    fin_tally = OpTally.real(add=nb - 1)

    def finish_body(_):
        core.treesum(O, None, P, None, 0, 1)
        finish(O[:, 0, 0], fin_tally)

    if dev.dry_run:
        fin_tally.update(_dry_house_tally(cplx))
    dev.launch(LaunchSpec("beta_v", 1, nb, block_body=finish_body, tally=fin_tally,
                          nbytes=ctx.eb * (nb + 1)))

    scale_tally = OpTally()

    def scale_body(b):
        r0 = c + 1 + b * n
        scale_rows(r0, min(r0 + n, M))

    if dev.dry_run or state.get("inv") is not None:
        scale_tally.update(OpTally.of(cplx, mul=ns))
    dev.launch(LaunchSpec("beta_v", nb, n, block_body=scale_body, tally=scale_tally,
                          nbytes=ctx.eb * 2 * ns))
    panel.betas.append(state["beta"])


def _dry_house_tally(cplx):
    # the generic case: nonzero head, complex sign computed from |x0|
    t = OpTally.of(cplx, abs2=1)
    t.update(OpTally.real(add=1, sqrt=1))
    if cplx:
        t.update(OpTally.real(sqrt=1, div=2, mul=2))
    t.update(OpTally.of(cplx, add=1, div=1, abs2=1))
    t.update(OpTally.real(mul=1, add=1, div=1))
    return t


def _betaRTv_update_R(ctx, panel, j):
    """Apply H_j to the remaining columns of the panel."""
    core, n, m, cplx = ctx.core, ctx.n, ctx.m, ctx.cplx
    c = panel.row0 + j
    c_end = panel.row0 + n
    ncols = c_end - c - 1
    if ncols <= 0:
        return
    M = ctx.M
    L = M - c
    dev = ctx.device
    v = sub(panel.Y, j, panel.rows, j, j + 1)  # (L x 1), rows c.. of the matrix
    Rblk = sub(ctx.Rp, c, M, c + 1, c_end)
    w = ctx.zeros(1, ncols)
    beta = panel.betas[j]
    br = np.array(beta.limbs)
    vh = T(v)

    if L <= n:
        def body(_):
            core.gemm(*w, *vh, *Rblk, True, False, 0, False, 0, 1, 0, ncols)
            core.scale(*w, *w, br, None, 0, 1, 0, ncols)

        tally = gemm_tally(cplx, 1, ncols, L) + OpTally.of(cplx, rmul=ncols)
        dev.launch(LaunchSpec("betaRTv", 1, ncols, block_body=body, tally=tally,
                              nbytes=ctx.eb * (L + L * ncols + ncols)))
    else:
        nb = row_blocks(L, n)
        P = ctx.zeros(nb, ncols)

        def partial(b):
            r0 = b * n
            r1 = min(r0 + n, L)
            core.gemm(*sub(P, b, b + 1, 0, ncols), *sub(vh, 0, 1, r0, r1), *sub(Rblk, r0, r1, 0, ncols),
                      True, False, 0, False, 0, 1, 0, ncols)

        sizes = [min(n, L - b * n) for b in range(nb)]
        ptally = OpTally.of(cplx, mul=L * ncols, add=sum(s - 1 for s in sizes) * ncols)
        dev.launch(LaunchSpec("betaRTv", nb, n, block_body=partial, tally=ptally,
                              nbytes=ctx.eb * (L + L * ncols + nb * ncols)))

        def combine(_):
            core.treesum(*w, *P, 0, ncols)
            core.scale(*w, *w, br, None, 0, 1, 0, ncols)

        ctally = OpTally.of(cplx, add=(nb - 1) * ncols, rmul=ncols)
        dev.launch(LaunchSpec("betaRTv", 1, ncols, block_body=combine, tally=ctally,
                              nbytes=ctx.eb * (nb * ncols + ncols)))

    # R[c:, c+1:c_end] -= v w
    spec = gemm_launch(core, "update_R", Rblk, v, w, mode=1, threads=n, m=m)
    dev.launch(spec)


def factor_panel(ctx, k):
    """Factor panel k of R in place; returns its HouseholderPanel."""
    n = ctx.n
    row0 = k * n
    L = ctx.M - row0
    panel = HouseholderPanel(row0, ctx.zeros(L, n), ctx.zeros(L, n))
    for j in range(n):
        _beta_v(ctx, panel, j)
        _betaRTv_update_R(ctx, panel, j)
    return panel


def compute_W(ctx, panel):
    """W columns z_j = -beta_j (v_j + W[:, :j] (Y[:, :j]^H v_j)), one column at a time."""
    core, n, m, cplx = ctx.core, ctx.n, ctx.m, ctx.cplx
    dev = ctx.device
    L = panel.rows
    Y, W = panel.Y, panel.W
    t = ctx.zeros(n, 1)
    for j in range(n):
        nbeta = np.array((-panel.betas[j]).limbs)
        vj = sub(Y, 0, L, j, j + 1)
        zj = sub(W, 0, L, j, j + 1)
        if j == 0:
            def body0(b, vj=vj, zj=zj, nbeta=nbeta):
                r0 = b * n
                core.scale(*zj, *vj, nbeta, None, r0, min(r0 + n, L), 0, 1)

            dev.launch(LaunchSpec("compute_W", row_blocks(L, n), min(n, L), block_body=body0,
                                  tally=OpTally.of(cplx, rmul=L), nbytes=ctx.eb * 2 * L))
            continue
        # t = Y[j:, :j]^H v_j[j:]; rows above j of v_j are zero
        tj = sub(t, 0, j, 0, 1)
        spec = gemm_launch(core, "compute_W", tj, T(sub(Y, j, L, 0, j)), sub(Y, j, L, j, j + 1),
                           conj_a=True, threads=n, m=m)
        dev.launch(spec)
        Wprev = sub(W, 0, L, 0, j)

        def body(b, j=j, vj=vj, zj=zj, nbeta=nbeta, tj=tj, Wprev=Wprev):
            r0 = b * n
            r1 = min(r0 + n, L)
            core.gemm(*zj, *Wprev, *tj, False, False, 0, False, r0, r1, 0, 1)
            a0 = max(r0, j)
            if a0 < r1:
                core.geadd(*zj, *vj, a0, r1, 0, 1)
            core.scale(*zj, *zj, nbeta, None, r0, r1, 0, 1)

        tally = gemm_tally(cplx, L, 1, j) + OpTally.of(cplx, add=L - j, rmul=L)
        dev.launch(LaunchSpec("compute_W", row_blocks(L, n), min(n, L), block_body=body, tally=tally,
                              nbytes=ctx.eb * (L * j + j + 2 * L)))


def update_Q(ctx, panel):
    """T = Y W^H, then Q[:, row0:] += Q[:, row0:] T^H.  Returns T for the R update."""
    core, n, m = ctx.core, ctx.n, ctx.m
    dev = ctx.device
    L = panel.rows
    c0 = panel.row0
    Tm = ctx.zeros(L, L)
    dev.launch(gemm_launch(core, "YWT", Tm, panel.Y, T(panel.W), conj_b=True, threads=n, m=m))
    Qblk = sub(ctx.Qp, 0, ctx.M, c0, ctx.M)
    QWY = ctx.zeros(ctx.M, L)
    dev.launch(gemm_launch(core, "QWYT", QWY, Qblk, T(Tm), conj_b=True, threads=n, m=m))
    dev.launch(geadd_launch(core, "Q_plus_QWY", Qblk, QWY, threads=n, m=m))
    return Tm


def update_R(ctx, panel, Tm):
    """R[row0:, row0+n:] += T R[row0:, row0+n:]."""
    core, n, m = ctx.core, ctx.n, ctx.m
    dev = ctx.device
    c0 = panel.row0
    C = sub(ctx.Rp, c0, ctx.M, c0 + n, ctx.K)
    YWTC = ctx.zeros(ctx.M - c0, ctx.K - c0 - n)
    dev.launch(gemm_launch(core, "YWTC", YWTC, Tm, C, threads=n, m=m))
    dev.launch(geadd_launch(core, "R_plus_YWTC", C, YWTC, threads=n, m=m))


def blocked_qr(A, N, n, device=None, core=None):
    """Factor the M x Nn matrix A as Q R with N panels of n columns."""
    core = core or _default_core
    M, K = A.rows, A.cols
    if N < 1 or n < 1 or K != N * n:
        raise ValueError(f"A has {K} columns, expected N*n = {N * n}")
    if M < K:
        raise ValueError(f"need at least as many rows as columns, got {M}x{K}")
    device = device or Device(A.m)
    t0 = time.perf_counter()
    ctx = QrContext.start(A, n, device, core)
    for k in range(N):
        panel = factor_panel(ctx, k)
        compute_W(ctx, panel)
        Tm = update_Q(ctx, panel)
        if k < N - 1:
            update_R(ctx, panel, Tm)
    wall = (time.perf_counter() - t0) * 1e3
    return QrFactors(ctx.Q, ctx.R, device, wall)


def unblocked_qr(A, core=None):
    """Column-by-column Householder QR with the same reflectors, no WY aggregation.

    R[c:, c+1:] -= v (beta v^H R[c:, c+1:]) and Q[:, c:] -= (Q[:, c:] v) beta v^H.
    Used as a reference for the blocked factorisation.
    """
    core = core or _default_core
    M, K = A.rows, A.cols
    if M < K:
        raise ValueError("need at least as many rows as columns")
    R = A.copy()
    Q = StaggeredMatrix.identity(M, A.m, A.is_complex)
    Rp, Qp = planes(R), planes(Q)
    cplx, m = A.is_complex, A.m

    def zeros(*shape):
        return np.zeros((m,) + shape), (np.zeros((m,) + shape) if cplx else None)

    for c in range(K):
        L = M - c
        sigma = MultiDouble.__new__(MultiDouble)
        sigma._limbs = tuple(float(v) for v in core.sumsq(Rp[0], Rp[1], c, c + 1, M))
        inv, beta, diag, _ = house_scalars(_element(*Rp, c, c), sigma)
        if inv is None:
            continue
        v = zeros(L, 1)
        sr, si = _scalar_planes(inv, cplx)
        core.scale(*v, *sub(Rp, c, M, c, c + 1), sr, si, 1, L, 0, 1)
        v[0][0, 0, 0] = 1.0
        _store(*Rp, c, c, diag)
        Rp[0][:, c + 1 :, c] = 0.0
        if cplx:
            Rp[1][:, c + 1 :, c] = 0.0
        br = np.array(beta.limbs)
        if c + 1 < K:
            w = zeros(1, K - c - 1)
            core.gemm(*w, *T(v), *sub(Rp, c, M, c + 1, K), True, False, 0, False, 0, 1, 0, K - c - 1)
            core.scale(*w, *w, br, None, 0, 1, 0, K - c - 1)
            core.gemm(*sub(Rp, c, M, c + 1, K), *v, *w, False, False, 1, False, 0, L, 0, K - c - 1)
        u = zeros(M, 1)
        Qb = sub(Qp, 0, M, c, M)
        core.gemm(*u, *Qb, *v, False, False, 0, False, 0, M, 0, 1)
        core.scale(*u, *u, br, None, 0, M, 0, 1)
        core.gemm(*Qb, *u, *T(v), False, True, 1, False, 0, M, 0, L)
    return QrFactors(Q, R)


# ----------------------------------------------------------------------
# factorisation quality at working precision


def orthogonality_error(Q, core=None):
    """||Q^H Q - I||_max."""
    core = core or _default_core
    M = Q.cols
    G = StaggeredMatrix.zeros(M, M, Q.m, Q.is_complex)
    Qr, Qi = planes(Q)
    core.gemm(G.re, G.im, *T((Qr, Qi)), Qr, Qi, True, False, 0, False, 0, M, 0, M)
    # the leading limbs of the diagonal are within 2^-50 of one, so this is exact
    G.re[0] -= np.eye(M)
    return G.renormalize().max_abs()


def reconstruction_error(Q, R, A, core=None):
    """||Q R - A||_max / ||A||_max."""
    core = core or _default_core
    D = A.copy()
    core.gemm(*planes(D), *planes(Q), *planes(R), False, False, 1, False, 0, A.rows, 0, A.cols)
    scale = A.max_abs()
    return D.max_abs() / scale if scale else D.max_abs()


def triangularity_error(R, A):
    """Largest strictly-below-diagonal entry of R relative to ||A||_max."""
    low = np.tril(np.ones(R.shape, dtype=bool), -1)
    lead = np.abs(R.leading())
    worst = float(lead[low].max(initial=0.0))
    scale = A.max_abs()
    return worst / scale if scale else worst
