"""Launch builders for the matrix kernels shared by QR and back substitution.

Operands are ``(re, im)`` pairs of plane arrays shaped (m, rows, cols);
``im`` is None for real data.  Products split their output by contiguous row
ranges, one block per range, so blocks never write the same element.
"""

from .exec_model import LaunchSpec
from .flop_model import OpTally, element_bytes


def planes(X):
    """(re, im) of a StaggeredMatrix or StaggeredVector (as a column)."""
    if hasattr(X, "as_matrix"):
        X = X.as_matrix()
    return X.re, X.im


def sub(P, r0, r1, c0, c1):
    re, im = P
    return re[:, r0:r1, c0:c1], None if im is None else im[:, r0:r1, c0:c1]


def T(P):
    """Transpose view (conjugation is requested separately)."""
    re, im = P
    return re.transpose(0, 2, 1), None if im is None else im.transpose(0, 2, 1)


def row_blocks(rows, threads):
    return max(1, -(-rows // threads))


def gemm_tally(cplx, rows, cols, K, upper=False, mode=0, row0=0):
    """Ops of C (=|-=) A B: one mul per term, terms - 1 adds, plus a sub when mode is 1.

    With ``upper`` the row with global index i sums only k >= i (row0 is the
    global index of the first output row).
    """
    mul = add = 0
    if upper:
        for i in range(row0, row0 + rows):
            t = max(K - i, 0)
            mul += t * cols
            add += max(t - 1, 0) * cols
    else:
        mul = rows * cols * K
        add = rows * cols * max(K - 1, 0)
    return OpTally.of(cplx, mul=mul, add=add, sub=rows * cols if mode == 1 else 0)


def gemm_launch(core, stage, C, A, B, *, conj_a=False, conj_b=False, mode=0, upper=False,
                threads=64, m, tally=None):
    """One launch computing C (=|-=) op(A) op(B) over the full C extent."""
    Cr, Ci = C
    Ar, Ai = A
    Br, Bi = B
    rows, cols = Cr.shape[1], Cr.shape[2]
    K = Ar.shape[2]
    cplx = Ci is not None
    blocks = row_blocks(rows, threads)

    def block_body(b):
        r0 = b * threads
        r1 = min(r0 + threads, rows)
        core.gemm(Cr, Ci, Ar, Ai, Br, Bi, conj_a, conj_b, mode, upper, r0, r1, 0, cols)

    if tally is None:
        tally = gemm_tally(cplx, rows, cols, K, upper, mode)
    eb = element_bytes(m, cplx)
    nbytes = eb * (Ar.shape[1] * K + K * cols + rows * cols)
    return LaunchSpec(stage, blocks, min(threads, rows), block_body=block_body, tally=tally,
                      nbytes=nbytes)


def geadd_launch(core, stage, C, A, *, threads=64, m):
    """C += A elementwise."""
    Cr, Ci = C
    Ar, Ai = A
    rows, cols = Cr.shape[1], Cr.shape[2]
    cplx = Ci is not None
    blocks = row_blocks(rows, threads)

    def block_body(b):
        r0 = b * threads
        core.geadd(Cr, Ci, Ar, Ai, r0, min(r0 + threads, rows), 0, cols)

    return LaunchSpec(stage, blocks, min(threads, rows), block_body=block_body,
                      tally=OpTally.of(cplx, add=rows * cols),
                      nbytes=element_bytes(m, cplx) * 2 * rows * cols)


def matvec(device, core, A, x, y, stage="matvec", threads=None, conj=False):
    """y = op(A) x in one launch; real ops: rows*cols mul and rows*(cols-1) add."""
    Ap = planes(A)
    if conj:
        Ap = T(Ap)
    xp = planes(x)
    yp = planes(y)
    rows = Ap[0].shape[1]
    spec = gemm_launch(core, stage, yp, Ap, xp, conj_a=conj, threads=threads or rows, m=device.m)
    return device.launch(spec)
