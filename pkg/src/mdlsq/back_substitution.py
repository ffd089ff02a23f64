"""Tiled back substitution for an upper triangular Nn x Nn system.

All N diagonal tiles are inverted in one launch.  The solve then walks the
tiles bottom-up: x_i = inv(U_ii) b_i in one launch, followed by one launch
per update b_j -= U_ji x_i for j < i.  That makes 1 + N(N+1)/2 launches.
"""

import numpy as np

from ._backend import core as _default_core
from .exec_model import Device, LaunchSpec
from .flop_model import OpTally, element_bytes
from .kernels import gemm_launch, gemm_tally, planes, sub
from .layout import StaggeredVector

STAGE_INVERT = "invert_diagonal_tiles"
STAGE_MULTIPLY = "multiply_with_inverses"
STAGE_UPDATE = "back_substitution_update"
STAGES = (STAGE_INVERT, STAGE_MULTIPLY, STAGE_UPDATE)

_TINY = np.finfo(np.float64).tiny


class SingularTileError(ArithmeticError):
    def __init__(self, tile, row):
        super().__init__(f"diagonal tile {tile} is singular at row {row}")
        self.tile = tile
        self.row = row


def check_tiling(U, N, n):
    if N < 1 or n < 1:
        raise ValueError("need at least one tile of size at least one")
    if U.rows != N * n or U.cols != N * n:
        raise ValueError(f"U is {U.rows}x{U.cols}, expected {N * n}x{N * n} for {N} tiles of {n}")


def _check_diagonal(U, N, n):
    d = np.abs(np.diagonal(U.leading()))
    bad = np.flatnonzero(~(d >= _TINY))
    if bad.size:
        i = int(bad[0])
        raise SingularTileError(i // n, i % n)


def invert_tile_tally(cplx, n):
    """Ops of one tile inversion: thread k does k+1 div, k(k+1)/2 mul, k(k-1)/2 add."""
    div = sum(k + 1 for k in range(n))
    mul = sum(k * (k + 1) // 2 for k in range(n))
    add = sum(k * (k - 1) // 2 for k in range(n))
    return OpTally.of(cplx, div=div, mul=mul, add=add)


def invert_diagonal_tiles(U, N, n, device, core=None, inplace=False):
    """Invert the N diagonal tiles in one launch of N blocks x n threads.

    Returns (Vr, Vi) with shape (N, m, n, n); thread k of block i solves
    U_ii v = e_k for column k of the inverse.  With ``inplace`` the inverses
    also replace the tiles of U.
    """
    core = core or _default_core
    check_tiling(U, N, n)
    if not device.dry_run:
        _check_diagonal(U, N, n)
    m, cplx = U.m, U.is_complex
    Vr = np.zeros((N, m, n, n))
    Vi = np.zeros((N, m, n, n)) if cplx else None

    def block_body(i):
        s = slice(i * n, (i + 1) * n)
        Ur = U.re[:, s, s]
        Ui = None if U.im is None else U.im[:, s, s]
        core.invtile(Vr[i], None if Vi is None else Vi[i], Ur, Ui, 0, n)

    spec = LaunchSpec(
        STAGE_INVERT, N, n, block_body=block_body,
        tally=invert_tile_tally(cplx, n).scaled(N),
        nbytes=element_bytes(m, cplx) * 2 * N * n * n,
    )
    device.launch(spec)
    if inplace and not device.dry_run:
        for i in range(N):
            s = slice(i * n, (i + 1) * n)
            U.re[:, s, s] = Vr[i]
            if cplx:
                U.im[:, s, s] = Vi[i]
    return Vr, Vi


def tiled_back_sub(U, b, N, n, device=None, core=None):
    """Solve U x = b with N tiles of size n; returns x as a StaggeredVector."""
    core = core or _default_core
    check_tiling(U, N, n)
    if len(b) != N * n:
        raise ValueError(f"right-hand side has length {len(b)}, expected {N * n}")
    if b.m != U.m or b.is_complex != U.is_complex:
        raise ValueError("U and b differ in precision or complexity")
    device = device or Device(U.m)
    m, cplx = U.m, U.is_complex
    Vr, Vi = invert_diagonal_tiles(U, N, n, device, core)

    rhs = b.copy()
    x = StaggeredVector.zeros(N * n, m, cplx)
    Up = planes(U)
    bp = planes(rhs)
    xp = planes(x)
    eb = element_bytes(m, cplx)
    mul_tally = gemm_tally(cplx, n, 1, n, upper=True)
    for i in range(N - 1, -1, -1):
        s0, s1 = i * n, (i + 1) * n
        V = (Vr[i], None if Vi is None else Vi[i])
        xi = sub(xp, s0, s1, 0, 1)
        spec = gemm_launch(core, STAGE_MULTIPLY, xi, V, sub(bp, s0, s1, 0, 1), upper=True,
                           threads=n, m=m, tally=mul_tally)
        spec.nbytes = eb * (n * (n + 1) // 2 + 2 * n)
        device.launch(spec)
        for j in range(i):
            t0, t1 = j * n, (j + 1) * n
            spec = gemm_launch(core, STAGE_UPDATE, sub(bp, t0, t1, 0, 1), sub(Up, t0, t1, s0, s1),
                               xi, mode=1, threads=n, m=m)
            device.launch(spec)
    return x


def back_sub_reference(U, b):
    """Plain row-by-row back substitution at the same precision (no tiling)."""
    n = U.rows
    if U.cols != n or len(b) != n:
        raise ValueError("shape mismatch")
    x = [None] * n
    for i in range(n - 1, -1, -1):
        s = b.get(i)
        for j in range(i + 1, n):
            s = s - U.get(i, j) * x[j]
        x[i] = s / U.get(i, i)
    return StaggeredVector.from_elements(x)


def upper_residual(U, x, b):
    """Relative residual max|b - U x| / (||U||_inf ||x||_inf) at working precision."""
    from .solver import residual_vector

    r = residual_vector(U, x, b)
    denom = U.inf_norm() * x.max_abs()
    return r.max_abs() / denom if denom else r.max_abs()


__all__ = [
    "STAGES", "SingularTileError", "invert_diagonal_tiles", "tiled_back_sub",
    "back_sub_reference", "upper_residual", "invert_tile_tally",
]
