"""Least squares by blocked QR followed by tiled back substitution."""

import csv
import io
import math
import time
from dataclasses import dataclass

import numpy as np

from ._backend import core as _default_core
from .back_substitution import tiled_back_sub
from .exec_model import Device
from .householder_qr import blocked_qr
from .kernels import matvec, planes
from .layout import StaggeredMatrix, StaggeredVector

SUMMARY_COLUMNS = ["qr_kernel_ms", "qr_wall_ms", "bs_kernel_ms", "bs_wall_ms", "qr_flops", "bs_flops",
                   "total_flops", "residual"]


@dataclass
class LstsqResult:
    x: StaggeredVector
    qr: object
    qr_device: Device
    bs_device: Device
    qr_wall_ms: float
    bs_wall_ms: float
    residual_abs: float = math.nan
    residual_rel: float = math.nan
    projected_residual: float = math.nan

    @property
    def qr_ledger(self):
        return self.qr_device.ledger

    @property
    def bs_ledger(self):
        return self.bs_device.ledger

    def summary(self):
        qf = self.qr_ledger.flops()
        bf = self.bs_ledger.flops()
        return {
            "qr_kernel_ms": self.qr_device.kernel_ms(),
            "qr_wall_ms": self.qr_wall_ms,
            "bs_kernel_ms": self.bs_device.kernel_ms(),
            "bs_wall_ms": self.bs_wall_ms,
            "qr_flops": qf,
            "bs_flops": bf,
            "total_flops": qf + bf,
            "residual": self.residual_rel,
        }

    def summary_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        w.writeheader()
        row = self.summary()
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def residual_vector(A, x, b, core=None):
    """b - A x at working precision."""
    core = core or _default_core
    if A.cols != len(x) or A.rows != len(b):
        raise ValueError("shape mismatch")
    r = b.copy()
    rp = planes(r)
    core.gemm(*rp, *planes(A), *planes(x), False, False, 1, False, 0, A.rows, 0, 1)
    return r


def residual_norms(A, x, b, core=None):
    """(||b - A x||_2, ||b - A x||_inf / (||A||_inf ||x||_inf)).

    Norms are taken of the leading limbs of the working-precision residual,
    which is accurate to a relative 2^-52 and far outside the residual's size.
    """
    r = residual_vector(A, x, b, core).leading()
    absolute = float(np.linalg.norm(r))
    denom = A.inf_norm() * float(np.max(np.abs(x.leading()), initial=0.0))
    rinf = float(np.max(np.abs(r), initial=0.0))
    return absolute, (rinf / denom if denom else rinf)


def optimality_residual(A, x, b, core=None):
    """||A^H (b - A x)||_inf / (||A||_inf ||b||_inf), zero at the least squares solution."""
    core = core or _default_core
    r = residual_vector(A, x, b, core)
    g = StaggeredVector.zeros(A.cols, A.m, A.is_complex)
    Ar, Ai = planes(A)
    core.gemm(*planes(g), Ar.transpose(0, 2, 1), None if Ai is None else Ai.transpose(0, 2, 1),
              *planes(r), True, False, 0, False, 0, A.cols, 0, 1)
    denom = A.inf_norm() * b.max_abs()
    return g.max_abs() / denom if denom else g.max_abs()


def lstsq_solve(A, b, N, n, device=None, core=None, check=True):
    """Minimise ||b - A x||_2 for an M x Nn matrix A of full column rank.

    y = Q^H b is formed in one extra launch ("qtb", charged to QR) and its
    leading Nn entries feed the back substitution on the leading block of R.
    """
    core = core or _default_core
    if A.cols != N * n:
        raise ValueError(f"A has {A.cols} columns, expected N*n = {N * n}")
    if len(b) != A.rows:
        raise ValueError("right-hand side length does not match A")
    if b.m != A.m or b.is_complex != A.is_complex:
        raise ValueError("A and b differ in precision or complexity")
    device = device or Device(A.m)
    qdev, bdev = device.fork(), device.fork()
    K = A.cols

    t0 = time.perf_counter()
    qr = blocked_qr(A, N, n, qdev, core)
    y = StaggeredVector.zeros(A.rows, A.m, A.is_complex)
    matvec(qdev, core, qr.Q, b, y, stage="qtb", threads=n, conj=True)
    qr_wall = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    Rk = StaggeredMatrix(qr.R.re[:, :K, :K], None if qr.R.im is None else qr.R.im[:, :K, :K])
    yk = StaggeredVector(y.re[:, :K], None if y.im is None else y.im[:, :K])
    x = tiled_back_sub(Rk, yk, N, n, bdev, core)
    bs_wall = (time.perf_counter() - t0) * 1e3

    qdev.ledger.wall_ms = qr_wall
    bdev.ledger.wall_ms = bs_wall
    res = LstsqResult(x, qr, qdev, bdev, qr_wall, bs_wall)
    if check and not device.dry_run:
        res.residual_abs, res.residual_rel = residual_norms(A, x, b, core)
        res.projected_residual = float(np.linalg.norm(y.leading()[K:]))
    return res
