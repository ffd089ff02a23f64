"""Compare the compiled kernel core against the numpy fallback.

    python3 benchmarks/bench_backends.py [--precision qd] [--dim 64] [--repeat 3]

Each row times one kernel (or a full solve) on both cores and reports the
speedup of the compiled core.  Results are also checked for bit equality.
"""

import argparse
import time

import numpy as np

from mdlsq import _backend
from mdlsq.exec_model import Device
from mdlsq.kernels import planes
from mdlsq.layout import StaggeredMatrix, random_matrix, random_vector
from mdlsq.md_arith import PRECISIONS
from mdlsq.solver import lstsq_solve


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(m, dim, cplx):
    A = random_matrix(dim, dim, m, 1, cplx)
    B = random_matrix(dim, dim, m, 2, cplx)
    b = random_vector(dim, m, 3, cplx)
    x, y = planes(A)[0].reshape(m, -1), np.abs(planes(B)[0].reshape(m, -1)) + 1.0

    def ew(op):
        return lambda core: core.ew(op, x, yr=y)[0]

    def gemm(core):
        C = StaggeredMatrix.zeros(dim, dim, m, cplx)
        core.gemm(*planes(C), *planes(A), *planes(B), False, False, 0, False, 0, dim, 0, dim)
        return C.re

    def solve(core):
        return lstsq_solve(A, b, 4, dim // 4, Device(m), core).x.re

    ops = [(f"ew {op} ({x.shape[1]} elements)", ew(op)) for op in ("add", "mul", "div", "sqrt")]
    return ops + [(f"gemm {dim}x{dim}", gemm), (f"solve {dim}x{dim}, 4 tiles", solve)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--precision", choices=[k for k in PRECISIONS if k != "d"], default="qd")
    p.add_argument("--dim", type=int, default=64, help="matrix dimension, a multiple of 4")
    p.add_argument("--complex", action="store_true")
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    names = _backend.available()
    if "compiled" not in names:
        raise SystemExit("compiled core is not built; run `pip install -e . --no-build-isolation`")
    compiled, python = _backend.get_core("compiled"), _backend.get_core("python")
    m = PRECISIONS[args.precision]

    print(f"precision {args.precision}, {'complex' if args.complex else 'real'}, best of {args.repeat}")
    print(f"{'case':<32}{'compiled s':>12}{'python s':>12}{'speedup':>10}  identical")
    for name, fn in cases(m, args.dim, args.complex):
        tc, rc = best_of(lambda: fn(compiled), args.repeat)
        tp, rp = best_of(lambda: fn(python), args.repeat)
        same = np.array_equal(rc.view(np.int64), rp.view(np.int64))
        print(f"{name:<32}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {'yes' if same else 'NO'}")


if __name__ == "__main__":
    main()
