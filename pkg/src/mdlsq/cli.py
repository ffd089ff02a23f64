"""Command-line driver: run QR, back substitution or a full solve and report per-stage costs."""

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import dataclass

from .back_substitution import SingularTileError, tiled_back_sub
from .exec_model import BACKENDS, Device, trace_csv
from .flop_model import BYTE_MODEL, FlopLedger, ledger_report, report_csv
from .householder_qr import blocked_qr, orthogonality_error, reconstruction_error
from .layout import RNG_ID, random_matrix, random_upper_triangular, random_vector
from .md_arith import PRECISIONS
from .solver import lstsq_solve, optimality_residual, residual_norms

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("mdlsq")


@dataclass
class RunConfig:
    mode: str = "solve"
    precision: str = "qd"
    rows: int = 256
    tiles: int = 4
    tile_size: int = 64
    complex: bool = False
    seed: int = 1
    backend: str = "parallel"
    workers: int = None
    out: str = "-"

    @property
    def m(self):
        return PRECISIONS[self.precision]

    @property
    def cols(self):
        return self.tiles * self.tile_size


def build_parser():
    p = argparse.ArgumentParser(prog="mdlsq", description=__doc__)
    p.add_argument("--mode", choices=("qr", "bs", "solve"), default="solve")
    p.add_argument("--precision", choices=tuple(PRECISIONS), default="qd")
    p.add_argument("--rows", type=int, default=256, help="rows of A (qr, solve)")
    p.add_argument("--tiles", type=int, default=4, help="number of tiles N")
    p.add_argument("--tile-size", type=int, default=64, help="tile size n")
    p.add_argument("--complex", action="store_true", help="complex data")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--backend", choices=BACKENDS, default="parallel")
    p.add_argument("--workers", type=int, default=None, help="thread pool size (default: all cores)")
    p.add_argument("--out", default="-", help="output directory, or - for stdout")
    p.add_argument("--sweep-dims", default=None,
                   help="comma-separated square dimensions; tile size becomes dim / tiles")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _configs(args, parser):
    base = dict(mode=args.mode, precision=args.precision, complex=args.complex, seed=args.seed,
                backend=args.backend, workers=args.workers, out=args.out)
    if args.tiles < 1 or args.tile_size < 1:
        parser.error("--tiles and --tile-size must be positive")
    if args.workers is not None and args.workers < 1:
        parser.error("--workers must be positive")
    if args.sweep_dims is None:
        cfg = RunConfig(rows=args.rows, tiles=args.tiles, tile_size=args.tile_size, **base)
        if cfg.mode != "bs" and cfg.rows < cfg.cols:
            parser.error(f"--rows {cfg.rows} is less than tiles * tile-size = {cfg.cols}")
        return [cfg]
    out = []
    for tok in args.sweep_dims.split(","):
        try:
            d = int(tok)
        except ValueError:
            parser.error(f"bad dimension {tok!r} in --sweep-dims")
        if d < 1 or d % args.tiles:
            parser.error(f"dimension {d} is not a positive multiple of --tiles {args.tiles}")
        out.append(RunConfig(rows=d, tiles=args.tiles, tile_size=d // args.tiles, **base))
    return out


def memory_heavy(cfg):
    """Complex octo double above dimension 2048."""
    dim = max(cfg.rows, cfg.cols) if cfg.mode != "bs" else cfg.cols
    return cfg.complex and cfg.precision == "od" and dim > 2048


def run(cfg):
    """Execute one configuration; returns (exit code, dict of output texts)."""
    m = cfg.m
    if memory_heavy(cfg):
        log.warning("complex octo double at dimension %d needs a lot of memory", max(cfg.rows, cfg.cols))
    device = Device(m, backend=cfg.backend, workers=cfg.workers)
    lines = [f"mdlsq {cfg.mode}: precision {cfg.precision}"
             + (" (reference only)" if m == 1 else "")
             + f", {'complex' if cfg.complex else 'real'}, backend {cfg.backend}, seed {cfg.seed}, rng {RNG_ID}"]
    residual = math.nan
    extra = []
    try:
        with device:
            if cfg.mode == "qr":
                A = random_matrix(cfg.rows, cfg.cols, m, cfg.seed, cfg.complex)
                qr = blocked_qr(A, cfg.tiles, cfg.tile_size, device)
                ledger = device.ledger
                ledger.wall_ms = qr.wall_ms
                traces = device.trace
                finite = qr.R.is_valid() and qr.Q.is_valid()
                lines.append(f"dimension {cfg.rows}x{cfg.cols}, {cfg.tiles} tiles of size {cfg.tile_size}")
                if finite:
                    lines.append(f"orthogonality error: {orthogonality_error(qr.Q):.3e},"
                                 f" reconstruction error: {reconstruction_error(qr.Q, qr.R, A):.3e}")
                summary = None
            elif cfg.mode == "bs":
                n = cfg.cols
                U = random_upper_triangular(n, m, cfg.seed, cfg.complex)
                b = random_vector(n, m, cfg.seed + 1, cfg.complex)
                t0 = time.perf_counter()
                x = tiled_back_sub(U, b, cfg.tiles, cfg.tile_size, device)
                ledger = device.ledger
                ledger.wall_ms = (time.perf_counter() - t0) * 1e3
                traces = device.trace
                _, residual = residual_norms(U, x, b)
                finite = math.isfinite(residual)
                lines.append(f"dimension {n}, {cfg.tiles} tiles of size {cfg.tile_size}")
                summary = None
            else:
                A = random_matrix(cfg.rows, cfg.cols, m, cfg.seed, cfg.complex)
                b = random_vector(cfg.rows, m, cfg.seed + 1, cfg.complex)
                res = lstsq_solve(A, b, cfg.tiles, cfg.tile_size, device)
                ledger = FlopLedger(m).merge(res.qr_ledger).merge(res.bs_ledger)
                traces = res.qr_device.trace + res.bs_device.trace
                residual = res.residual_rel
                finite = math.isfinite(residual)
                summary = res.summary_csv()
                s = res.summary()
                lines.append(f"dimension {cfg.rows}x{cfg.cols}, {cfg.tiles} tiles of size {cfg.tile_size}")
                lines.append(f"QR: all kernels {s['qr_kernel_ms']:.3f} ms, wall clock {s['qr_wall_ms']:.3f} ms,"
                             f" {s['qr_flops']} flops")
                lines.append(f"BS: all kernels {s['bs_kernel_ms']:.3f} ms, wall clock {s['bs_wall_ms']:.3f} ms,"
                             f" {s['bs_flops']} flops")
                if finite and cfg.rows > cfg.cols:
                    # b - Ax need not be small when overdetermined; A^H (b - Ax) must be
                    extra.append(f"optimality residual: {optimality_residual(A, res.x, b):.3e}")
    except SingularTileError as exc:
        return EXIT_NUMERICAL, {"summary.txt": "\n".join(lines + [f"error: {exc}"]) + "\n"}

    rows = ledger_report(ledger)
    kernel_ms = ledger.kernel_ms()
    flops = ledger.flops()
    nbytes = sum(st.nbytes for st in ledger.stages.values())
    lines.append(f"all kernels: {kernel_ms:.3f} ms, wall clock: {ledger.wall_ms:.3f} ms, launches: {len(traces)}")
    rate = flops / (kernel_ms * 1e6) if kernel_ms > 0 else None
    lines.append(f"total flops: {flops}, kernel gigaflops: {'n/a' if rate is None else f'{rate:.4g}'},"
                 f" arithmetic intensity: {flops / nbytes if nbytes else float('nan'):.4g} flops/byte")
    lines.append(f"byte model: {BYTE_MODEL}")
    if not math.isnan(residual):
        lines.append(f"relative residual: {residual:.3e}")
    lines.extend(extra)
    outputs = {"stages.csv": report_csv(rows), "trace.csv": trace_csv(traces)}
    if summary is not None:
        outputs["summary.csv"] = summary
    if not finite:
        lines.append("error: non-finite result")
    outputs["summary.txt"] = "\n".join(lines) + "\n"
    return (EXIT_OK if finite else EXIT_NUMERICAL), outputs


def _emit(outputs, out, tag=None):
    if out == "-":
        sys.stdout.write(outputs["summary.txt"])
        for name in ("stages.csv", "summary.csv", "trace.csv"):
            if name in outputs:
                sys.stdout.write(f"\n# {name}\n{outputs[name]}")
        return
    os.makedirs(out, exist_ok=True)
    for name, text in outputs.items():
        if tag is not None:
            stem, ext = os.path.splitext(name)
            name = f"{stem}_{tag}{ext}"
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    configs = _configs(args, parser)
    status = EXIT_OK
    for cfg in configs:
        code, outputs = run(cfg)
        _emit(outputs, cfg.out, tag=cfg.rows if args.sweep_dims else None)
        if code != EXIT_OK:
            sys.stderr.write(outputs["summary.txt"].splitlines()[-1] + "\n")
            status = code
    return status


if __name__ == "__main__":
    sys.exit(main())
