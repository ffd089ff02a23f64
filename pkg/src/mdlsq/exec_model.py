"""Kernel launches over a grid of blocks and threads.

A launch runs one kernel body for every (block, thread) pair.  Launches are
strictly ordered; blocks of one launch are independent and may run on a
thread pool; threads of one block cooperate through a barrier.

Thread bodies are plain functions or generators.  In a generator every
``yield`` is a block-wide barrier: the scheduler advances all threads of the
block to their next ``yield`` before any continues.  Kernels that need no
intra-block synchronisation may instead supply ``block_body(block)``, which
does a whole block's work at once (usually one call into the compiled core).
"""

import csv
import inspect
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Callable, Optional

from .flop_model import FlopLedger, OpTally

BACKENDS = ("serial", "parallel")


class LaunchError(RuntimeError):
    pass


class DivergentBarrierError(LaunchError):
    """Some threads of a block waited at a barrier that others skipped."""


class OverlappingWritesError(LaunchError):
    """Two (block, thread) pairs declared the same write location."""


@dataclass
class LaunchSpec:
    stage: str
    blocks: int
    threads: int
    body: Optional[Callable] = None
    block_body: Optional[Callable] = None
    tally: OpTally = field(default_factory=OpTally)
    nbytes: int = 0
    shared: Optional[Callable] = None
    writes: Optional[Callable] = None

    def __post_init__(self):
        if self.blocks < 1 or self.threads < 1:
            raise ValueError(f"launch {self.stage!r} needs B >= 1 and T >= 1")
        if (self.body is None) == (self.block_body is None):
            raise ValueError("give exactly one of body and block_body")


@dataclass(frozen=True)
class LaunchRecord:
    stage: str
    blocks: int
    threads: int
    ms: float
    flops: int


TRACE_COLUMNS = ["stage", "B", "T", "ms", "flops"]


class Device:
    """Executes launches and keeps their trace and flop ledger.

    backend: "serial" runs blocks in order; "parallel" maps blocks onto a
    thread pool of ``workers`` threads (default: available cores).
    dry_run: skip execution, keep the bookkeeping (for op counts at sizes
    too large to run).
    debug: check declared write partitions for overlap.
    """

    def __init__(self, m, backend="serial", workers=None, debug=False, dry_run=False, _pool=None):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        self.m = m
        self.backend = backend
        self.workers = workers or os.cpu_count() or 1
        self.debug = debug
        self.dry_run = dry_run
        self.ledger = FlopLedger(m)
        self.trace = []
        self._pool = _pool
        self._owns_pool = False

    def fork(self):
        """A device sharing this one's settings and pool, with a fresh ledger."""
        return Device(
            self.m, self.backend, self.workers, self.debug, self.dry_run, _pool=self._ensure_pool()
        )

    def _ensure_pool(self):
        if self.backend != "parallel":
            return None
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="mdlsq-block")
            self._owns_pool = True
        return self._pool

    def close(self):
        if self._owns_pool and self._pool is not None:
            self._pool.shutdown()
        self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # launching

    def launch(self, spec):
        if self.debug and spec.writes is not None:
            _check_partition(spec)
        t0 = time.perf_counter()
        if not self.dry_run:
            run = spec.block_body if spec.block_body is not None else _block_runner(spec)
            if self.backend == "parallel" and spec.blocks > 1:
                # list() drains the iterator so worker exceptions surface here
                list(self._ensure_pool().map(run, range(spec.blocks)))
            else:
                for b in range(spec.blocks):
                    run(b)
        ms = (time.perf_counter() - t0) * 1e3
        flops = spec.tally.flops(self.m)
        rec = LaunchRecord(spec.stage, spec.blocks, spec.threads, ms, flops)
        self.trace.append(rec)
        self.ledger.record(spec.stage, spec.tally, ms, spec.nbytes)
        return rec

    def kernel_ms(self):
        return sum(r.ms for r in self.trace)

    def launch_count(self, stage=None):
        return sum(1 for r in self.trace if stage is None or r.stage == stage)

    def trace_csv(self):
        return trace_csv(self.trace)


def trace_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in records:
        w.writerow([r.stage, r.blocks, r.threads, f"{r.ms:.6g}", r.flops])
    return buf.getvalue()


def _block_runner(spec):
    gen_body = inspect.isgeneratorfunction(spec.body)

    def run(block):
        shared = spec.shared(block) if spec.shared is not None else SimpleNamespace()
        ctxs = [SimpleNamespace(block=block, thread=t, threads=spec.threads, shared=shared)
                for t in range(spec.threads)]
        if not gen_body:
            for c in ctxs:
                spec.body(c)
            return
        live = [spec.body(c) for c in ctxs]
        while live:
            waiting, done = [], 0
            for g in live:
                try:
                    next(g)
                    waiting.append(g)
                except StopIteration:
                    done += 1
            if waiting and done:
                raise DivergentBarrierError(
                    f"{spec.stage}: block {block} has {done} threads finished while "
                    f"{len(waiting)} wait at a barrier"
                )
            live = waiting

    return run


def _check_partition(spec):
    owner = {}
    for b in range(spec.blocks):
        for t in range(spec.threads):
            for key in spec.writes(b, t):
                prev = owner.setdefault(key, (b, t))
                if prev != (b, t):
                    raise OverlappingWritesError(
                        f"{spec.stage}: location {key!r} written by {prev} and {(b, t)}"
                    )
