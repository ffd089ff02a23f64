"""Operation costs of multiple-double arithmetic and per-stage flop ledgers.

Costs count base double operations per multiple-double operation.  Complex
operations and square roots are charged as compositions of real ones.
"""

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

from .md_arith import precision_level, precision_name

# base double (+, -, *, /) counts per multiple-double add, mul, div
COUNTS = {
    2: {"add": (8, 12, 0, 0), "mul": (5, 9, 9, 0), "div": (33, 18, 16, 3)},
    4: {"add": (35, 54, 0, 0), "mul": (99, 164, 73, 0), "div": (266, 510, 112, 5)},
    8: {"add": (95, 174, 0, 0), "mul": (529, 954, 259, 0), "div": (1599, 3070, 448, 9)},
}

OPS = ("add", "sub", "mul", "div", "sqrt")

BYTE_MODEL = "each operand counted once per kernel, 8*m bytes per real element, x2 when complex"


@dataclass(frozen=True)
class OpCostTable:
    """Base-double counts for one precision level."""

    m: int
    counts: dict

    def sigma(self, op):
        return sum(self.counts[op])

    def row(self, op):
        plus, minus, times, divide = self.counts[op]
        return {"+": plus, "-": minus, "*": times, "/": divide, "sum": plus + minus + times + divide}


COST_TABLES = {m: OpCostTable(m, c) for m, c in COUNTS.items()}


def op_cost(m, op):
    """Base flops of one multiple-double op; m = 1 costs 1 per op."""
    m = precision_level(m)
    if op == "sub":
        op = "add"
    if op == "sqrt":
        return op_cost(m, "div") + 2 * op_cost(m, "mul")
    if op not in ("add", "mul", "div"):
        raise ValueError(f"unknown operation {op!r}")
    if m == 1:
        return 1
    return COST_TABLES[m].sigma(op)


def average_overhead(m):
    """Mean of the add, mul and div costs, the nominal overhead factor."""
    m = precision_level(m)
    if m == 1:
        return 1.0
    return sum(op_cost(m, op) for op in ("add", "mul", "div")) / 3


class OpTally(Counter):
    """Counts of real multiple-double ops, keyed by add/sub/mul/div/sqrt."""

    def flops(self, m):
        return sum(n * op_cost(m, op) for op, n in self.items())

    def __add__(self, other):
        out = OpTally(self)
        out.update(other)
        return out

    def scaled(self, k):
        return OpTally({op: n * k for op, n in self.items()})

    # complex compositions

    @classmethod
    def real(cls, add=0, sub=0, mul=0, div=0, sqrt=0):
        return cls({k: v for k, v in dict(add=add, sub=sub, mul=mul, div=div, sqrt=sqrt).items() if v})

    @classmethod
    def of(cls, cplx, add=0, sub=0, mul=0, div=0, abs2=0, rmul=0):
        """Tally of elementary ops on real or complex operands.

        ``rmul`` is a real scalar times an element and ``abs2`` is |x|^2.
        On real data both reduce to one multiplication (plus nothing).
        """
        if not cplx:
            return cls.real(add=add, sub=sub, mul=mul + abs2 + rmul, div=div)
        # complex: mul = 4 mul + 1 sub + 1 add; add/sub = 2 of the same;
        # div by conjugate = 6 mul + 2 add + 1 sub + 2 div; |x|^2 = 2 mul + 1 add
        return cls.real(
            add=2 * add + mul + 2 * div + abs2,
            sub=2 * sub + mul + div,
            mul=4 * mul + 6 * div + 2 * abs2 + 2 * rmul,
            div=2 * div,
        )


def complex_cost(m, op):
    """Flops of one complex op built from real ones."""
    t = {
        "add": OpTally.of(True, add=1),
        "sub": OpTally.of(True, sub=1),
        "mul": OpTally.of(True, mul=1),
        "div": OpTally.of(True, div=1),
    }[op]
    return t.flops(m)


@dataclass
class StageStats:
    tally: OpTally = field(default_factory=OpTally)
    time_ms: float = 0.0
    nbytes: int = 0
    launches: int = 0

    def merge(self, other):
        self.tally.update(other.tally)
        self.time_ms += other.time_ms
        self.nbytes += other.nbytes
        self.launches += other.launches


class FlopLedger:
    """Per-stage op counts, elapsed kernel time and bytes touched."""

    def __init__(self, m):
        self.m = precision_level(m)
        self.stages = {}
        self.wall_ms = 0.0

    def record(self, stage, tally, time_ms=0.0, nbytes=0, launches=1):
        s = self.stages.setdefault(stage, StageStats())
        s.tally.update(tally)
        s.time_ms += time_ms
        s.nbytes += nbytes
        s.launches += launches

    def merge(self, other):
        if other.m != self.m:
            raise ValueError("cannot merge ledgers of different precision")
        for name, st in other.stages.items():
            self.stages.setdefault(name, StageStats()).merge(st)
        self.wall_ms += other.wall_ms
        return self

    def copy(self):
        return FlopLedger(self.m).merge(self)

    def flops(self, stage=None):
        if stage is not None:
            return self.stages[stage].tally.flops(self.m)
        return sum(s.tally.flops(self.m) for s in self.stages.values())

    def kernel_ms(self):
        return sum(s.time_ms for s in self.stages.values())

    def tally(self):
        total = OpTally()
        for s in self.stages.values():
            total.update(s.tally)
        return total

    def __len__(self):
        return len(self.stages)


REPORT_COLUMNS = ["stage", "precision", "time_ms", "md_add", "md_mul", "md_div", "flops", "gigaflops", "intensity"]


def ledger_report(ledger):
    """One dict per stage: time, op counts, flops, gigaflops and intensity.

    Rates are None when a stage has no elapsed time; intensity is None when
    no bytes were recorded.  Subtractions are reported with additions and
    square roots are folded into ``flops`` only.
    """
    rows = []
    for name, st in ledger.stages.items():
        flops = st.tally.flops(ledger.m)
        rows.append(
            {
                "stage": name,
                "precision": precision_name(ledger.m),
                "time_ms": st.time_ms,
                "md_add": st.tally["add"] + st.tally["sub"],
                "md_mul": st.tally["mul"],
                "md_div": st.tally["div"],
                "md_sqrt": st.tally["sqrt"],
                "flops": flops,
                "gigaflops": flops / (st.time_ms * 1e6) if st.time_ms > 0 else None,
                "intensity": flops / st.nbytes if st.nbytes > 0 else None,
            }
        )
    return rows


def report_csv(rows, columns=REPORT_COLUMNS):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return v


def element_bytes(m, cplx):
    return 8 * m * (2 if cplx else 1)
