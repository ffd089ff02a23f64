import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdlsq.flop_model import (
    COST_TABLES,
    COUNTS,
    FlopLedger,
    OpTally,
    REPORT_COLUMNS,
    average_overhead,
    complex_cost,
    element_bytes,
    ledger_report,
    op_cost,
    report_csv,
)

SIGMA = {
    2: {"add": 20, "mul": 23, "div": 70},
    4: {"add": 89, "mul": 336, "div": 893},
    8: {"add": 269, "mul": 1742, "div": 5126},
}


@pytest.mark.parametrize("m", [2, 4, 8])
@pytest.mark.parametrize("op", ["add", "mul", "div"])
def test_sigma_values(m, op):
    assert op_cost(m, op) == SIGMA[m][op]
    assert COST_TABLES[m].row(op)["sum"] == SIGMA[m][op]


def test_spot_cells():
    assert COUNTS[2]["div"] == (33, 18, 16, 3)
    assert sum(COUNTS[2]["div"]) == 70
    assert op_cost("qd", "div") == 893
    assert op_cost("od", "mul") == 1742
    nonzero = sum(1 for m in COUNTS for op in COUNTS[m] for v in COUNTS[m][op] if v)
    assert nonzero == 27


def test_named_precisions_and_sub():
    assert op_cost("dd", "add") == 20
    assert op_cost(4, "sub") == op_cost(4, "add")
    assert op_cost(2, "sqrt") == 70 + 2 * 23


def test_plain_doubles_cost_one():
    for op in ("add", "sub", "mul", "div"):
        assert op_cost(1, op) == 1


def test_unknown_op():
    with pytest.raises(ValueError):
        op_cost(2, "exp")
    with pytest.raises(ValueError):
        op_cost(3, "add")


@pytest.mark.parametrize("m, want", [(2, 37.7), (4, 439.3), (8, 2379.0)])
def test_average_overhead(m, want):
    assert abs(average_overhead(m) - want) <= 0.05


def test_complex_costs():
    # 4 mul + 1 add + 1 sub for a product
    assert complex_cost(2, "mul") == 4 * 23 + 2 * 20
    assert complex_cost(2, "add") == 2 * 20
    assert complex_cost(4, "div") == 6 * 336 + 3 * 89 + 2 * 893
    t = OpTally.of(True, abs2=1)
    assert t == OpTally.real(mul=2, add=1)
    assert OpTally.of(False, mul=3, rmul=1, abs2=1) == OpTally.real(mul=5)


tallies = st.builds(
    OpTally.real,
    add=st.integers(0, 10**6), sub=st.integers(0, 10**6), mul=st.integers(0, 10**6),
    div=st.integers(0, 10**4), sqrt=st.integers(0, 100),
)


@given(tallies, tallies, st.sampled_from([1, 2, 4, 8]))
def test_ledger_additivity(a, b, m):
    la, lb = FlopLedger(m), FlopLedger(m)
    la.record("s", a, 1.0, 10)
    lb.record("s", b, 2.0, 20)
    lb.record("t", b)
    merged = la.copy().merge(lb)
    assert merged.stages["s"].tally == a + b
    assert merged.flops() == la.flops() + lb.flops()
    assert merged.stages["s"].nbytes == 30
    assert (a + b).flops(m) == a.flops(m) + b.flops(m)


@given(st.integers(0, 10**6), st.sampled_from([2, 4, 8]))
def test_k_mul_adds_k_costs(k, m):
    led = FlopLedger(m)
    led.record("k", OpTally.real(mul=k))
    assert led.flops() == k * op_cost(m, "mul")
    assert set(led.tally()) <= {"mul"}


def test_merge_rejects_mixed_precision():
    with pytest.raises(ValueError):
        FlopLedger(2).merge(FlopLedger(4))


def test_report_rate():
    led = FlopLedger(1)
    led.record("big", OpTally.real(add=10**9), time_ms=1000.0, nbytes=10**9)
    (row,) = ledger_report(led)
    assert row["gigaflops"] == 1.0
    assert row["intensity"] == 1.0


def test_report_zero_time_is_absent():
    led = FlopLedger(2)
    led.record("fast", OpTally.real(add=3))
    (row,) = ledger_report(led)
    assert row["gigaflops"] is None
    assert row["intensity"] is None
    assert report_csv([row]).splitlines()[1].endswith(",60,,")


def test_empty_report():
    assert ledger_report(FlopLedger(4)) == []
    assert report_csv([]).strip() == ",".join(REPORT_COLUMNS)


def test_csv_columns():
    led = FlopLedger(4)
    led.record("x", OpTally.real(add=1, sub=1, mul=2, div=1), 2.0, 64)
    lines = report_csv(ledger_report(led)).splitlines()
    assert lines[0] == "stage,precision,time_ms,md_add,md_mul,md_div,flops,gigaflops,intensity"
    assert lines[1].startswith("x,qd,2,2,2,1,")


def test_element_bytes():
    assert element_bytes(4, False) == 32
    assert element_bytes(8, True) == 128
