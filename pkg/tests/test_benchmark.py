import runpy
from pathlib import Path

import pytest

from mdlsq import _backend

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_backends.py"


@pytest.mark.skipif("compiled" not in _backend.available(), reason="compiled core not built")
def test_benchmark_runs_and_cores_agree(capsys):
    mod = runpy.run_path(str(BENCH))
    mod["main"](["--precision", "dd", "--dim", "8", "--repeat", "1"])
    out = capsys.readouterr().out
    rows = out.splitlines()[2:]
    assert len(rows) == 6
    assert all(r.endswith("yes") for r in rows)
