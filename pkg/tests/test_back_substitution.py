from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdlsq.back_substitution import (
    STAGES,
    SingularTileError,
    back_sub_reference,
    invert_diagonal_tiles,
    invert_tile_tally,
    tiled_back_sub,
    upper_residual,
)
from mdlsq.exec_model import Device
from mdlsq.layout import StaggeredMatrix, StaggeredVector, random_upper_triangular, random_vector
from mdlsq.oracle import exact_residual, exact_upper_inverse, _entries

from helpers import ulp_scale, well_conditioned_upper


def _inverse(U, N, n, inplace=False):
    Vr, Vi = invert_diagonal_tiles(U, N, n, Device(U.m), inplace=inplace)
    return Vr, Vi


def test_identity_tile_inverse():
    U = StaggeredMatrix.identity(8, 4)
    Vr, _ = _inverse(U, 2, 4)
    for i in range(2):
        assert np.array_equal(Vr[i][0], np.eye(4))
        assert not Vr[i][1:].any()


def test_two_by_two_inverse():
    U = StaggeredMatrix.from_array(np.array([[2.0, 1.0], [0.0, 4.0]]), 2)
    Vr, _ = _inverse(U, 1, 2)
    assert np.array_equal(Vr[0][0], [[0.5, -0.125], [0.0, 0.25]])
    assert [[Fraction(v) for v in row] for row in Vr[0][0]] == exact_upper_inverse(U)


def test_inverse_in_place():
    U = StaggeredMatrix.from_array(np.array([[2.0, 1.0], [0.0, 4.0]]), 2)
    _inverse(U, 1, 2, inplace=True)
    assert np.array_equal(U.re[0], [[0.5, -0.125], [0.0, 0.25]])


def test_random_qd_tile_inverse():
    U = random_upper_triangular(16, 4, seed=21)
    Vr, _ = _inverse(U, 1, 16)
    V = StaggeredMatrix(Vr[0])
    exact_U = [[v.to_fraction() for v in row] for row in _entries(U)]
    exact_V = [[v.to_fraction() for v in row] for row in _entries(V)]
    worst = max(
        abs(sum(exact_U[i][k] * exact_V[k][j] for k in range(16)) - (i == j))
        for i in range(16) for j in range(16)
    )
    assert worst <= Fraction(1, 10**60)


def test_identity_system():
    for N, n in [(1, 1), (3, 4), (2, 8)]:
        b = random_vector(N * n, 4, seed=N)
        x = tiled_back_sub(StaggeredMatrix.identity(N * n, 4), b, N, n)
        assert x.bits_equal(b)


def test_three_tiles_seven_launches():
    dev = Device(2)
    tiled_back_sub(random_upper_triangular(6, 2, 0), random_vector(6, 2, 1), 3, 2, dev)
    assert len(dev.trace) == 7


@given(st.integers(1, 16), st.integers(1, 4))
def test_launch_count_law(N, n):
    dev = Device(2, dry_run=True)
    U = StaggeredMatrix.zeros(N * n, N * n, 2)
    tiled_back_sub(U, StaggeredVector.zeros(N * n, 2), N, n, dev)
    assert dev.launch_count() == 1 + N * (N + 1) // 2
    assert dev.launch_count("invert_diagonal_tiles") == 1
    assert dev.launch_count("multiply_with_inverses") == N
    assert dev.trace[0].blocks == N and dev.trace[0].threads == n


def test_stage_labels():
    assert STAGES == ("invert_diagonal_tiles", "multiply_with_inverses", "back_substitution_update")
    dev = Device(2)
    tiled_back_sub(random_upper_triangular(8, 2, 3), random_vector(8, 2, 4), 2, 4, dev)
    assert tuple(dev.ledger.stages) == STAGES


def test_qd_residual_exact():
    U = random_upper_triangular(128, 4, seed=7)
    b = random_vector(128, 4, seed=8)
    x = tiled_back_sub(U, b, 8, 16)
    r = exact_residual(U, x, b)
    rmax = max(abs(v.to_fraction()) for v in r)
    unorm = max(sum(abs(v.to_fraction()) for v in row) for row in _entries(U))
    xmax = max(abs(v.to_fraction()) for v in _entries(x))
    assert rmax / (unorm * xmax) <= Fraction(1, 10**58)


@pytest.mark.parametrize("m, bound", [(2, 1e-28), (4, 1e-58), (8, 1e-118)])
@pytest.mark.parametrize("cplx", [False, True])
def test_residual_level(m, bound, cplx):
    U = random_upper_triangular(64, m, seed=m, complex=cplx)
    b = random_vector(64, m, seed=m + 1, complex=cplx)
    x = tiled_back_sub(U, b, 4, 16)
    assert upper_residual(U, x, b) <= bound


@pytest.mark.parametrize("m", [1, 2, 4, 8])
@pytest.mark.parametrize("cplx", [False, True])
def test_matches_plain_substitution(m, cplx):
    for seed, (N, n) in enumerate([(3, 4), (2, 8), (4, 4), (1, 12)]):
        U = well_conditioned_upper(N * n, m, seed, cplx)
        b = random_vector(N * n, m, seed + 50, cplx)
        x = tiled_back_sub(U, b, N, n)
        ref = back_sub_reference(U, b)
        scale = ref.max_abs() * ulp_scale(m)
        for i in range(N * n):
            d = x.get(i) - ref.get(i)
            dv = abs(d.to_complex()) if cplx else abs(float(d))
            assert dv <= 4 * scale


def test_singular_tile_named():
    U = random_upper_triangular(8, 2, seed=1)
    U.re[:, 5, 5] = 0.0
    with pytest.raises(SingularTileError) as info:
        tiled_back_sub(U, random_vector(8, 2, 2), 2, 4)
    assert (info.value.tile, info.value.row) == (1, 1)


def test_denormal_diagonal_is_singular():
    U = StaggeredMatrix.identity(4, 2)
    U.re[0, 0, 0] = 1e-310
    with pytest.raises(SingularTileError):
        tiled_back_sub(U, StaggeredVector.zeros(4, 2), 2, 2)


def test_dimension_mismatch():
    U = random_upper_triangular(8, 2, seed=1)
    with pytest.raises(ValueError):
        tiled_back_sub(U, random_vector(6, 2, 0), 2, 4)
    with pytest.raises(ValueError):
        tiled_back_sub(U, random_vector(8, 2, 0), 3, 4)
    with pytest.raises(ValueError):
        tiled_back_sub(U, random_vector(8, 4, 0), 2, 4)


def test_inversion_tally():
    # thread k: k+1 div, k(k+1)/2 mul, k(k-1)/2 add
    t = invert_tile_tally(False, 3)
    assert (t["div"], t["mul"], t["add"]) == (6, 4, 1)


def test_backend_equivalence():
    U = random_upper_triangular(32, 4, seed=2, complex=True)
    b = random_vector(32, 4, seed=3, complex=True)
    xs = []
    for backend in ("serial", "parallel"):
        with Device(4, backend=backend, workers=3) as dev:
            xs.append(tiled_back_sub(U, b, 4, 8, dev))
    assert xs[0].bits_equal(xs[1])


# intensities reported for the qd back substitution at dimension 80 n
PUBLISHED_INTENSITY = {32: 58.71, 64: 1500, 96: 2740, 128: 4308, 160: 6203, 192: 8427, 224: 10980, 256: 13860}


def test_intensity_tracks_growth_trend():
    ours = {}
    for n in PUBLISHED_INTENSITY:
        D = 80 * n
        dev = Device(4, dry_run=True)
        tiled_back_sub(StaggeredMatrix.placeholder(D, D, 4), StaggeredVector.zeros(D, 4), 80, n, dev)
        ours[n] = dev.ledger.flops() / sum(s.nbytes for s in dev.ledger.stages.values())
    sizes = sorted(ours)
    assert all(ours[a] < ours[b] for a, b in zip(sizes, sizes[1:]))
    assert all(PUBLISHED_INTENSITY[a] < PUBLISHED_INTENSITY[b] for a, b in zip(sizes, sizes[1:]))
    # well above the ridge point of 9 flops/byte at every size
    assert min(ours.values()) > 9
