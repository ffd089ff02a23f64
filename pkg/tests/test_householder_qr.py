from fractions import Fraction

import numpy as np
import pytest

from mdlsq.exec_model import Device
from mdlsq.householder_qr import (
    STAGES,
    QrContext,
    blocked_qr,
    compute_W,
    factor_panel,
    house,
    orthogonality_error,
    reconstruction_error,
    triangularity_error,
    unblocked_qr,
    update_Q,
)
from mdlsq.layout import StaggeredMatrix, StaggeredVector, random_matrix
from mdlsq.oracle import _entries

from helpers import ulp_scale


def bound(m, M):
    return M * 2.0 ** (-53 * m + 3)


def _apply_reflector(v, beta, x):
    """x - beta v (v^T x) exactly, for real vectors."""
    v = [e.to_fraction() for e in _entries(v)]
    x = [Fraction(e) for e in x]
    b = beta.to_fraction()
    s = sum(a * c for a, c in zip(v, x))
    return [xi - b * vi * s for vi, xi in zip(v, x)]


def test_house_three_four():
    v, beta = house(StaggeredVector.from_array(np.array([3.0, 4.0]), 2))
    tol = Fraction(2) ** -100
    assert v.get(0).limbs == (1.0, 0.0)
    assert abs(v.get(1).to_fraction() - Fraction(1, 2)) <= tol
    assert abs(beta.to_fraction() - Fraction(8, 5)) <= tol
    px = _apply_reflector(v, beta, [3.0, 4.0])
    assert abs(px[0] + 5) < Fraction(1, 10**30) and abs(px[1]) < Fraction(1, 10**30)


def test_house_reflects_positive_head():
    v, beta = house(StaggeredVector.from_array(np.array([2.5, 0.0, 0.0]), 4))
    assert beta.limbs[0] == 2.0
    assert _apply_reflector(v, beta, [2.5, 0.0, 0.0]) == [Fraction(-5, 2), 0, 0]


def test_house_negative_head():
    v, beta = house(StaggeredVector.from_array(np.array([-3.0, 4.0]), 2))
    px = _apply_reflector(v, beta, [-3.0, 4.0])
    assert abs(px[0] - 5) < Fraction(1, 10**30)


def test_house_zero_vector():
    v, beta = house(StaggeredVector.zeros(3, 2))
    assert beta.limbs == (0.0, 0.0)
    assert v.get(0).limbs[0] == 1.0 and v.max_abs() == 1.0


@pytest.mark.parametrize("m", [2, 4, 8])
def test_house_orthogonal_for_random_vectors(m):
    x = random_matrix(9, 1, m, seed=m)
    v, beta = house(StaggeredVector(x.re[:, :, 0]))
    xs = [e.to_fraction() for row in _entries(x) for e in row]
    px = _apply_reflector(v, beta, xs)
    norm2 = sum(e * e for e in xs)
    assert all(abs(e) <= Fraction(2) ** (-53 * m + 4) for e in px[1:])
    assert abs(px[0] * px[0] - norm2) <= norm2 * Fraction(2) ** (-53 * m + 4)


def test_one_by_one_panel():
    A = StaggeredMatrix.from_array(np.array([[3.0]]), 2)
    f = blocked_qr(A, 1, 1)
    assert abs(f.R.get(0, 0).to_fraction() + 3) <= 3 * Fraction(2) ** -104


def test_identity_panel():
    # positive heads reflect to -1 with beta = 2 under the sign rule
    ctx = QrContext.start(StaggeredMatrix.identity(4, 2), 4)
    panel = factor_panel(ctx, 0)
    assert [b.limbs[0] for b in panel.betas] == [2.0] * 4
    assert np.array_equal(ctx.R.leading(), -np.eye(4))
    assert np.array_equal(panel.Y[0][0], np.eye(4))


def test_panel_reconstruction_dd():
    A = random_matrix(32, 8, 2, seed=5)
    f = blocked_qr(A, 1, 8)
    Q = [[e.to_fraction() for e in row] for row in _entries(f.Q)]
    R = [[e.to_fraction() for e in row] for row in _entries(f.R)]
    Ae = [[e.to_fraction() for e in row] for row in _entries(A)]
    amax = max(abs(e) for row in Ae for e in row)
    worst = max(abs(sum(Q[i][k] * R[k][j] for k in range(32)) - Ae[i][j]) for i in range(32) for j in range(8))
    assert worst / amax <= Fraction(1, 10**28)


def _panel_after_W(A, n):
    ctx = QrContext.start(A, n)
    panel = factor_panel(ctx, 0)
    compute_W(ctx, panel)
    return ctx, panel


def test_W_single_column():
    ctx, panel = _panel_after_W(random_matrix(6, 1, 2, seed=1), 1)
    beta = np.array(panel.betas[0].limbs)
    Y, W = panel.Y[0][0][:, 0], panel.W[0][0][:, 0]
    assert np.allclose(W, -beta[0] * Y, rtol=1e-15)


def test_W_zero_beta_column():
    A = StaggeredMatrix.zeros(4, 2, 2)
    A.re[0, 0, 0] = 1.0
    ctx, panel = _panel_after_W(A, 2)
    assert panel.betas[1].limbs == (0.0, 0.0)
    assert not panel.W[0][:, :, 1].any()


@pytest.mark.parametrize("cplx", [False, True])
def test_WY_orthogonal(cplx):
    A = random_matrix(16, 4, 2, seed=3, complex=cplx)
    ctx, panel = _panel_after_W(A, 4)
    # Q starts as I, so the update leaves Q = I + W Y^H
    assert orthogonality_error(ctx.Q) == 0.0
    update_Q(ctx, panel)
    assert orthogonality_error(ctx.Q) <= 1e-28


def test_zero_W_keeps_Q():
    A = StaggeredMatrix.zeros(4, 2, 2)
    ctx, panel = _panel_after_W(A, 2)
    before = ctx.Q.copy()
    update_Q(ctx, panel)
    assert ctx.Q.bits_equal(before)


def test_stage_labels_and_last_panel():
    dev = Device(2)
    blocked_qr(random_matrix(64, 64, 2, seed=0), 2, 32, dev)
    assert set(dev.ledger.stages) == set(STAGES)
    dev1 = Device(2)
    blocked_qr(random_matrix(16, 8, 2, seed=0), 1, 8, dev1)
    assert dev1.launch_count("YWTC") == 0 and dev1.launch_count("R_plus_YWTC") == 0
    assert dev.launch_count("YWTC") == 1


def test_multi_block_reflectors():
    # columns longer than n take the block-reduction path
    dev = Device(2)
    blocked_qr(random_matrix(40, 8, 2, seed=2), 2, 4, dev)
    blocks = {r.blocks for r in dev.trace if r.stage == "beta_v"}
    assert max(blocks) > 1 and 1 in blocks


@pytest.mark.parametrize("cplx", [False, True])
def test_dd_64(cplx):
    A = random_matrix(64, 64, 2, seed=4, complex=cplx)
    f = blocked_qr(A, 2, 32)
    assert reconstruction_error(f.Q, f.R, A) <= 1e-28
    assert orthogonality_error(f.Q) <= 1e-28


def test_identity_matrix():
    A = StaggeredMatrix.identity(8, 4)
    f = blocked_qr(A, 2, 4)
    assert np.array_equal(np.abs(np.diag(f.R.leading())), np.ones(8))
    off = f.R.leading() - np.diag(np.diag(f.R.leading()))
    assert np.abs(off).max() <= 1e-60
    assert orthogonality_error(f.Q) <= 1e-60
    assert reconstruction_error(f.Q, f.R, A) <= 1e-60


@pytest.mark.parametrize("m", [2, 4, 8])
@pytest.mark.parametrize("cplx", [False, True])
@pytest.mark.parametrize("M, N, n", [(32, 2, 16), (48, 2, 16), (64, 4, 16)])
def test_factorisation_quality(m, cplx, M, N, n):
    A = random_matrix(M, N * n, m, seed=M + m, complex=cplx)
    f = blocked_qr(A, N, n)
    assert orthogonality_error(f.Q) <= bound(m, M)
    assert reconstruction_error(f.Q, f.R, A) <= bound(m, M)
    assert triangularity_error(f.R, A) <= bound(m, M)


@pytest.mark.parametrize("m", [2, 4, 8])
@pytest.mark.parametrize("cplx", [False, True])
def test_blocked_matches_unblocked(m, cplx):
    for seed, (M, N, n) in enumerate([(16, 2, 4), (12, 3, 4), (20, 2, 8), (8, 1, 8)]):
        A = random_matrix(M, N * n, m, seed, cplx)
        rb, ru = blocked_qr(A, N, n).R, unblocked_qr(A).R
        colnorm = np.linalg.norm(A.leading(), axis=0)
        for i in range(N * n):
            for j in range(i, N * n):
                d = rb.get(i, j) - ru.get(i, j)
                dv = abs(d.to_complex()) if cplx else abs(float(d))
                assert dv <= 8 * colnorm[j] * ulp_scale(m)


def test_backend_equivalence():
    A = random_matrix(40, 16, 4, seed=9, complex=True)
    out = []
    for backend in ("serial", "parallel"):
        with Device(4, backend=backend, workers=3) as dev:
            out.append(blocked_qr(A, 2, 8, dev))
    assert out[0].Q.bits_equal(out[1].Q) and out[0].R.bits_equal(out[1].R)


def test_shape_errors():
    with pytest.raises(ValueError):
        blocked_qr(random_matrix(4, 8, 2, seed=0), 2, 4)
    with pytest.raises(ValueError):
        blocked_qr(random_matrix(8, 8, 2, seed=0), 3, 4)


def test_rank_deficient_column():
    A = random_matrix(8, 4, 2, seed=1)
    A.re[:, :, 2] = 0.0
    f = blocked_qr(A, 1, 4)
    assert reconstruction_error(f.Q, f.R, A) <= 1e-28
    assert orthogonality_error(f.Q) <= 1e-28
