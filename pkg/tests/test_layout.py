import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdlsq.layout import (
    PLANE_ORDER,
    RNG_ID,
    StaggeredMatrix,
    StaggeredVector,
    nonoverlap_mask,
    random_matrix,
    random_upper_triangular,
    random_vector,
)
from mdlsq.md_arith import ComplexMultiDouble, MultiDouble, renormalize
from mdlsq.oracle import _entries, exact_inf_norm, exact_upper_inverse

seeds = st.integers(0, 2**32)
levels = st.sampled_from([1, 2, 4, 8])


def test_plane_order_constant():
    assert PLANE_ORDER == "C"
    A = random_matrix(3, 5, 2, seed=0)
    assert A.re[0].flags["C_CONTIGUOUS"]


def test_set_get_identity():
    A = StaggeredMatrix.zeros(2, 2, 2)
    A.set(0, 0, MultiDouble((1.0, 2.0**-60)))
    assert A.get(0, 0).limbs == (1.0, 2.0**-60)


def test_zero_matrix_gives_zero():
    assert StaggeredMatrix.zeros(3, 3, 4).get(2, 1).limbs == (0.0,) * 4


def test_set_renormalises():
    A = StaggeredMatrix.zeros(1, 1, 4)
    A.set(0, 0, (2.0**-60, 1.0, 1.0, 0.0))
    assert A.get(0, 0).limbs == renormalize([2.0**-60, 1.0, 1.0, 0.0], 4).limbs


def test_index_errors():
    A = StaggeredMatrix.zeros(2, 3, 2)
    with pytest.raises(IndexError):
        A.get(2, 0)
    with pytest.raises(IndexError):
        A.set(0, 3, 1.0)
    with pytest.raises(IndexError):
        StaggeredVector.zeros(4, 2).get(-1)


def test_complex_value_in_real_matrix():
    A = StaggeredMatrix.zeros(1, 1, 2)
    with pytest.raises(TypeError):
        A.set(0, 0, 1 + 2j)


def test_precision_mismatch_on_set():
    with pytest.raises(ValueError):
        StaggeredMatrix.zeros(1, 1, 2).set(0, 0, MultiDouble.one(4))


def test_plane_shapes():
    A = random_matrix(4, 3, 8, seed=1, complex=True)
    assert len(A.planes) == 8 and len(A.imag_planes) == 8
    assert all(p.shape == (4, 3) for p in A.planes + A.imag_planes)
    assert not np.shares_memory(A.re, A.im)
    with pytest.raises(ValueError):
        StaggeredMatrix(A.re, A.re)


@given(st.integers(1, 6), st.integers(1, 6), levels, seeds, st.booleans())
def test_element_round_trip(rows, cols, m, seed, cplx):
    A = random_matrix(rows, cols, m, seed, cplx)
    B = StaggeredMatrix.from_elements(A.to_elements())
    assert A.bits_equal(B)


@given(st.integers(1, 6), st.integers(1, 6), levels, seeds, st.booleans())
def test_random_matrices_valid(rows, cols, m, seed, cplx):
    A = random_matrix(rows, cols, m, seed, cplx)
    assert A.is_valid()
    assert nonoverlap_mask(A.re).all()


@given(st.integers(1, 5), st.integers(1, 5), levels, seeds, st.booleans())
def test_file_round_trip(rows, cols, m, seed, cplx):
    A = random_matrix(rows, cols, m, seed, cplx)
    B, header = StaggeredMatrix.loads(A.dumps(seed=seed))
    assert A.bits_equal(B)
    assert header["rng"] == RNG_ID
    assert header["seed"] == str(seed)
    assert header["complex"] == str(int(cplx))


def test_file_signed_zero_and_path(tmp_path):
    A = StaggeredMatrix.zeros(1, 2, 2)
    A.re[0, 0, 1] = -0.0
    path = tmp_path / "a.txt"
    A.save(path)
    assert A.bits_equal(StaggeredMatrix.load(path))
    assert path.read_text(encoding="utf-8").startswith("# mdlsq staggered matrix v1\n")


def test_file_rejects_garbage():
    with pytest.raises(ValueError):
        StaggeredMatrix.loads("hello\n")


def test_determinism():
    a = random_matrix(8, 8, 4, seed=3, complex=True)
    b = random_matrix(8, 8, 4, seed=3, complex=True)
    assert a.bits_equal(b)
    c = random_matrix(8, 8, 4, seed=4, complex=True)
    assert not a.bits_equal(c)


def test_lower_limbs_populated():
    A = random_matrix(16, 16, 8, seed=5)
    assert np.all(A.re != 0.0)


def test_leading_limb_mean():
    A = random_matrix(1000, 1000, 1, seed=9)
    assert abs(A.re[0].mean()) < 0.01
    assert A.re[0].min() >= -1.0 and A.re[0].max() <= 1.0


def test_vector_helpers():
    v = random_vector(6, 4, seed=2, complex=True)
    M = v.as_matrix()
    assert M.shape == (6, 1)
    M.re[0, 0, 0] = 42.0
    assert v.re[0, 0] == 42.0
    w = StaggeredVector.from_elements(v.to_elements())
    assert w.bits_equal(v)
    assert isinstance(v.get(1), ComplexMultiDouble)


def test_from_array_is_exact():
    a = np.array([[0.1, -2.5], [3.0, 1e-300]])
    A = StaggeredMatrix.from_array(a, 4)
    assert np.array_equal(A.to_numpy(), a)
    assert A.get(0, 0).limbs == (0.1, 0.0, 0.0, 0.0)


def test_from_planes_renormalises():
    p = np.array([[[1.0]], [[1.0]]])
    A = StaggeredMatrix.from_planes(p)
    assert A.get(0, 0).limbs == (2.0, 0.0)


# triangular test matrices


def test_triangular_one_by_one():
    U = random_upper_triangular(1, 2, seed=0)
    assert U.shape == (1, 1) and U.get(0, 0).limbs[0] != 0.0


@given(st.integers(1, 12), levels, seeds, st.booleans())
def test_triangular_structure(n, m, seed, cplx):
    U = random_upper_triangular(n, m, seed, cplx)
    low = np.tril_indices(n, -1)
    assert np.all(U.re[:, low[0], low[1]] == 0.0)
    if cplx:
        assert np.all(U.im[:, low[0], low[1]] == 0.0)
    assert np.min(np.abs(np.diag(U.leading()))) >= 1e-3
    assert U.is_valid()


def test_triangular_deterministic():
    assert random_upper_triangular(10, 4, 8).bits_equal(random_upper_triangular(10, 4, 8))


def _kappa(U):
    return float(exact_inf_norm(_entries(U)) * exact_inf_norm(exact_upper_inverse(U)))


def test_triangular_conditioning():
    lu = [_kappa(random_upper_triangular(16, 2, s)) for s in range(10)]
    assert max(lu) <= 1e6
    gen = np.random.Generator(np.random.Philox(0))
    raw16 = [_kappa(StaggeredMatrix.from_array(np.triu(gen.uniform(-1, 1, (16, 16))), 2)) for _ in range(10)]
    raw32 = [_kappa(StaggeredMatrix.from_array(np.triu(gen.uniform(-1, 1, (32, 32))), 2)) for _ in range(10)]
    assert np.median(raw16) > 100 * np.median(lu)
    assert np.median(raw32) > 1e6


def test_triangular_resampling_limit():
    with pytest.raises(RuntimeError):
        random_upper_triangular(8, 2, seed=1, min_diag=10.0, attempts=3)


def test_placeholder_is_free_and_read_only():
    P = StaggeredMatrix.placeholder(10**5, 10**5, 8, complex=True)
    assert P.shape == (10**5, 10**5) and P.m == 8 and P.is_complex
    assert P.re.strides == (0, 0, 0)
    with pytest.raises(ValueError):
        P.re[0, 0, 0] = 1.0
