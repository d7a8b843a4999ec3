import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from conftest import random_stable
from krylov_reach.errors import InputError
from krylov_reach.sparse_linalg import (SparseMatrix, elementwise_abs, inf_norm, matvec, one_norm,
                                        spectral_bounds, two_norm_upper)


def _random(n, density, seed):
    rng = np.random.default_rng(seed)
    return SparseMatrix(sp.random(n, n, density=density, random_state=rng,
                                  data_rvs=lambda k: rng.standard_normal(k)).tocsr())


def test_matvec_identity():
    assert np.array_equal(matvec(SparseMatrix.identity(2), [3.0, -1.0]), [3.0, -1.0])


def test_matvec_nilpotent_shift():
    M = SparseMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.array_equal(matvec(M, [0.0, 5.0]), [5.0, 0.0])


def test_matvec_matches_row_ordered_sum():
    M = _random(100, 0.05, 3)
    x = np.random.default_rng(4).standard_normal(100)
    y = matvec(M, x)
    ref = np.zeros(100)
    for i in range(100):
        s = 0.0
        for jj in range(M.indptr[i], M.indptr[i + 1]):
            s += M.data[jj] * x[M.indices[jj]]
        ref[i] = s
    assert np.array_equal(y, ref)
    assert np.allclose(y, M.toarray() @ x, rtol=1e-13, atol=1e-13)


def test_matvec_dimension_mismatch():
    with pytest.raises((ValueError, InputError)):
        matvec(SparseMatrix.identity(3), np.ones(2))


def test_sparse_matrix_rejects_nonfinite():
    with pytest.raises((ValueError, InputError)):
        SparseMatrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_elementwise_abs_definition():
    M = SparseMatrix(np.array([[-1.0, 0.0], [2.0, -3.0]]))
    assert np.array_equal(elementwise_abs(M).toarray(), [[1, 0], [2, 3]])


def test_elementwise_abs_fixed_point():
    M = SparseMatrix(abs(_random(30, 0.1, 0).to_scipy()))
    assert elementwise_abs(M) == M


@given(st.integers(0, 10_000), st.integers(2, 40))
def test_abs_product_dominates(seed, n):
    M = _random(n, 0.2, seed)
    x = np.random.default_rng(seed + 1).standard_normal(n)
    assert np.all(matvec(elementwise_abs(M), np.abs(x)) >= np.abs(matvec(M, x)) - 1e-14)


def test_inf_norm_examples():
    assert inf_norm(SparseMatrix(np.array([[1.0, -2.0], [0.0, 3.0]]))) == 3.0
    assert inf_norm(SparseMatrix.zeros(3)) == 0.0
    M = _random(80, 0.1, 7)
    assert inf_norm(M) == pytest.approx(np.abs(M.toarray()).sum(axis=1).max(), rel=1e-14)
    assert one_norm(M) == pytest.approx(np.abs(M.toarray()).sum(axis=0).max(), rel=1e-14)


def test_two_norm_upper_examples():
    assert two_norm_upper(SparseMatrix.identity(5)) == pytest.approx(1.0)
    assert two_norm_upper(SparseMatrix(np.diag([1.0, 4.0]))) == pytest.approx(4.0)


@given(st.integers(0, 10_000), st.integers(2, 60))
def test_two_norm_upper_dominates_svd(seed, n):
    M = _random(n, 0.15, seed)
    assert two_norm_upper(M) >= np.linalg.norm(M.toarray(), 2) * (1 - 1e-12)


def test_spectral_bounds_diagonal():
    b = spectral_bounds(SparseMatrix(np.diag([-2.0, -5.0])))
    assert b.a <= -5 and b.b >= -2 and b.c == 0


def test_spectral_bounds_rotation():
    b = spectral_bounds(SparseMatrix(np.array([[0.0, 1.0], [-1.0, 0.0]])))
    assert b.a <= 0 <= b.b and b.c >= 1


def test_spectral_bounds_non_square():
    with pytest.raises((ValueError, InputError)):
        spectral_bounds(SparseMatrix(np.ones((2, 3))))


def _dense_extremes(M):
    D = M.toarray()
    S, K = 0.5 * (D + D.T), 0.5 * (D - D.T)
    w = np.linalg.eigvalsh(S)
    return w[0], w[-1], np.abs(np.linalg.eigvals(K)).max()


@pytest.mark.parametrize("refine", [False, True])
@pytest.mark.parametrize("n,seed", [(20, 0), (100, 1), (400, 2)])
def test_spectral_bounds_bracket_dense(n, seed, refine):
    M = random_stable(n, 0.05, seed)
    lo, hi, c = _dense_extremes(M)
    b = spectral_bounds(M, refine=refine)
    assert b.a <= lo + 1e-12 * abs(lo) and b.b >= hi - 1e-12 * abs(hi)
    assert b.c >= c * (1 - 1e-12)


def test_refinement_tightens_but_stays_inside_gershgorin():
    M = random_stable(200, 0.05, 1)
    g = spectral_bounds(M)
    r = spectral_bounds(M, refine=True)
    assert g.a <= r.a and r.b <= g.b
    assert r.b - r.a < g.b - g.a
