import numpy as np
import pytest

from krylov_reach.errors import InputError
from krylov_reach.models import assemble_second_order, chain_scenario, synthetic_chain
from krylov_reach.sparse_linalg import SparseMatrix


def test_scalar_oscillator():
    A, B = assemble_second_order(np.array([[1.0]]), np.array([[0.0]]), np.array([[4.0]]))
    assert np.array_equal(A.toarray(), [[0, 1], [-4, 0]])
    assert np.array_equal(B.toarray(), [[0], [1]])


def test_identity_mass_blocks():
    rng = np.random.default_rng(0)
    K, D = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    A, B = assemble_second_order(np.eye(3), D, K)
    Ad = A.toarray()
    assert np.array_equal(Ad[3:, :3], -K) and np.array_equal(Ad[3:, 3:], -D)
    assert np.array_equal(Ad[:3, 3:], np.eye(3)) and not np.any(Ad[:3, :3])


def test_full_mass_residual():
    rng = np.random.default_rng(1)
    R = rng.standard_normal((4, 4))
    M = R @ R.T + 4 * np.eye(4)
    K = rng.standard_normal((4, 4))
    A, B, info = assemble_second_order(M, np.zeros((4, 4)), K, return_info=True)
    assert not info.diagonal_mass and info.residual < 1e-12
    assert np.allclose(M @ (-A.toarray()[4:, :4]), K, atol=1e-12)
    assert np.allclose(B.toarray()[4:], np.linalg.inv(M), atol=1e-12)


def test_singular_mass():
    with pytest.raises(InputError):
        assemble_second_order(np.diag([1.0, 0.0]), np.zeros((2, 2)), np.eye(2))
    with pytest.raises(InputError):
        assemble_second_order(np.ones((2, 2)), np.zeros((2, 2)), np.eye(2))


def test_shape_mismatch():
    with pytest.raises(InputError):
        assemble_second_order(np.eye(2), np.zeros((3, 3)), np.eye(2))


def test_chain_reproduces_reference_dimension():
    ch = synthetic_chain()
    assert ch.K.nrows == 2520
    A, B = assemble_second_order(ch.M, ch.D, ch.K)
    assert A.nrows == 5040 and B.shape == (5040, 2520)


def test_chain_is_stable_and_sparse():
    A, B, X0, U = chain_scenario(nodes=50)
    w = np.linalg.eigvals(A.toarray())
    assert w.real.max() < 0
    assert A.nnz <= 10 * A.nrows
    assert X0.dim == 200 and U.dim == 100 and U.num_generators == 2
