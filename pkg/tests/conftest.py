import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import settings

from krylov_reach.sets import Zonotope
from krylov_reach.sparse_linalg import SparseMatrix

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def random_stable(n, density=0.05, seed=0, shift=1.0, scale=1.0):
    """Sparse matrix with a negative-definite symmetric part (strictly diagonally dominant)."""
    rng = np.random.default_rng(seed)
    M = sp.random(n, n, density=density, random_state=rng, data_rvs=lambda k: rng.standard_normal(k)).tocsr()
    M = M * scale
    rowsum = np.asarray(abs(M).sum(axis=1)).ravel() + np.asarray(abs(M).sum(axis=0)).ravel()
    M = M - sp.diags(0.5 * rowsum + shift)
    return SparseMatrix(M)


def random_zonotope(n, p, rng, scale=1.0, center_scale=1.0):
    return Zonotope(center_scale * rng.standard_normal(n), scale * rng.standard_normal((n, p)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion name -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
