import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from scipy.integrate import quad_vec

from conftest import random_stable, random_zonotope
from krylov_reach.input_solution import (augment, const_input_point, const_uncertain_input_set,
                                         partial_input_point, varying_input_set)
from krylov_reach.sets import Zonotope, contains_points, support_many
from krylov_reach.sparse_linalg import SparseMatrix


def dense_particular(A, u, t0, te, delta):
    """int_{t0}^{te} exp(A (delta - s)) u ds by adaptive quadrature."""
    Ad = A.toarray()
    val, _ = quad_vec(lambda s: scipy.linalg.expm(Ad * (delta - s)) @ u, t0, te, epsabs=1e-14, epsrel=1e-13)
    return val


def piecewise_solution(A, values, delta):
    """Exact solution from 0 for inputs values[k] on equal sub-intervals (augmented expm)."""
    Ad = A.toarray()
    n = Ad.shape[0]
    h = delta / len(values)
    x = np.zeros(n)
    for u in values:
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = Ad
        M[:n, n] = u
        E = scipy.linalg.expm(M * h)
        x = E[:n, :n] @ x + E[:n, n]
    return x


def test_augment_structure():
    A = random_stable(5, 0.3, 0)
    aug = augment(A, np.arange(5.0))
    M = aug.a_tilde.toarray()
    assert not np.any(M[-1]) and np.array_equal(M[:5, 5], np.arange(5.0))
    assert np.linalg.norm(aug.seed) == 1.0 and aug.seed[-1] == 1.0
    with pytest.raises(ValueError):
        augment(A, np.ones(4))


def test_augment_scalar_nilpotent():
    aug = augment(SparseMatrix(np.zeros((1, 1))), [3.0])
    assert np.array_equal(aug.a_tilde.toarray(), [[0, 3], [0, 0]])
    assert np.allclose(scipy.linalg.expm(aug.a_tilde.toarray() * 0.5) @ aug.seed, [1.5, 1.0])


def test_augment_matches_quadrature():
    A = random_stable(20, 0.2, 1)
    u = np.random.default_rng(0).standard_normal(20)
    aug = augment(A, u)
    x = scipy.linalg.expm(aug.a_tilde.toarray() * 0.3) @ aug.seed
    assert np.allclose(x[:20], dense_particular(A, u, 0, 0.3, 0.3), atol=1e-10)


def test_const_point_zero_matrix():
    u = np.array([1.0, -2.0, 0.5])
    x, err = const_input_point(SparseMatrix.zeros(3), u, 0.25)
    assert np.allclose(x, 0.25 * u, rtol=1e-15)
    assert np.all(err.radius <= 1e-13)


def test_const_point_zero_input():
    x, err = const_input_point(random_stable(6, 0.3, 0), np.zeros(6), 0.1)
    assert not np.any(x) and not np.any(err.radius)


@pytest.mark.parametrize("seed", range(4))
def test_const_point_contains_dense(seed):
    rng = np.random.default_rng(seed)
    A = random_stable(30, 0.1, seed, scale=2.0)
    u = rng.standard_normal(30)
    x, err = const_input_point(A, u, 0.2)
    assert np.all(np.abs(dense_particular(A, u, 0, 0.2, 0.2) - x) <= err.radius)


def test_partial_point_examples():
    A = random_stable(15, 0.2, 3)
    u = np.random.default_rng(1).standard_normal(15)
    z, e = partial_input_point(A, u, 0.05, 0.05, 0.2)
    assert not np.any(z) and not np.any(e.radius)
    full, ef = partial_input_point(A, u, 0.0, 0.2, 0.2)
    c, ec = const_input_point(A, u, 0.2)
    assert np.array_equal(full, c) and np.array_equal(ef.radius, ec.radius)
    with pytest.raises(ValueError):
        partial_input_point(A, u, 0.1, 0.05, 0.2)


@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_partial_point_against_quadrature_and_additivity(seed, a, b):
    rng = np.random.default_rng(seed)
    A = random_stable(10, 0.3, seed)
    u = rng.standard_normal(10)
    delta = 0.3
    t0, te = sorted((a * delta, b * delta))
    x, err = partial_input_point(A, u, t0, te, delta)
    assert np.all(np.abs(dense_particular(A, u, t0, te, delta) - x) <= err.radius + 1e-13)
    left, el = partial_input_point(A, u, 0.0, te, delta)
    right, er = partial_input_point(A, u, te, delta, delta)
    whole, ew = partial_input_point(A, u, 0.0, delta, delta)
    assert np.all(np.abs(left + right - whole) <= el.radius + er.radius + ew.radius + 1e-15)


def test_const_set_point_reduces():
    A = random_stable(8, 0.3, 4)
    u = np.random.default_rng(2).standard_normal(8)
    Z = const_uncertain_input_set(A, Zonotope.point(u), 0.1)
    x, err = const_input_point(A, u, 0.1)
    assert np.allclose(Z.center, x)
    assert np.allclose(Z.radius(), err.radius)


def test_const_set_zero_matrix(rng):
    U = random_zonotope(4, 3, rng)
    Z = const_uncertain_input_set(SparseMatrix.zeros(4), U, 0.5)
    assert np.allclose(Z.center, 0.5 * U.center) and np.allclose(Z.generators[:, :3], 0.5 * U.generators)


@pytest.mark.parametrize("seed", range(3))
def test_const_set_sampling(seed):
    rng = np.random.default_rng(seed)
    A = random_stable(12, 0.2, seed, scale=2.0)
    U = random_zonotope(12, 3, rng)
    delta = 0.2
    Z = const_uncertain_input_set(A, U, delta)
    B = rng.uniform(-1, 1, (3, 500))
    B[:, :250] = np.sign(B[:, :250])
    us = U.center[:, None] + U.generators @ B
    P = np.column_stack([piecewise_solution(A, [us[:, k]], delta) for k in range(500)])
    assert contains_points(Z, P).all()


def test_varying_zero_matrix(rng):
    U = random_zonotope(3, 2, rng)
    Z = varying_input_set(SparseMatrix.zeros(3), U, 0.5)
    D = rng.standard_normal((30, 3))
    ref = 0.5 * support_many(U, D)
    assert np.allclose(support_many(Z, D), ref, atol=1e-13)


def test_varying_zero_input():
    Z = varying_input_set(random_stable(5, 0.3, 0), Zonotope.point(np.zeros(5)), 0.1)
    assert not np.any(Z.center) and not np.any(Z.generators)


@pytest.mark.parametrize("l", [1, 2, 4, 8])
def test_varying_brute_force(l):
    rng = np.random.default_rng(l)
    A = random_stable(6, 0.4, l, scale=2.0)
    U = random_zonotope(6, 2, rng, scale=0.5)
    delta = 0.3
    Z = varying_input_set(A, U, delta)
    pts = []
    for _ in range(200):
        B = np.sign(rng.uniform(-1, 1, (2, l)))
        vals = (U.center[:, None] + U.generators @ B).T
        pts.append(piecewise_solution(A, vals, delta))
    assert contains_points(Z, np.column_stack(pts)).all()


@given(st.integers(0, 10_000))
def test_constant_inside_varying(seed):
    rng = np.random.default_rng(seed)
    A = random_stable(10, 0.3, seed)
    U = random_zonotope(10, 3, rng)
    Zc = const_uncertain_input_set(A, U, 0.1)
    Zv = varying_input_set(A, U, 0.1)
    D = rng.standard_normal((50, 10))
    assert np.all(support_many(Zc, D) <= support_many(Zv, D) + 1e-9)


def test_varying_scaling(rng):
    A = random_stable(10, 0.3, 2)
    U = random_zonotope(10, 3, rng)
    D = rng.standard_normal((40, 10))
    Z1 = varying_input_set(A, U, 0.1)
    Z3 = varying_input_set(A, Zonotope(3 * U.center, 3 * U.generators), 0.1)
    # the certificate error box does not scale with U exactly; compare the set parts
    n = 10
    s1 = support_many(Zonotope(Z1.center, Z1.generators[:, :-n]), D)
    s3 = support_many(Zonotope(Z3.center, Z3.generators[:, :-n]), D)
    assert np.allclose(s3, 3 * s1, rtol=1e-12, atol=1e-12)
