import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import ellipe, ellipk

from conftest import random_stable
from krylov_reach.krylov import (arnoldi, augmented_arnoldi, choose_dimension, elliptic_KE, epsilon_norm,
                                 exp_action, optimize_q, small_expm, solve_nu_m)
from krylov_reach.krylov.certificate import nu_residual, q_residual
from krylov_reach.oracle import dense_expm
from krylov_reach.sparse_linalg import SparseMatrix, SpectralBounds, two_norm_upper

# Frozen oracle values (see the generating snippets in the test docstrings).
NU_M_REF = (0.5, 0.42360654239698947)
Q_REF = 0.021535382316598017
K_HALF = 1.85407467730137191843
E_HALF = 1.35064388104767550252


def _bounds(a, b, c):
    return SpectralBounds(a, b, c, "test", (a, b, c))


def test_arnoldi_eigenvector_seed():
    dec = arnoldi(SparseMatrix.identity(3), [2.0, 0.0, 0.0], 10)
    assert dec.happy_breakdown and dec.xi == 1
    assert np.allclose(dec.H, [[1.0]]) and np.allclose(dec.V[:, 0], [1, 0, 0])
    assert np.allclose(exp_action(dec, 1.0), [2 * math.e, 0, 0], rtol=1e-15)


def test_arnoldi_nilpotent():
    C = SparseMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    dec = arnoldi(C, [0.0, 1.0], 5)
    assert dec.xi == 2 and dec.happy_breakdown
    assert np.allclose(dec.H, [[0, 0], [1, 0]])
    assert np.allclose(exp_action(dec, 1.0), [1.0, 1.0], atol=1e-15)


def test_arnoldi_zero_seed_rejected():
    with pytest.raises(ValueError):
        arnoldi(SparseMatrix.identity(3), np.zeros(3), 3)


def test_arnoldi_full_space_matches_dense():
    C = random_stable(200, 0.03, 5)
    v = np.random.default_rng(1).standard_normal(200)
    dec = arnoldi(C, v, 200)
    ref = dense_expm(C.toarray(), 1.0) @ v
    assert np.linalg.norm(exp_action(dec, 1.0) - ref) <= 1e-10 * np.linalg.norm(ref)


@given(st.integers(0, 10_000), st.integers(5, 60))
def test_arnoldi_relation_and_orthogonality(seed, xi):
    C = random_stable(120, 0.05, seed)
    v = np.random.default_rng(seed).standard_normal(120)
    dec = arnoldi(C, v, xi)
    V, H = dec.V, dec.H
    assert np.abs(V.T @ V - np.eye(dec.xi)).max() <= 1e-12 * dec.xi
    assert np.allclose(V[:, 0], v / np.linalg.norm(v), atol=1e-14)
    assert np.all(np.tril(H, -2) == 0)
    R = C.toarray() @ V - V @ H
    if not dec.happy_breakdown:
        R[:, -1] -= dec.h_next * dec.v_next
    assert np.abs(R).max() <= 1e-10 * two_norm_upper(C)


def test_augmented_arnoldi_matches_dense():
    C = random_stable(40, 0.1, 2)
    u = np.random.default_rng(2).standard_normal(40)
    dec = augmented_arnoldi(C, u, 41)
    At = np.zeros((41, 41))
    At[:40, :40] = C.toarray()
    At[:40, 40] = u
    assert np.allclose(exp_action(dec, 0.3), dense_expm(At, 0.3)[:, 40], atol=1e-13)


def test_small_expm_examples():
    assert np.array_equal(small_expm(np.zeros((3, 3)), 1.0), np.eye(3))
    assert np.allclose(small_expm(np.diag([1.0, -1.0]), 1.0), np.diag([math.e, 1 / math.e]), rtol=1e-15)
    with pytest.raises(ValueError):
        small_expm(np.zeros((5, 5)), cap=4)


def test_small_expm_against_extended_taylor():
    """200-term Taylor series in 80-bit extended precision."""
    rng = np.random.default_rng(0)
    H = rng.standard_normal((50, 50)) / 10
    X = H.astype(np.longdouble)
    term = np.eye(50, dtype=np.longdouble)
    acc = term.copy()
    for k in range(1, 200):
        term = term @ X / k
        acc += term
    ref = acc.astype(float)
    assert np.linalg.norm(small_expm(H, 1.0) - ref) <= 1e-12 * np.linalg.norm(ref)


def test_exp_action_at_zero():
    C = random_stable(30, 0.1, 0)
    v = np.random.default_rng(3).standard_normal(30)
    assert np.allclose(exp_action(arnoldi(C, v, 5), 0.0), v, atol=1e-14)


def test_elliptic_analytic():
    K, E = elliptic_KE(0.0)
    assert K == pytest.approx(math.pi / 2, abs=1e-15) and E == pytest.approx(math.pi / 2, abs=1e-15)
    assert elliptic_KE(1.0)[1] == 1.0
    with pytest.raises(ValueError):
        elliptic_KE(1.5)


def test_elliptic_half_against_quadrature():
    """K_HALF, E_HALF: mpmath.quad of the defining integrals at 30 digits."""
    K, E = elliptic_KE(0.5)
    assert abs(K - K_HALF) <= 1e-13 and abs(E - E_HALF) <= 1e-13
    with mpmath.workdps(30):
        k = mpmath.quad(lambda th: 1 / mpmath.sqrt(1 - 0.5 * mpmath.sin(th) ** 2), [0, mpmath.pi / 2])
    assert abs(float(k) - K_HALF) <= 1e-15


@given(st.floats(0.0, 0.999))
def test_elliptic_matches_scipy(m):
    K, E = elliptic_KE(m)
    assert K == pytest.approx(ellipk(m), rel=1e-13) and E == pytest.approx(ellipe(m), rel=1e-13)


@given(st.floats(0.01, 50.0), st.floats(-20.0, 0.0))
def test_nu_m_symmetry(c, a):
    m, nu = solve_nu_m(_bounds(a, a + 2 * c, c))
    assert m == pytest.approx(0.5, abs=1e-12)


@given(st.floats(0.01, 50.0), st.floats(0.01, 50.0))
def test_nu_m_residual(half, c):
    m, nu = solve_nu_m(_bounds(-2 * half, 0.0, c))
    assert 0 < m < 1 and nu > 0
    assert abs(nu_residual(m, half, c)) <= 1e-12 * max(half, c)


def test_nu_m_frozen_grid_value():
    """Reference: sign change of (E-(1-m)K)(m)/c - (E-mK)(1-m)/(0.5(b-a)) over a 10^6 grid, scipy integrals."""
    m, nu = solve_nu_m(_bounds(-3.0, -1.0, 1.0))
    assert m == pytest.approx(NU_M_REF[0], abs=1e-12)
    assert nu == pytest.approx(NU_M_REF[1], rel=1e-12)


def test_q_residual_at_zero():
    nu = 0.8
    assert q_residual(0.0, 30, nu, 0.5) == pytest.approx(-1 / (2 * nu))


@given(st.integers(2, 200), st.floats(0.05, 10.0), st.floats(0.01, 0.99))
def test_optimize_q_contract(xi, nu, m):
    q = optimize_q(xi, nu, m)
    assert 0 < q < 1
    # either the residual vanishes or the bracket collapsed to machine precision
    r = q_residual(q, xi, nu, m)
    d = abs(q_residual(q * (1 + 4e-16), xi, nu, m) - r) + abs(q_residual(q * (1 - 4e-16), xi, nu, m) - r)
    assert abs(r) <= max(1e-12, 2 * d)


def test_optimize_q_frozen_value():
    """Reference: mpmath.findroot at 30 digits (0.02153538231659846...), confirmed by a grid scan."""
    assert optimize_q(30, 0.8, 0.5) == pytest.approx(Q_REF, rel=1e-12)
    with mpmath.workdps(30):
        ct = 1 / (2 * mpmath.mpf("0.8"))
        f = lambda q: 29 * q - 28 * q**2 - ct * (1 - q) * mpmath.sqrt((1 - q**2) ** 2 + 2 * q**2)
        ref = float(mpmath.findroot(f, 0.02))
    assert optimize_q(30, 0.8, 0.5) == pytest.approx(ref, rel=1e-12)


def test_epsilon_norm_monotone_truncation():
    C = random_stable(400, 0.02, 11)
    certs = [epsilon_norm(C, xi, 0.05) for xi in range(20, 121, 10)]
    trunc = [c.truncation for c in certs]
    assert all(b <= a for a, b in zip(trunc, trunc[1:]))
    # the rounding allowance grows linearly in xi, so the total can level off
    totals = [c.eps_norm for c in certs]
    flagged = [x for x, a, b in zip(range(30, 121, 10), totals, totals[1:]) if b > a]
    if flagged:
        warnings.warn(f"total eps_norm not decreasing at xi={flagged} (rounding floor)")
    assert all(c.method in ("field_of_values", "saad_fallback") for c in certs)


@pytest.mark.parametrize("seed", range(10))
def test_certificate_soundness_small(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.choice([50, 100]))
    C = random_stable(n, 0.05, seed, scale=float(rng.uniform(0.5, 3)))
    v = rng.standard_normal(n)
    E = dense_expm(C.toarray(), 1.0)
    for xi in (5, 10, 20):
        for t in (0.1, 1.0):
            cert = epsilon_norm(C, xi, t)
            dec = arnoldi(C, v, xi)
            err = np.linalg.norm(exp_action(dec, t) - dense_expm(C.toarray(), t) @ v)
            assert err <= np.linalg.norm(v) * cert.eps_norm * t
    assert E.shape == (n, n)


def test_choose_dimension_full_space():
    C = random_stable(30, 0.1, 0, scale=20)
    ch = choose_dimension(C, 1e-300, 1.0, xi_cap=500)
    assert ch.xi == 30
    assert ch.certificate.method == "full_space"


def test_choose_dimension_monotone_in_target():
    C = random_stable(300, 0.02, 4)
    xis = [choose_dimension(C, tgt, 0.1).xi for tgt in 10.0 ** -np.arange(4, 13)]
    assert all(b >= a for a, b in zip(xis, xis[1:]))
    for tgt in (1e-6, 1e-10):
        ch = choose_dimension(C, tgt, 0.1)
        assert ch.met and ch.certificate.eps_norm * 0.1 <= tgt


def test_choose_dimension_cap_flag():
    C = random_stable(300, 0.05, 4, scale=50)
    ch = choose_dimension(C, 1e-14, 1.0, xi_cap=5)
    assert ch.xi == 5 and not ch.met
