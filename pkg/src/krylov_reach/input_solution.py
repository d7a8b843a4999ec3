"""Input (particular) solutions via augmented Krylov subspaces.

For an input vector u the constant-input solution int_0^t exp(As) ds u is
the first n entries of exp(t [[A, u], [0, 0]]) e_{n+1}.  Each input column
gets its own Arnoldi run on its own augmented matrix and its own
certificate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .homogeneous import KrylovOperator, _as_operator, _hess_inf_norms
from .krylov import breakdown_bound, epsilon_norm, small_expm
from .krylov.arnoldi import iter_arnoldi
from .krylov.certificate import choose_dimension
from .policy import EtaPolicy, XiPolicy, choose_eta, remainder_phi, rounding_floor
from .sets import IntervalVector, Zonotope
from .sparse_linalg import SparseMatrix


@dataclass(frozen=True)
class AugmentedSystem:
    """[[A, u], [0, 0]] with seed e_{n+1}; P = [I, 0] recovers the state."""

    a_tilde: SparseMatrix
    seed: np.ndarray

    @property
    def n(self) -> int:
        return self.a_tilde.nrows - 1

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[: self.n]


def augment(A, u) -> AugmentedSystem:
    A = A.A if isinstance(A, KrylovOperator) else A
    A = A if isinstance(A, SparseMatrix) else SparseMatrix(A)
    u = np.asarray(u, dtype=float).reshape(-1)
    n = A.nrows
    if u.shape[0] != n:
        raise ValueError(f"input has length {u.shape[0]}, system has dimension {n}")
    M = sp.bmat([[A.to_scipy(), sp.csr_matrix(u[:, None])], [sp.csr_matrix((1, n)), sp.csr_matrix((1, 1))]])
    seed = np.zeros(n + 1)
    seed[n] = 1.0
    return AugmentedSystem(SparseMatrix(M.tocsr()), seed)


@dataclass
class InputColumns:
    """Per-column data for input vectors u_j (columns of the input matrix)."""

    constant: np.ndarray            # (n, m) P V exp(H delta) e_1
    taylor: list                    # per column: (eta_j, n) rows P V (delta H)^j e_1 / j!
    remainder: np.ndarray           # (n, m) radius of the lifted Taylor tail
    err: np.ndarray                 # (m,) error bound of each column
    xi: np.ndarray
    eta: np.ndarray
    methods: list = field(default_factory=list)
    eps_norm: np.ndarray | None = None
    met: np.ndarray | None = None


def input_columns(op: KrylovOperator, U: np.ndarray, delta: float, eta_policy: EtaPolicy | None = None,
                  strict: bool = False) -> InputColumns:
    """Krylov data of every nonzero column of U for one step of length delta."""
    U = np.asarray(U, dtype=float)
    n, m = U.shape
    const = np.zeros((n, m))
    rem = np.zeros((n, m))
    err = np.zeros(m)
    xis = np.zeros(m, dtype=np.int64)
    etas = np.zeros(m, dtype=np.int64)
    eps = np.zeros(m)
    met = np.ones(m, dtype=bool)
    methods = [""] * m
    taylor = [np.zeros((0, n)) for _ in range(m)]
    nz = np.flatnonzero(np.any(U != 0, axis=0))
    if nz.size == 0 or delta == 0:
        return InputColumns(const, taylor, rem, err, xis, etas, methods, eps, met)
    pol = op.policy
    # one dimension for the batch, chosen on the column with the largest norm
    # bound; every column then gets its own certificate at that dimension
    certs = []
    data = [op.info.augmented(U[:, j]) for j in nz]
    worst = int(np.argmax([d[1] for d in data]))
    if pol.fixed is not None:
        # a fixed dimension of n or more means the full augmented space
        xi = n + 1 if pol.fixed >= n else max(1, int(pol.fixed))
    else:
        xi = choose_dimension(op.info, pol.target, delta, pol.cap, bounds=data[worst][0],
                              norm=data[worst][1], dim=n + 1).xi
    for (bounds, norm) in data:
        certs.append(epsilon_norm(op.info, xi, delta, bounds=bounds, norm=norm, dim=n + 1))
    norms = np.array([d[1] for d in data])
    for ch in iter_arnoldi(op.A, xi, aug=U[:, nz], norms=norms, tol=pol.tol):
        cols = nz[ch.columns]
        E = small_expm(ch.H, delta)
        const[:, cols] = ch.project(E[:, :, 0])[:, :n].T
        x = _hess_inf_norms(ch.H) * delta
        Vabs = np.abs(ch.V[:, : ch.H.shape[1], :n]).sum(axis=1)
        for j, col in enumerate(cols):
            c = certs[int(np.searchsorted(nz, col))]
            e = c.error
            if ch.breakdown[j]:
                e = min(e, breakdown_bound(ch.h_next[j], delta, c.bounds.b) + c.rounding)
            err[col] = e
            xis[col] = ch.k[j]
            eps[col] = c.eps_norm
            methods[col] = c.method
            met[col] = c.eps_norm * delta <= pol.target
        if eta_policy is not None:
            choices = [choose_eta(float(xx), eta_policy) for xx in x]
            e_ = np.array([c.eta for c in choices], dtype=np.int64)
            phis = np.array([remainder_phi(float(xx), int(k)) + rounding_floor(float(xx)) for xx, k in zip(x, e_)])
            rem[:, cols] = (phis[:, None] * Vabs).T
            etas[cols] = e_
            Hd = ch.H * delta
            y = np.zeros((len(cols), ch.H.shape[1]))
            y[:, 0] = 1.0
            terms = []
            for jj in range(1, int(e_.max()) + 1):
                y = np.einsum("cij,cj->ci", Hd, y) / jj
                terms.append(ch.project(y)[:, :n])
            T = np.stack(terms, axis=1)  # (pc, eta_max, n)
            for j, col in enumerate(cols):
                taylor[col] = T[j, : e_[j], :].copy()
    if strict and not np.all(met[nz]):
        from .errors import CertificateError
        raise CertificateError(f"input certificate target {pol.target:g} not met with xi={xi}")
    return InputColumns(const, taylor, rem, err, xis, etas, methods, eps, met)


def _input_matrix(U: Zonotope) -> np.ndarray:
    return np.column_stack([U.center, U.generators])


def const_input_point(A, u, delta: float, xi_policy: XiPolicy | None = None) -> tuple[np.ndarray, IntervalVector]:
    """int_0^delta exp(As) ds u, enclosed by x_p + [-1, 1]^n eps delta."""
    op = _as_operator(A, xi_policy)
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != op.n:
        raise ValueError("dimension mismatch")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    ic = input_columns(op, u[:, None], delta)
    return ic.constant[:, 0], IntervalVector.symmetric(np.full(op.n, ic.err[0]))


def partial_input_point(A, u, t0: float, te: float, delta: float,
                        xi_policy: XiPolicy | None = None) -> tuple[np.ndarray, IntervalVector]:
    """int_{t0}^{te} exp(A(delta - s)) ds u for 0 <= t0 <= te <= delta.

    Computed as the difference of two constant-input solutions over
    [0, delta - t0] and [0, delta - te].  The error radius is the sum of
    the two certificate errors, since errors of a difference add.
    """
    if not (0 <= t0 <= te <= delta):
        raise ValueError("need 0 <= t0 <= te <= delta")
    op = _as_operator(A, xi_policy)
    u = np.asarray(u, dtype=float).reshape(-1)
    if te == t0 or not np.any(u):
        return np.zeros(op.n), IntervalVector.zeros(op.n)
    x1, e1 = const_input_point(op, u, delta - t0)
    if te == delta:
        return x1, e1
    x2, e2 = const_input_point(op, u, delta - te)
    return x1 - x2, IntervalVector.symmetric(e1.radius + e2.radius)


def const_uncertain_input_set(A, U: Zonotope, delta: float, xi_policy: XiPolicy | None = None,
                              strict: bool = False) -> Zonotope:
    """Constant inputs u in U over one step: mapped columns plus error box."""
    Z, err, _ = const_input_parts(_as_operator(A, xi_policy), U, delta, strict)
    return _with_box(Z, err)


def const_input_parts(op: KrylovOperator, U: Zonotope, delta: float, strict: bool = False):
    if U.dim != op.n:
        raise ValueError("dimension mismatch")
    ic = input_columns(op, _input_matrix(U), delta, strict=strict)
    Z = Zonotope(ic.constant[:, 0], ic.constant[:, 1:])
    return Z, np.full(op.n, float(ic.err.sum())), ic


def varying_input_set(A, U: Zonotope, delta: float, eta_policy: EtaPolicy = EtaPolicy(),
                      xi_policy: XiPolicy | None = None, strict: bool = False) -> Zonotope:
    """Arbitrarily varying inputs u(t) in U over one step of length delta.

    Center sum_j P V (delta H)^j e_1 / j! of the center column; generators
    P V (delta H)^j e_1 / j! for every generator column i and order j
    (ordered j-major, zero-padded to the largest order); an error box from
    the lifted Taylor tails and the certificate errors.
    """
    Z, err, _ = varying_input_parts(_as_operator(A, xi_policy), U, delta, eta_policy, strict)
    return _with_box(Z, err)


def varying_input_parts(op: KrylovOperator, U: Zonotope, delta: float, eta_policy: EtaPolicy = EtaPolicy(),
                        strict: bool = False):
    if U.dim != op.n:
        raise ValueError("dimension mismatch")
    n, q = U.dim, U.num_generators
    ic = input_columns(op, _input_matrix(U), delta, eta_policy, strict=strict)
    center = ic.taylor[0].sum(axis=0) if ic.taylor[0].shape[0] else np.zeros(n)
    eta_max = int(ic.eta[1:].max()) if q else 0
    G = np.zeros((n, q * eta_max))
    for i in range(q):
        T = ic.taylor[i + 1]
        for j in range(T.shape[0]):
            G[:, j * q + i] = T[j]
    err = ic.remainder.sum(axis=1) + float(ic.err.sum())
    return Zonotope(center, G), err, ic


def _with_box(Z: Zonotope, radius: np.ndarray) -> Zonotope:
    idx = np.flatnonzero(radius > 0)
    B = np.zeros((Z.dim, idx.size))
    B[idx, np.arange(idx.size)] = radius[idx]
    return Zonotope(Z.center, np.hstack([Z.generators, B]))
