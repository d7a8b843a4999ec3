"""Arnoldi reduction and exponential action in the Krylov subspace."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg

from ..sparse_linalg import SparseMatrix, as_sparse, two_norm_upper
from ._kernel import arnoldi_batch

DEFAULT_TOL = 1e-14
EXPM_CAP = 500
_CHUNK_BYTES = 64 * 2**20


@dataclass(frozen=True)
class KrylovDecomposition:
    """Basis V (N x xi), Hessenberg H (xi x xi) and seed norm beta."""

    V: np.ndarray
    H: np.ndarray
    beta: float
    xi: int
    happy_breakdown: bool
    h_next: float = 0.0
    v_next: np.ndarray | None = None


def small_expm(H, t: float = 1.0, cap: int = EXPM_CAP) -> np.ndarray:
    """exp(H t) for a small dense matrix or a stack of them.

    Uses scipy's scaling-and-squaring Pade method, whose backward error is
    below unit roundoff for all inputs.
    """
    H = np.asarray(H, dtype=float)
    if H.shape[-1] != H.shape[-2]:
        raise ValueError("square matrix required")
    if H.shape[-1] > cap:
        raise ValueError(f"matrix dimension {H.shape[-1]} exceeds cap {cap}")
    if H.shape[-1] == 0:
        return H.copy()
    return scipy.linalg.expm(H * t)


@dataclass
class ArnoldiChunk:
    """Arnoldi output for a contiguous block of columns.

    ``H`` is zero-padded beyond each column's effective dimension so stacked
    exponentials and powers act on the true Hessenberg block only.
    """

    columns: np.ndarray
    V: np.ndarray
    H: np.ndarray
    k: np.ndarray
    breakdown: np.ndarray
    h_next: np.ndarray
    beta: np.ndarray

    def project(self, Y: np.ndarray) -> np.ndarray:
        """Rows sum_j V[c, j] * Y[c, j] for a (pc, xi) coefficient array."""
        xi = Y.shape[1]
        return np.matmul(Y[:, None, :], self.V[:, :xi, :])[:, 0, :]

    def project_abs(self, Y: np.ndarray) -> np.ndarray:
        xi = Y.shape[1]
        return np.matmul(Y[:, None, :], np.abs(self.V[:, :xi, :]))[:, 0, :]


def iter_arnoldi(A: SparseMatrix, xis, seeds: np.ndarray | None = None, aug: np.ndarray | None = None,
                 norms=None, tol: float = DEFAULT_TOL, chunk_bytes: int = _CHUNK_BYTES) -> Iterator[ArnoldiChunk]:
    """Run Arnoldi on many seeds, yielding results chunk by chunk.

    Either ``seeds`` (n x p, one nonzero seed per column) or ``aug``
    (n x p, the input vectors u of augmented matrices [[A, u], [0, 0]]
    with seed e_{n+1}) is given.  ``norms`` are the operator norm bounds
    used in the breakdown test h_{k+1,k} <= tol * norm.
    """
    A = as_sparse(A)
    n = A.nrows
    augmented = aug is not None
    cols = np.ascontiguousarray((aug if augmented else seeds).T, dtype=float)
    p = cols.shape[0]
    xis = np.broadcast_to(np.asarray(xis, dtype=np.int64), (p,)).copy()
    if p == 0:
        return
    N = n + 1 if augmented else n
    xis = np.minimum(np.maximum(xis, 1), N)
    if norms is None:
        norms = np.full(p, two_norm_upper(A))
    tol_abs = tol * np.broadcast_to(np.asarray(norms, dtype=float), (p,))
    xmax = int(xis.max())
    per_col = (xmax + 1) * N * 8 + (xmax + 1) * xmax * 8
    step = max(1, int(chunk_bytes // per_col))
    empty = np.zeros((0, n))
    for s0 in range(0, p, step):
        sl = slice(s0, min(p, s0 + step))
        pc = sl.stop - sl.start
        xc = xis[sl]
        xm = int(xc.max())
        V = np.zeros((pc, xm + 1, N))
        H = np.zeros((pc, xm + 1, xm))
        ks = np.zeros(pc, dtype=np.int64)
        hn = np.zeros(pc)
        betas = np.zeros(pc)
        block = cols[sl]
        arnoldi_batch(A.indptr, A.indices, A.data, empty if augmented else block,
                      block if augmented else np.zeros((0, n)), xc, np.ascontiguousarray(tol_abs[sl]),
                      V, H, ks, hn, betas)
        broke = ks < 0
        k = np.abs(ks)
        Hs = H[:, :xm, :xm].copy()
        mask = np.arange(xm)[None, :] >= k[:, None]
        Hs[mask[:, :, None] | mask[:, None, :]] = 0.0
        yield ArnoldiChunk(np.arange(sl.start, sl.stop), V, Hs, k, broke, hn, betas)


def arnoldi(C, v, xi_max: int, tol: float = DEFAULT_TOL) -> KrylovDecomposition:
    """Modified Gram-Schmidt Arnoldi iteration for a single seed.

    Stops early (happy breakdown) when h_{k+1,k} <= tol * ||C||, with
    ||C|| bounded by ``two_norm_upper``, or when the space is exhausted.
    """
    C = as_sparse(C)
    if C.nrows != C.ncols:
        raise ValueError("square matrix required")
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != C.ncols:
        raise ValueError("seed dimension mismatch")
    if not np.any(v):
        raise ValueError("zero seed vector; handle it before calling arnoldi")
    if xi_max < 1:
        raise ValueError("xi_max must be >= 1")
    ch = next(iter_arnoldi(C, [xi_max], seeds=v[:, None], tol=tol))
    return _decomposition(ch, 0)


def _decomposition(ch: ArnoldiChunk, i: int) -> KrylovDecomposition:
    k = int(ch.k[i])
    broke = bool(ch.breakdown[i])
    V = ch.V[i, :k, :].T.copy()
    v_next = None if broke else ch.V[i, k, :].copy()
    return KrylovDecomposition(V, ch.H[i, :k, :k].copy(), float(ch.beta[i]), k, broke,
                               float(ch.h_next[i]), v_next)


def augmented_arnoldi(A, u, xi_max: int, tol: float = DEFAULT_TOL, norm: float | None = None) -> KrylovDecomposition:
    """Arnoldi on [[A, u], [0, 0]] with seed e_{n+1}; V has n + 1 rows."""
    A = as_sparse(A)
    u = np.asarray(u, dtype=float).reshape(-1)
    norms = None if norm is None else [norm]
    ch = next(iter_arnoldi(A, [xi_max], aug=u[:, None], norms=norms, tol=tol))
    return _decomposition(ch, 0)


def exp_action(dec: KrylovDecomposition, t: float) -> np.ndarray:
    """beta * V * exp(H t) * e_1."""
    if t < 0:
        raise ValueError("t must be >= 0")
    y = small_expm(dec.H, t)[:, 0]
    return dec.beta * (dec.V @ y)


def breakdown_bound(h_next: float, t: float, b: float) -> float:
    """A-posteriori error per unit seed norm after an Arnoldi stop.

    From C V = V H + h v e_k^T the error obeys
    ||e(t)|| <= h * t * exp(2 t max(b, 0)), with b bounding the symmetric
    part of C (and hence of H).
    """
    return h_next * t * np.exp(2 * t * max(b, 0.0))
