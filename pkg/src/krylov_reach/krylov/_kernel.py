"""Compiled Arnoldi kernel processing a batch of seed vectors."""
from __future__ import annotations

import numpy as np
from numba import njit

# Reassociation lets the dot products vectorize.  The summation order is
# still fixed by the compiled code, so results are reproducible.
_FM = {"reassoc", "contract", "nsz"}


@njit(cache=True, fastmath=_FM)
def _dot(x, y, m):
    s = 0.0
    for i in range(m):
        s += x[i] * y[i]
    return s


@njit(cache=True, fastmath=_FM)
def _axpy(alpha, x, y, m):
    for i in range(m):
        y[i] -= alpha * x[i]


@njit(cache=True)
def arnoldi_batch(indptr, indices, data, seeds, aug, xis, tol_abs, V, H, ks, hnext, betas):
    """Modified Gram-Schmidt Arnoldi (with selective reorthogonalization) for every row of ``seeds``.

    Without augmentation (``aug.shape[0] == 0``) row c of ``seeds`` is the
    seed of column c.  With augmentation the operator is
    [[A, aug[c]], [0, 0]] of size n + 1 and the seed is e_{n+1}.

    Outputs: V[c, :k, :] the basis, H[c, :k+1, :k] the Hessenberg matrix,
    ks[c] = k the effective dimension (negative k marks a happy
    breakdown), hnext[c] = h_{k+1,k}, betas[c] the seed norm.
    """
    n = indptr.shape[0] - 1
    augmented = aug.shape[0] > 0
    N = n + 1 if augmented else n
    p = aug.shape[0] if augmented else seeds.shape[0]
    for c in range(p):
        xi = xis[c]
        if augmented:
            V[c, 0, n] = 1.0
            betas[c] = 1.0
        else:
            # scaled norm so tiny seeds do not underflow
            scale = 0.0
            for i in range(n):
                scale = max(scale, abs(seeds[c, i]))
            for i in range(n):
                V[c, 0, i] = seeds[c, i] / scale
            nv = np.sqrt(_dot(V[c, 0], V[c, 0], n))
            betas[c] = scale * nv
            for i in range(n):
                V[c, 0, i] /= nv
        k_eff = xi
        broke = False
        hn = 0.0
        for k in range(xi):
            v = V[c, k]
            w = V[c, k + 1]
            for i in range(n):
                s = 0.0
                for jj in range(indptr[i], indptr[i + 1]):
                    s += data[jj] * v[indices[jj]]
                w[i] = s
            if augmented:
                vn = v[n]
                for i in range(n):
                    w[i] += aug[c, i] * vn
                w[n] = 0.0
            w0 = np.sqrt(_dot(w, w, N))
            for j in range(k + 1):
                h = _dot(V[c, j], w, N)
                H[c, j, k] = h
                _axpy(h, V[c, j], w, N)
            hn = np.sqrt(_dot(w, w, N))
            # second sweep when cancellation lost more than 1 - 1/sqrt(2) of the norm
            if hn < 0.7071067811865476 * w0:
                for j in range(k + 1):
                    h = _dot(V[c, j], w, N)
                    H[c, j, k] += h
                    _axpy(h, V[c, j], w, N)
                hn = np.sqrt(_dot(w, w, N))
            if hn <= tol_abs[c] or hn == 0.0 or k + 1 == N:
                k_eff = k + 1
                broke = True
                for i in range(N):
                    w[i] = 0.0
                break
            if k + 1 < xi:
                H[c, k + 1, k] = hn
            for i in range(N):
                w[i] /= hn
        ks[c] = -k_eff if broke else k_eff
        hnext[c] = hn


@njit(cache=True, fastmath=_FM)
def correction_sums(Y, V, half_l, extra, cen, rad):
    """cen[c] = sum_i half_l[i] V_c^T Y[c, i]; rad[c] = sum_i |half_l[i]| |V_c^T Y[c, i]| + extra[c] |V_c|^T 1."""
    pc, ne, xm = Y.shape
    n = V.shape[2]
    z = np.empty(n)
    for c in range(pc):
        for i in range(ne):
            for k in range(n):
                z[k] = 0.0
            for j in range(xm):
                y = Y[c, i, j]
                if y != 0.0:
                    for k in range(n):
                        z[k] += y * V[c, j, k]
            a, r = half_l[i], abs(half_l[i])
            for k in range(n):
                cen[c, k] += a * z[k]
                rad[c, k] += r * abs(z[k])
        e = extra[c]
        if e != 0.0:
            for j in range(xm):
                for k in range(n):
                    rad[c, k] += e * abs(V[c, j, k])
