"""Sparse matrix storage, products, norms and Gershgorin spectral bounds.

Storage is compressed sparse row (CSR) with sorted column indices and no
duplicates.  Products accumulate row by row over stored entries in
ascending column order, so results are bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

_U = np.finfo(float).eps / 2


class SparseMatrix:
    """Immutable real sparse matrix in canonical CSR layout."""

    __slots__ = ("_csr",)

    def __init__(self, data):
        if isinstance(data, SparseMatrix):
            csr = data._csr
        elif sp.issparse(data):
            csr = sp.csr_matrix(data, dtype=float, copy=True)
        else:
            arr = np.asarray(data, dtype=float)
            if arr.ndim != 2:
                raise ValueError("matrix must be two-dimensional")
            csr = sp.csr_matrix(arr)
        csr.sum_duplicates()
        csr.sort_indices()
        csr.eliminate_zeros()
        if not np.all(np.isfinite(csr.data)):
            raise ValueError("matrix entries must be finite")
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.flags.writeable = False
        self._csr = csr

    @classmethod
    def from_coo(cls, rows, cols, values, shape) -> "SparseMatrix":
        """Build from triplets; duplicate (row, col) pairs are summed."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        nr, nc = shape
        if rows.size and (rows.min() < 0 or rows.max() >= nr or cols.min() < 0 or cols.max() >= nc):
            raise IndexError("entry index out of bounds")
        coo = sp.coo_matrix((np.asarray(values, dtype=float), (rows, cols)), shape=shape)
        return cls(coo.tocsr())

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(sp.identity(n, format="csr"))

    @classmethod
    def zeros(cls, nrows: int, ncols: int | None = None) -> "SparseMatrix":
        return cls(sp.csr_matrix((nrows, nrows if ncols is None else ncols)))

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def nrows(self) -> int:
        return self._csr.shape[0]

    @property
    def ncols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    @property
    def indptr(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def data(self) -> np.ndarray:
        return self._csr.data

    def entries(self):
        """Yield (row, col, value) in row-major order."""
        coo = self._csr.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self._csr.T.tocsr())

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def __matmul__(self, x):
        return matvec(self, x) if np.ndim(x) == 1 else self._csr @ np.asarray(x, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix) or other.shape != self.shape:
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr) and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.data, other.data))

    __hash__ = None

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def as_sparse(M) -> SparseMatrix:
    return M if isinstance(M, SparseMatrix) else SparseMatrix(M)


def matvec(M: SparseMatrix, x) -> np.ndarray:
    """Sparse product Mx, rows accumulated over stored entries left to right."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != M.ncols:
        raise ValueError(f"dimension mismatch: matrix has {M.ncols} columns, vector has {x.shape}")
    return M._csr @ x


def elementwise_abs(M: SparseMatrix) -> SparseMatrix:
    csr = M._csr.copy()
    csr.data = np.abs(csr.data)
    return SparseMatrix(csr)


def _row_abs_sums(M) -> np.ndarray:
    if isinstance(M, SparseMatrix):
        return np.asarray(abs(M._csr).sum(axis=1)).ravel()
    if sp.issparse(M):
        return np.asarray(abs(M).sum(axis=1)).ravel()
    return np.abs(np.asarray(M, dtype=float)).sum(axis=1)


def inf_norm(M) -> float:
    """Maximum absolute row sum."""
    s = _row_abs_sums(M)
    return float(s.max()) if s.size else 0.0


def one_norm(M) -> float:
    """Maximum absolute column sum."""
    if isinstance(M, SparseMatrix):
        return inf_norm(M.transpose())
    return inf_norm(np.asarray(M, dtype=float).T) if not sp.issparse(M) else inf_norm(M.T)


def two_norm_upper(M) -> float:
    """Upper bound sqrt(||M||_1 ||M||_inf) on the spectral norm."""
    val = np.sqrt(one_norm(M) * inf_norm(M))
    # nudge up by a few ulps to cover rounding in the row sums
    return float(val * (1 + 8 * _U * max(1, _max_row_nnz(M))))


def _max_row_nnz(M) -> int:
    if isinstance(M, SparseMatrix):
        return int(np.diff(M.indptr).max()) if M.nrows else 0
    shape = np.shape(M)
    return shape[1] if len(shape) == 2 else 1


@dataclass(frozen=True)
class SpectralBounds:
    """Bounds a <= eig(sym part) <= b and |eig(skew part)| <= c."""

    a: float
    b: float
    c: float
    method: str = "gershgorin"
    gershgorin: tuple[float, float, float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.a <= self.b) or self.c < 0:
            raise ValueError(f"invalid spectral bounds a={self.a}, b={self.b}, c={self.c}")

    def scaled(self, t: float) -> "SpectralBounds":
        """Bounds for t*C with t >= 0."""
        g = None if self.gershgorin is None else tuple(t * v for v in self.gershgorin)
        return SpectralBounds(t * self.a, t * self.b, t * self.c, self.method, g)


def _gershgorin(P: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    diag = P.diagonal()
    absrow = np.asarray(abs(P).sum(axis=1)).ravel()
    radius = absrow - np.abs(diag)
    # rounding slack proportional to the row's magnitude and length
    nnz_row = np.diff(P.indptr)
    slack = (nnz_row + 2) * _U * absrow
    return diag, radius + slack


def spectral_bounds(C: SparseMatrix, refine: bool = False, strict: bool = False,
                    rel_tol: float = 1e-6) -> SpectralBounds:
    """Rigorous Gershgorin bounds on the symmetric and skew parts of C.

    With ``refine`` the symmetric extremes are tightened by Lanczos Ritz
    values widened by their residual norms and intersected with the
    Gershgorin interval.  ``strict`` rejects a refinement that moves the
    bounds by more than ``rel_tol`` relative to the Gershgorin values.
    """
    C = as_sparse(C)
    if C.nrows != C.ncols:
        raise ValueError("spectral bounds need a square matrix")
    n = C.nrows
    if n == 0:
        return SpectralBounds(0.0, 0.0, 0.0)
    csr = C._csr
    sym = ((csr + csr.T) * 0.5).tocsr()
    skew = ((csr - csr.T) * 0.5).tocsr()
    d, r = _gershgorin(sym)
    a = float(np.min(d - r))
    b = float(np.max(d + r))
    _, rk = _gershgorin(skew)
    c = float(max(np.max(rk), 0.0))
    if not refine or n < 3:
        return SpectralBounds(a, b, c, "gershgorin", (a, b, c))
    ar, br = _lanczos_refine(sym, a, b)
    scale = max(abs(a), abs(b), 1e-300)
    if strict and (abs(ar - a) > rel_tol * scale or abs(br - b) > rel_tol * scale):
        from .errors import CertificateError
        raise CertificateError(
            f"refined spectral bounds ({ar:.6g}, {br:.6g}) disagree with Gershgorin ({a:.6g}, {b:.6g})")
    return SpectralBounds(ar, br, c, "lanczos", (a, b, c))


def _lanczos_refine(sym: sp.csr_matrix, a: float, b: float) -> tuple[float, float]:
    """Ritz-value candidates, accepted only after a Cholesky inertia check.

    A Ritz value minus its residual need not bound the extreme eigenvalue
    (the iteration may have missed it), so each candidate s is kept only
    if sym - s I (or s I - sym) admits a Cholesky factorization after an
    extra backward-error margin.  Without a dense factorization (n > 2000)
    the Gershgorin values are returned.
    """
    from scipy.sparse.linalg import eigsh

    n = sym.shape[0]
    if n > 2000:
        return a, b
    S = sym.toarray()
    norm = inf_norm(sym)
    margin = 4 * (n + 2) * _U * norm + 1e-12 * norm
    out = [a, b]
    for which, idx in (("SA", 0), ("LA", 1)):
        try:
            if n <= 50:
                w, V = np.linalg.eigh(S)
                theta, x = (w[0], V[:, 0]) if idx == 0 else (w[-1], V[:, -1])
            else:
                w, V = eigsh(sym, k=1, which=which, tol=1e-10)
                theta, x = w[0], V[:, 0]
        except Exception:
            continue
        res = float(np.linalg.norm(sym @ x - theta * x) / max(np.linalg.norm(x), 1e-300))
        cand = theta - res - margin if idx == 0 else theta + res + margin
        shifted = S - cand * np.eye(n) if idx == 0 else cand * np.eye(n) - S
        try:
            np.linalg.cholesky(shifted - margin * np.eye(n))
        except np.linalg.LinAlgError:
            continue
        if idx == 0:
            out[0] = max(a, cand)
        else:
            out[1] = min(b, cand)
    if out[0] > out[1]:
        return a, b
    return out[0], out[1]
