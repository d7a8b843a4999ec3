"""A-priori error bounds for the Krylov approximation of exp(tC) v.

The main bound follows Wang and Ye (2016):
spectral bounds (a, b, c) of the symmetric and skew parts of tC give an
elliptic parameter m and a constant nu, a scalar root-find gives q, and
the bound is a closed form in q.  Saad's simpler bound is always computed
as well and the smaller of the two is reported.

Bounds are stated for exact arithmetic; a rounding allowance is added on
top (see ``rounding_allowance``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..sparse_linalg import SpectralBounds, as_sparse, spectral_bounds, two_norm_upper
from .elliptic import e_minus_k

log = logging.getLogger(__name__)

_U = np.finfo(float).eps / 2
WANG_CONSTANT = 22.16


@dataclass(frozen=True)
class ErrorCertificate:
    """Normalized error bound: ||exp(tC)v - approx|| <= ||v|| * eps_norm * t.

    ``bounds`` and ``norm`` describe C itself (not tC).  ``truncation`` and
    ``rounding`` are the two contributions to ``eps_norm * t``.
    """

    eps_norm: float
    bounds: SpectralBounds
    xi: int
    t: float
    method: str
    norm: float
    truncation: float
    rounding: float
    m: float = math.nan
    nu: float = math.nan
    q: float = math.nan

    @property
    def error(self) -> float:
        """Bound per unit seed norm at time t."""
        return self.truncation + self.rounding


class OperatorInfo:
    """Cached norm and Gershgorin data of a sparse matrix.

    Also yields the same data for the augmented matrix [[C, u], [0, 0]]
    without assembling it.
    """

    def __init__(self, C, refine: bool = False, strict: bool = False):
        C = as_sparse(C)
        if C.nrows != C.ncols:
            raise ValueError("square matrix required")
        self.n = C.nrows
        csr = C.to_scipy()
        self.row_abs = np.asarray(abs(csr).sum(axis=1)).ravel()
        self.col_abs = np.asarray(abs(csr).sum(axis=0)).ravel()
        self.max_row_nnz = int(np.diff(csr.indptr).max()) if self.n else 0
        sym = ((csr + csr.T) * 0.5).tocsr()
        skew = ((csr - csr.T) * 0.5).tocsr()
        self.sym_diag = sym.diagonal()
        self.sym_rad = np.asarray(abs(sym).sum(axis=1)).ravel() - np.abs(self.sym_diag)
        self.skew_rad = np.asarray(abs(skew).sum(axis=1)).ravel()
        self.bounds = spectral_bounds(C, refine=refine, strict=strict)
        self.norm = two_norm_upper(C)

    def augmented(self, u) -> tuple[SpectralBounds, float]:
        """Spectral bounds and norm bound of [[C, u], [0, 0]]."""
        u = np.abs(np.asarray(u, dtype=float))
        u1 = float(u.sum())
        slack = (self.max_row_nnz + 3) * _U
        lo = np.append(self.sym_diag - self.sym_rad - 0.5 * u, -0.5 * u1)
        hi = np.append(self.sym_diag + self.sym_rad + 0.5 * u, 0.5 * u1)
        scale = np.append(np.abs(self.sym_diag) + self.sym_rad + 0.5 * u, 0.5 * u1)
        a = float(np.min(lo - slack * scale))
        b = float(np.max(hi + slack * scale))
        c = float(max(np.max(self.skew_rad + 0.5 * u), 0.5 * u1) * (1 + slack))
        one = max(float(self.col_abs.max()) if self.n else 0.0, u1)
        inf = float(np.max(self.row_abs + u)) if self.n else 0.0
        norm = math.sqrt(one * inf) * (1 + slack)
        return SpectralBounds(a, b, c, "gershgorin", (a, b, c)), norm


def _info(C) -> OperatorInfo:
    return C if isinstance(C, OperatorInfo) else OperatorInfo(C)


def nu_residual(m: float, half_width: float, c: float) -> float:
    """Cross-multiplied residual of the nu equation, O(1) scaled."""
    return e_minus_k(m) * half_width - e_minus_k(1.0 - m) * c


def _regularize(bounds: SpectralBounds) -> tuple[float, float, float]:
    a, b, c = bounds.a, bounds.b, bounds.c
    if b - a <= 1e-14 * max(1.0, abs(a), abs(b), c):
        w = max(1e-12 * max(1.0, abs(a)), c)
        a, b = a - w, b + w
    c = max(c, 1e-14 * (b - a))
    return a, b, c


def solve_nu_m(bounds: SpectralBounds) -> tuple[float, float]:
    """Solve for the elliptic parameter m and nu by bisection on (0, 1).

    A zero skew bound is replaced by 1e-14 (b - a) and a degenerate
    symmetric interval is widened; both replacements are conservative.
    """
    a, b, c = _regularize(bounds)
    half = 0.5 * (b - a)
    lo, hi = 0.0, 1.0
    f_lo = nu_residual(lo, half, c)
    f_hi = nu_residual(hi, half, c)
    if not (f_lo < 0 < f_hi):
        raise ArithmeticError("nu equation has no sign change on (0, 1)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f = nu_residual(mid, half, c)
        if f == 0:
            lo = hi = mid
            break
        if f < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16:
            break
    m = 0.5 * (lo + hi)
    m = min(max(m, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
    nu = e_minus_k(m) / c
    return float(m), float(nu)


def q_residual(q: float, xi: int, nu: float, m: float) -> float:
    ct = 1.0 / (2.0 * nu)
    return (xi - 1) * q + (2 - xi) * q * q - ct * (1 - q) * math.sqrt((1 - q * q) ** 2 + 4 * m * q * q)


def optimize_q(xi: int, nu: float, m: float) -> float:
    """Bisection for the root of the q residual on (0, 1)."""
    if xi < 2:
        raise ValueError("optimize_q needs xi >= 2")
    if not (nu > 0 and 0 < m < 1):
        raise ValueError("optimize_q needs nu > 0 and m in (0, 1)")
    ct = 1.0 / (2.0 * nu)
    eps = 4 * _U * (xi + ct + 1)
    q, q_lo, q_hi = 0.0, 0.0, 1.0
    res = math.inf
    for _ in range(2000):
        if abs(res) <= eps:
            break
        res = q_residual(q, xi, nu, m)
        if abs(res) <= eps:
            break
        if res < 0:
            q_lo, q = q, 0.5 * (q + q_hi)
        else:
            q_hi, q = q, 0.5 * (q + q_lo)
        if q_hi - q_lo <= 2 * _U * q_hi:
            break
    if not (0.0 < q < 1.0):
        raise ArithmeticError(f"q iteration left (0, 1): q={q}")
    return q


def rounding_allowance(norm_t: float, b_t: float, xi: int, row_nnz: int) -> float:
    """Floating-point allowance per unit seed norm at time t.

    Heuristic model: orthogonalization, the small exponential and the
    basis recombination each contribute O(u) relative errors that are
    amplified by at most exp(t max(b, 0)).
    """
    if norm_t == 0:
        return 0.0
    return 16 * _U * (xi + row_nnz + 1) * (1 + norm_t) * math.exp(max(b_t, 0.0))


def _log_wang(xi: int, norm_t: float, bt: SpectralBounds) -> tuple[float, float, float, float]:
    m, nu = solve_nu_m(bt)
    q = optimize_q(xi, nu, m)
    # both readings of the exponent sign are covered: exp(-a) and exp(b)
    shift = max(-bt.a, bt.b)
    logv = (math.log(WANG_CONSTANT) + math.log(norm_t) + (xi - 1) * math.log(q) - math.log1p(-q)
            + shift + (1.0 / (2.0 * nu)) * (1.0 / q - q))
    if not math.isfinite(logv):
        raise ArithmeticError("non-finite bound")
    return logv, m, nu, q


def _log_saad(xi: int, norm_t: float) -> float:
    return math.log(2.0) + xi * math.log(norm_t) + norm_t - math.lgamma(xi + 1)


def epsilon_norm(C, xi: int, t: float = 1.0, bounds: SpectralBounds | None = None,
                 norm: float | None = None, dim: int | None = None) -> ErrorCertificate:
    """Certificate for Krylov dimension xi at time t.

    ``C`` may be a SparseMatrix or an OperatorInfo; ``bounds``, ``norm``
    and ``dim`` override the values derived from it (used for augmented
    matrices, which are never assembled).
    """
    info = _info(C)
    bounds = info.bounds if bounds is None else bounds
    norm = info.norm if norm is None else norm
    n = info.n if dim is None else dim
    row_nnz = info.max_row_nnz + 1
    if xi < 1:
        raise ValueError("xi must be >= 1")
    t = float(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    bt = bounds.scaled(t)
    norm_t = norm * t
    rounding = rounding_allowance(norm_t, bt.b, xi, row_nnz)
    kw = {}
    if norm_t == 0:
        method, trunc = "zero", 0.0
    elif xi >= n:
        method, trunc = "full_space", 0.0
    else:
        candidates = [(_log_saad(xi, norm_t), "saad_fallback", {})]
        if xi >= 2:
            try:
                lw, m, nu, q = _log_wang(xi, norm_t, bt)
                candidates.append((lw, "field_of_values", dict(m=m, nu=nu, q=q)))
            except (ArithmeticError, ValueError, OverflowError) as exc:
                log.debug("field-of-values bound unavailable (%s); using Saad's bound", exc)
        logv, method, kw = min(candidates, key=lambda c: c[0])
        trunc = math.exp(min(logv, 700.0))
    total = trunc + rounding
    eps = total / t if t > 0 else 0.0
    return ErrorCertificate(eps, bounds, xi, t, method, norm, trunc, rounding, **kw)


@dataclass(frozen=True)
class DimensionChoice:
    xi: int
    certificate: ErrorCertificate
    met: bool


def choose_dimension(C, target_eps: float, t_horizon: float, xi_cap: int = 200,
                     bounds: SpectralBounds | None = None, norm: float | None = None,
                     dim: int | None = None) -> DimensionChoice:
    """Smallest xi with certified error eps_norm * t_horizon <= target_eps.

    Search doubles xi and then bisects.  If the cap (clipped to n) is
    reached without meeting the target, the cap is returned with
    ``met = False``; the certificate is still a valid bound.
    """
    if target_eps <= 0:
        raise ValueError("target_eps must be positive")
    info = C if isinstance(C, OperatorInfo) else OperatorInfo(C)
    n = info.n if dim is None else dim
    cap = max(1, min(int(xi_cap), n))

    def cert(x):
        return epsilon_norm(info, x, t_horizon, bounds, norm, dim)

    def ok(c):
        return c.eps_norm * t_horizon <= target_eps

    lo, hi = 0, None
    x = 1
    while True:
        c = cert(x)
        if ok(c):
            hi = x
            break
        lo = x
        if x >= cap:
            return DimensionChoice(cap, c, False)
        x = min(2 * x, cap)
    best = c
    while hi - lo > 1:
        mid = (lo + hi) // 2
        cm = cert(mid)
        if ok(cm):
            hi, best = mid, cm
        else:
            lo = mid
    return DimensionChoice(hi, best, True)
