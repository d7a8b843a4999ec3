"""Set-valued homogeneous solutions exp(At) X computed in Krylov subspaces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError
from .krylov import OperatorInfo, breakdown_bound, epsilon_norm, small_expm
from .krylov._kernel import correction_sums
from .krylov.arnoldi import ArnoldiChunk, _decomposition, iter_arnoldi
from .krylov.certificate import DimensionChoice, ErrorCertificate, choose_dimension
from .policy import EtaPolicy, XiPolicy, choose_eta, choose_eta_many, remainder_phi, rounding_floor
from .sets import IntervalMatrix, IntervalVector, Zonotope, convex_hull_enclosure
from .sparse_linalg import as_sparse, elementwise_abs


_FLUSH = 2.0 ** -500


def correction_coefficient(i: int) -> float:
    """Lower end of the i-th correction interval for delta = 1 (upper end is 0)."""
    return i ** (-i / (i - 1)) - i ** (-1 / (i - 1))


class KrylovOperator:
    """A sparse system matrix with cached certificate data.

    Dimension choices are cached per time value, so repeated steps of
    the same length reuse one certificate.
    """

    def __init__(self, A, xi_policy: XiPolicy = XiPolicy(), strict: bool = False, refine: bool = False):
        self.A = as_sparse(A)
        if self.A.nrows != self.A.ncols:
            raise ValueError("system matrix must be square")
        self.policy = xi_policy
        self.strict = strict
        self.info = OperatorInfo(self.A, refine=refine, strict=strict)
        self._dims: dict[float, DimensionChoice] = {}
        self._abs: KrylovOperator | None = None

    @property
    def n(self) -> int:
        return self.A.nrows

    def dimension(self, t: float) -> DimensionChoice:
        t = float(t)
        if t not in self._dims:
            pol = self.policy
            if pol.fixed is not None:
                xi = max(1, min(int(pol.fixed), self.n))
                cert = epsilon_norm(self.info, xi, t)
                choice = DimensionChoice(xi, cert, cert.eps_norm * t <= pol.target)
            else:
                choice = choose_dimension(self.info, pol.target, t, pol.cap)
            if self.strict and not choice.met:
                raise CertificateError(
                    f"certificate target {pol.target:g} not met with xi={choice.xi} "
                    f"(bound {choice.certificate.eps_norm * t:.3g})")
            self._dims[t] = choice
        return self._dims[t]

    def absolute(self) -> "KrylovOperator":
        """Operator for |A| with the same policy (used for interval propagation)."""
        if self._abs is None:
            self._abs = KrylovOperator(elementwise_abs(self.A), self.policy, self.strict)
        return self._abs


def _as_operator(A, xi_policy: XiPolicy | None) -> KrylovOperator:
    if isinstance(A, KrylovOperator):
        return A
    return KrylovOperator(A, xi_policy or XiPolicy())


@dataclass
class ColumnMaps:
    """Per-column results of mapping seed vectors through exp(At).

    ``mapped[:, j]`` approximates exp(At) x_j and ``err[j]`` bounds the
    2-norm of the approximation error.  When correction terms were
    requested, ``n_center`` and ``n_radius`` describe the interval vector
    ||x_j|| V F e_1 of the correction term for each column.
    """

    mapped: np.ndarray
    err: np.ndarray
    xi: np.ndarray
    breakdown: np.ndarray
    eta: np.ndarray
    n_center: np.ndarray | None = None
    n_radius: np.ndarray | None = None
    decompositions: list | None = None


def _column_error(ch: ArnoldiChunk, cert: ErrorCertificate, t: float, b: float) -> np.ndarray:
    err = np.full(ch.k.shape[0], cert.error)
    if np.any(ch.breakdown):
        post = np.array([breakdown_bound(h, t, b) for h in ch.h_next]) + cert.rounding
        err = np.where(ch.breakdown, np.minimum(err, post), err)
    return ch.beta * err


def _hess_inf_norms(H: np.ndarray) -> np.ndarray:
    return np.abs(H).sum(axis=2).max(axis=1) if H.shape[1] else np.zeros(H.shape[0])


def _correction_terms(ch: ArnoldiChunk, delta: float, eta_policy: EtaPolicy):
    """Interval ||x|| V F e_1 per column, evaluated term by term.

    Each term [l_i, 0] (delta H)^i e_1 / i! is mapped to the full space
    before taking absolute values, which is exact for the center/radius
    form of a scalar interval times a vector.
    """
    pc, xm = ch.H.shape[0], ch.H.shape[1]
    x = _hess_inf_norms(ch.H) * delta
    etas, phis = choose_eta_many(x, eta_policy)
    n = ch.V.shape[2]
    emax = int(etas.max())
    Hd = ch.H * delta
    Y = np.zeros((pc, max(emax - 1, 0), xm))
    y = Hd[:, :, 0].copy()
    for i in range(2, emax + 1):
        y = np.einsum("cij,cj->ci", Hd, y) / i
        Y[:, i - 2, :] = y * (ch.beta * (etas >= i))[:, None]
    li = np.array([correction_coefficient(i) for i in range(2, emax + 1)])
    cen = np.zeros((pc, n))
    rad = np.zeros((pc, n))
    # z_i = beta V y_i mapped one term at a time, then split into center and radius
    correction_sums(Y, ch.V, 0.5 * li, ch.beta * phis, cen, rad)
    return cen, rad, etas


def map_columns(op: KrylovOperator, X: np.ndarray, t: float, eta_policy: EtaPolicy | None = None,
                keep: bool = False) -> ColumnMaps:
    """Map every column of X through exp(At) in its own Krylov subspace.

    Zero columns skip the Arnoldi iteration and map to zero with zero error.
    With ``eta_policy`` the correction terms for the time interval [0, t]
    are computed from the same decompositions.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    mapped = np.zeros((n, p))
    err = np.zeros(p)
    xis = np.zeros(p, dtype=np.int64)
    broke = np.zeros(p, dtype=bool)
    etas = np.zeros(p, dtype=np.int64)
    want_n = eta_policy is not None
    ncen = np.zeros((n, p)) if want_n else None
    nrad = np.zeros((n, p)) if want_n else None
    decs = [None] * p if keep else None
    nz = np.flatnonzero(np.any(X != 0, axis=0))
    if nz.size == 0 or t == 0:
        if t == 0:
            mapped[:] = X
        return ColumnMaps(mapped, err, xis, broke, etas, ncen, nrad, decs)
    choice = op.dimension(t)
    cert = choice.certificate
    b = op.info.bounds.b
    for ch in iter_arnoldi(op.A, choice.xi, seeds=X[:, nz], norms=op.info.norm, tol=op.policy.tol):
        cols = nz[ch.columns]
        E = small_expm(ch.H, t)
        ymat = E[:, :, 0] * ch.beta[:, None]
        Y = ch.project(ymat)
        # drop entries far below the column scale: they decay into subnormals over
        # later steps, which slows every Arnoldi run; the dropped part joins the error
        tiny = np.abs(Y) < _FLUSH * np.abs(Y).max(axis=1, keepdims=True)
        dropped = np.sqrt((np.where(tiny, Y, 0.0) ** 2).sum(axis=1))
        Y[tiny] = 0.0
        mapped[:, cols] = Y.T
        err[cols] = _column_error(ch, cert, t, b) + dropped
        xis[cols] = ch.k
        broke[cols] = ch.breakdown
        if want_n:
            c_, r_, e_ = _correction_terms(ch, t, eta_policy)
            ncen[:, cols] = c_.T
            nrad[:, cols] = r_.T
            etas[cols] = e_
        if keep:
            for j, col in enumerate(cols):
                decs[col] = (_decomposition(ch, j), cert)
    return ColumnMaps(mapped, err, xis, broke, etas, ncen, nrad, decs)


@dataclass
class HomogeneousStepResult:
    """Point-in-time solution: exp(At) Z is inside mapped + err."""

    mapped: Zonotope
    err: IntervalVector
    t: float
    source: Zonotope
    n_center: np.ndarray | None = None
    n_radius: np.ndarray | None = None
    per_generator: list | None = None
    diagnostics: dict = field(default_factory=dict)


def hom_point_single(A, x0, t: float, xi_policy: XiPolicy | None = None) -> tuple[np.ndarray, IntervalVector]:
    """exp(At) x0 enclosed by x_hat + [-1, 1]^n ||x0|| eps_norm t."""
    op = _as_operator(A, xi_policy)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != op.n:
        raise ValueError("dimension mismatch")
    if t < 0:
        raise ValueError("t must be >= 0")
    cm = map_columns(op, x0[:, None], t)
    return cm.mapped[:, 0], IntervalVector.symmetric(np.full(op.n, cm.err[0]))


def hom_point_set(A, Z: Zonotope, t: float, xi_policy: XiPolicy | None = None,
                  eta_policy: EtaPolicy | None = None, keep: bool = False) -> HomogeneousStepResult:
    """Apply the single-state enclosure to the center and every generator.

    The error interval has radius sum_j ||x_j|| eps_j t over the center and
    generators, where eps_j is the certificate (or the a-posteriori bound
    after a happy breakdown) of column j.
    """
    op = _as_operator(A, xi_policy)
    if Z.dim != op.n:
        raise ValueError(f"dimension mismatch: system {op.n}, set {Z.dim}")
    if t < 0:
        raise ValueError("t must be >= 0")
    X = np.column_stack([Z.center, Z.generators])
    cm = map_columns(op, X, t, eta_policy, keep)
    mapped = Zonotope(cm.mapped[:, 0], cm.mapped[:, 1:])
    err = IntervalVector.symmetric(np.full(op.n, float(cm.err.sum())))
    ncen = nrad = None
    if eta_policy is not None:
        ncen = cm.n_center[:, 0].copy()
        nrad = cm.n_radius[:, 0] + (np.abs(cm.n_center[:, 1:]) + cm.n_radius[:, 1:]).sum(axis=1)
    diag = {
        "xi": int(op.dimension(t).xi) if t > 0 and np.any(X) else 0,
        "xi_effective_max": int(cm.xi.max()) if cm.xi.size else 0,
        "breakdowns": int(cm.breakdown.sum()),
        "eta_max": int(cm.eta.max()) if cm.eta.size else 0,
        "arnoldi_runs": int(np.count_nonzero(np.any(X != 0, axis=0))),
    }
    if t > 0 and np.any(X):
        c = op.dimension(t).certificate
        diag.update(eps_norm=c.eps_norm, method=c.method, certificate_met=op.dimension(t).met)
    return HomogeneousStepResult(mapped, err, float(t), Z, ncen, nrad, cm.decompositions, diag)


def absorb_error(result: HomogeneousStepResult, mode: str = "interval"):
    """Fold the Krylov error into the set.

    ``generators`` appends one axis generator per nonzero error radius;
    ``interval`` returns (mapped, err) for separate propagation.
    """
    if mode == "generators":
        r = result.err.radius
        idx = np.flatnonzero(r > 0)
        G = np.zeros((r.size, idx.size))
        G[idx, np.arange(idx.size)] = r[idx]
        return Zonotope(result.mapped.center, np.hstack([result.mapped.generators, G]))
    if mode == "interval":
        return result.mapped, result.err
    raise ValueError(f"unknown error channel {mode!r}")


def interval_propagate(A, iv: IntervalVector, t: float, xi_policy: XiPolicy | None = None) -> IntervalVector:
    """Enclosure of exp(At) iv.

    The midpoint is mapped by the Krylov approximation of exp(At), the
    radius by the approximation of exp(|A|t) applied to the radius, and
    both certificate errors are added.  Negative components of the radius
    approximation are replaced by their absolute values.
    """
    op = _as_operator(A, xi_policy)
    if iv.dim != op.n:
        raise ValueError("dimension mismatch")
    bc, bd = iv.center, iv.radius
    center = np.zeros(op.n)
    rad = np.zeros(op.n)
    if np.any(bc):
        cm = map_columns(op, bc[:, None], t)
        center = cm.mapped[:, 0]
        rad += cm.err[0]
    if np.any(bd):
        cm = map_columns(op.absolute(), bd[:, None], t)
        rad += np.abs(cm.mapped[:, 0]) + cm.err[0]
    return IntervalVector.from_center_radius(center, rad)


def correction_matrix(H, delta: float, eta_policy: EtaPolicy = EtaPolicy()) -> IntervalMatrix:
    """Interval matrix F with exp(Ht) - I - (t/delta)(exp(H delta) - I) in F.

    F = sum_{i=2}^{eta} [l_i delta^i, 0] H^i / i! + [-Phi, Phi], with l_i the
    correction coefficients and Phi the Taylor tail bound (plus a rounding
    allowance) for ||H||_inf delta.
    """
    H = np.asarray(H, dtype=float)
    k = H.shape[0]
    x = float(np.abs(H).sum(axis=1).max()) * delta if k else 0.0
    ch = choose_eta(x, eta_policy)
    cen = np.zeros((k, k))
    rad = np.zeros((k, k))
    Hd = H * delta
    P = Hd.copy()
    for i in range(2, ch.eta + 1):
        P = Hd @ P / i
        li = correction_coefficient(i)
        cen += 0.5 * li * P
        rad += 0.5 * abs(li) * np.abs(P)
    rad += remainder_phi(x, ch.eta) + rounding_floor(x)
    return IntervalMatrix(cen, rad)


def time_interval_set(A, Z: Zonotope, step_result: HomogeneousStepResult, delta: float,
                      strict: bool = False, eta_policy: EtaPolicy = EtaPolicy(),
                      xi_policy: XiPolicy | None = None) -> Zonotope:
    """Enclosure of exp(At) Z over t in [0, delta].

    conv(Z, mapped) plus the correction interval and the point-in-time
    error interval, all axis-aligned terms merged into n diagonal
    generators.  ``strict`` is accepted for interface symmetry; the error
    interval is always added outside the hull, which covers the strict
    reading as well.
    """
    if step_result.source is not Z and not (
            np.array_equal(step_result.source.center, Z.center)
            and np.array_equal(step_result.source.generators, Z.generators)):
        raise ValueError("step result was computed for a different set")
    if abs(step_result.t - delta) > 1e-15 * max(1.0, delta):
        raise ValueError("step result was computed for a different time step")
    res = step_result
    if res.n_center is None:
        res = hom_point_set(A, Z, delta, xi_policy, eta_policy)
    hull = convex_hull_enclosure(Z, res.mapped)
    radius = res.n_radius + res.err.radius
    return Zonotope(hull.center + res.n_center, np.hstack([hull.generators, np.diag(radius)]))
