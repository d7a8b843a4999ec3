"""Wrapping-free reachability loop for x' = A x + u, u in U."""
from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError
from .homogeneous import KrylovOperator, hom_point_set, interval_propagate, time_interval_set
from .input_solution import const_input_parts, varying_input_parts
from .policy import EtaPolicy, XiPolicy
from .sets import IntervalVector, Zonotope, contains_point, interval_hull, linear_map
from .sparse_linalg import as_sparse

log = logging.getLogger(__name__)

INPUT_MODES = ("constant", "varying")
ERROR_CHANNELS = ("generators", "interval")


@dataclass(frozen=True)
class ReachConfig:
    delta: float
    t_f: float
    input_mode: str = "varying"
    error_channel: str = "interval"
    xi_policy: XiPolicy = XiPolicy()
    eta_policy: EtaPolicy = EtaPolicy()
    strict_soundness: bool = False

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError("delta must be positive and finite")
        if not (self.t_f >= self.delta * (1 - 1e-12)):
            raise ValueError("t_f must be >= delta")
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}")
        if self.error_channel not in ERROR_CHANNELS:
            raise ValueError(f"error_channel must be one of {ERROR_CHANNELS}")

    @property
    def steps(self) -> int:
        """ceil(t_f / delta), ignoring a relative excess below 1e-9."""
        r = self.t_f / self.delta
        k = math.floor(r)
        return max(1, k if r - k <= 1e-9 * r else k + 1)


@dataclass(frozen=True)
class ReachResult:
    """Time-point sets at t_k = k delta and time-interval sets over [t_{k-1}, t_k].

    ``diagnostics`` holds one dict per step plus a "run" entry; wall
    times are kept apart in ``timings`` so two identical runs compare equal
    on everything else.
    """

    time_point_sets: tuple
    time_interval_sets: tuple
    times: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    timings: tuple = ()

    @property
    def steps(self) -> int:
        return len(self.time_interval_sets)


def _merge_box(Z: Zonotope, n_axis: int, center_shift, radius) -> Zonotope:
    """Add a box to a zonotope whose last n_axis generators are already diagonal."""
    G = Z.generators.copy()
    n = Z.dim
    if n_axis:
        G[:, -n:] += np.diag(radius)
    else:
        G = np.hstack([G, np.diag(radius)])
    return Zonotope(Z.center + center_shift, G)


class _Carrier:
    """A zonotope propagated by exp(A delta) plus its separate error interval."""

    def __init__(self, Z: Zonotope, err_radius: np.ndarray):
        self.Z = Z
        self.err = err_radius

    def step(self, op: KrylovOperator, delta: float, cfg: ReachConfig, eta: EtaPolicy | None):
        res = hom_point_set(op, self.Z, delta, eta_policy=eta)
        prop = np.zeros(self.Z.dim)
        if np.any(self.err):
            prop = interval_propagate(op, IntervalVector.symmetric(self.err), delta).radius
        if cfg.error_channel == "interval":
            nxt = _Carrier(res.mapped, prop + res.err.radius)
        else:
            r = prop + res.err.radius
            idx = np.flatnonzero(r > 0)
            G = np.zeros((r.size, idx.size))
            G[idx, np.arange(idx.size)] = r[idx]
            nxt = _Carrier(Zonotope(res.mapped.center, np.hstack([res.mapped.generators, G])),
                           np.zeros(self.Z.dim))
        return nxt, res, prop

    def hull_radius(self) -> np.ndarray:
        return self.Z.radius() + self.err


def _zero_in(U: Zonotope) -> bool:
    if not np.any(U.center):
        return True
    return contains_point(U, np.zeros(U.dim), tol=0.0)


def reach(A, B, X0: Zonotope, U: Zonotope, cfg: ReachConfig) -> ReachResult:
    """Reachable sets of x' = A x + B u over ceil(t_f / delta) steps.

    ``B`` may be None (U already lives in state space).  Krylov errors
    are carried as axis-aligned intervals (``interval`` channel, constant
    set sizes) or appended as generators (``generators`` channel).
    """
    A = as_sparse(A)
    n = A.nrows
    if A.ncols != n:
        raise ValueError("A must be square")
    if X0.dim != n:
        raise ValueError(f"X0 has dimension {X0.dim}, system has {n}")
    if B is not None:
        U = linear_map(B, U)
    if U.dim != n:
        raise ValueError(f"input set has dimension {U.dim}, system has {n}")
    delta, N = float(cfg.delta), cfg.steps
    if not _zero_in(U):
        msg = "0 is not in U; time-interval sets assume inputs may be zero on sub-intervals"
        if cfg.strict_soundness:
            raise CertificateError(msg)
        warnings.warn(msg, stacklevel=2)
    if cfg.input_mode == "constant":
        msg = "constant input mode: time-interval sets are enclosures only under varying-input semantics"
        if cfg.strict_soundness:
            raise CertificateError(msg)
        log.warning(msg)

    op = KrylovOperator(A, cfg.xi_policy, strict=cfg.strict_soundness)
    eta = cfg.eta_policy
    timings = []
    t0 = time.perf_counter()

    # lines 1-4
    h = _Carrier(X0, np.zeros(n))
    h_next, hres, _ = h.step(op, delta, cfg, eta)
    if cfg.input_mode == "varying":
        Zb, berr, ic = varying_input_parts(op, U, delta, eta, strict=cfg.strict_soundness)
    else:
        Zb, berr, ic = const_input_parts(op, U, delta, strict=cfg.strict_soundness)
    b = _Carrier(Zb, berr) if cfg.error_channel == "interval" else _Carrier(_axis(Zb, berr), np.zeros(n))
    p_center = b.Z.center.copy()
    p_radius = b.hull_radius()
    p_err = b.err.copy()  # certificate part of p_radius (interval channel)

    run = {
        "n": n, "steps": N, "delta": delta, "t_f": float(cfg.t_f),
        "horizon_remainder": float(N * delta - cfg.t_f) if N * delta > cfg.t_f else 0.0,
        "input_mode": cfg.input_mode, "error_channel": cfg.error_channel,
        "input_xi": [int(v) for v in ic.xi], "input_eta": [int(v) for v in ic.eta],
        "input_eps_norm": [float(v) for v in ic.eps_norm], "input_methods": list(ic.methods),
        "input_generators": int(Zb.num_generators),
    }
    points, intervals, steps = [], [], []

    tis = time_interval_set(op, h.Z, hres, delta, eta_policy=eta)
    R1 = _merge_box(tis, n, p_center, p_radius + h.err)
    intervals.append(R1)
    points.append(_merge_box(h_next.Z, 0, p_center, p_radius + h_next.err))
    steps.append(_diag(1, hres, h_next, b, tis, R1, p_err + h_next.err, p_err + hres.err.radius))
    timings.append(time.perf_counter() - t0)
    h = h_next

    # lines 5-10
    for k in range(1, N):
        t0 = time.perf_counter()
        h_next, hres, prop = h.step(op, delta, cfg, eta)
        b, _, _ = b.step(op, delta, cfg, None)
        p_center = p_center + b.Z.center
        p_radius = p_radius + b.hull_radius()
        p_err = p_err + b.err
        tis = time_interval_set(op, h.Z, hres, delta, eta_policy=eta)
        # the carried interval over [0, delta]: exp(|A| t) r is monotone in t
        Rk = _merge_box(tis, n, p_center, p_radius + prop)
        intervals.append(Rk)
        points.append(_merge_box(h_next.Z, 0, p_center, p_radius + h_next.err))
        steps.append(_diag(k + 1, hres, h_next, b, tis, Rk, p_err + h_next.err,
                           p_err + prop + hres.err.radius))
        timings.append(time.perf_counter() - t0)
        h = h_next

    times = np.arange(1, N + 1) * delta
    diagnostics = {"run": run, "steps": steps}
    return ReachResult(tuple(points), tuple(intervals), times, diagnostics, tuple(timings))


def _axis(Z: Zonotope, radius: np.ndarray) -> Zonotope:
    idx = np.flatnonzero(radius > 0)
    G = np.zeros((Z.dim, idx.size))
    G[idx, np.arange(idx.size)] = radius[idx]
    return Zonotope(Z.center, np.hstack([Z.generators, G]))


def _diag(k, hres, h, b, tis, R, point_err, interval_err) -> dict:
    d = hres.diagnostics
    return {
        "step": k,
        "xi": d.get("xi", 0),
        "xi_effective_max": d.get("xi_effective_max", 0),
        "eps_norm": float(d.get("eps_norm", 0.0)),
        "method": d.get("method", ""),
        "certificate_met": bool(d.get("certificate_met", True)),
        "breakdowns": d.get("breakdowns", 0),
        "eta_max": d.get("eta_max", 0),
        "carrier_generators": int(h.Z.num_generators),
        "box_carrier_generators": int(b.Z.num_generators),
        "accumulator_generators": int(h.Z.dim),
        "interval_set_generators": int(R.num_generators),
        "err_max": float(h.err.max()) if h.err.size else 0.0,
        "point_err_max": float(point_err.max()) if point_err.size else 0.0,
        "interval_err_max": float(interval_err.max()) if interval_err.size else 0.0,
    }


@dataclass(frozen=True)
class SafetyVerdict:
    safe: bool
    first_violation: int | None
    per_step: tuple


def check_safety(result: ReachResult, unsafe: dict) -> SafetyVerdict:
    """Per step, SAFE iff the interval hull of R_k misses every unsafe range.

    ``unsafe`` maps coordinate index to (lo, hi).  Each monitored
    coordinate is checked on its own, so a step is flagged as soon as one
    coordinate's hull overlaps its range.  Steps are numbered from 1.
    """
    if not result.time_interval_sets:
        return SafetyVerdict(True, None, ())
    n = result.time_interval_sets[0].dim
    idx = np.array(sorted(unsafe), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("monitored coordinate out of range")
    lo = np.array([unsafe[i][0] for i in idx], dtype=float)
    hi = np.array([unsafe[i][1] for i in idx], dtype=float)
    verdicts = []
    first = None
    for k, R in enumerate(result.time_interval_sets, start=1):
        iv = interval_hull(R)
        hit = bool(np.any((iv.sup[idx] >= lo) & (iv.inf[idx] <= hi)))
        verdicts.append(not hit)
        if hit and first is None:
            first = k
    return SafetyVerdict(first is None, first, tuple(verdicts))


__all__ = ["ReachConfig", "ReachResult", "SafetyVerdict", "reach", "check_safety"]
