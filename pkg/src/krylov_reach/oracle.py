"""Dense reference computations and trajectory simulation.

Nothing here calls the Krylov, homogeneous or input modules: the matrix
exponential is a separate Taylor scaling-and-squaring routine and the set
arithmetic of ``dense_reach`` works on raw arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .sets import Zonotope

SIZE_CAP = 1000
_U = np.finfo(float).eps / 2


def _dense(A) -> np.ndarray:
    if hasattr(A, "toarray"):
        A = A.toarray()
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    return A


def _taylor_degree(theta: float) -> int:
    """Smallest m with theta^(m+1)/(m+1)! <= u/8 (relative truncation)."""
    m, term = 0, 1.0
    while True:
        m += 1
        term *= theta / m
        if term * theta / (m + 1) <= _U / 8:
            return m


def _ps_polynomial(X: np.ndarray, m: int) -> np.ndarray:
    """sum_{k<=m} X^k / k! by the Paterson-Stockmeyer scheme."""
    n = X.shape[0]
    c = [1.0 / math.factorial(k) for k in range(m + 1)]
    s = max(1, int(math.isqrt(m)))
    pw = [np.eye(n), X]
    for _ in range(2, s + 1):
        pw.append(pw[-1] @ X)
    Xs = pw[s]
    r = m // s
    P = np.zeros((n, n))
    for j in range(r, -1, -1):
        B = np.zeros((n, n))
        for i in range(s):
            k = j * s + i
            if k <= m:
                B += c[k] * pw[i]
        P = B if j == r else P @ Xs + B
    return P


def dense_expm(A, t: float = 1.0, cap: int = SIZE_CAP) -> np.ndarray:
    """exp(A t) by scaling, a truncated Taylor series and squaring."""
    A = _dense(A)
    n = A.shape[0]
    if n > cap:
        raise ValueError(f"dimension {n} exceeds oracle cap {cap}")
    X = A * float(t)
    nrm = float(np.abs(X).sum(axis=0).max()) if n else 0.0
    if nrm == 0:
        return np.eye(n)
    s = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    X = X / 2.0 ** s
    E = _ps_polynomial(X, _taylor_degree(min(nrm, 0.5)))
    for _ in range(s):
        E = E @ E
    return E


def _tail(x: float, eta: int) -> float:
    eps = x / (eta + 2)
    if eps >= 1:
        return math.inf
    if x == 0:
        return 0.0
    return math.exp((eta + 1) * math.log(x) - math.lgamma(eta + 2)) / (1 - eps)


def _order(x: float, eps_max: float, tol: float, cap: int) -> int:
    feasible = None
    for eta in range(1, cap + 1):
        if x / (eta + 2) >= eps_max:
            continue
        feasible = eta
        if _tail(x, eta) <= tol:
            return eta
    if feasible is None:
        raise ValueError("no admissible Taylor order; reduce the time step")
    return cap


def _lemma_coeff(i: int) -> float:
    return i ** (-i / (i - 1)) - i ** (-1 / (i - 1))


@dataclass(frozen=True)
class DenseResult:
    time_point_sets: tuple
    time_interval_sets: tuple
    times: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def dense_reach(A, X0: Zonotope, U: Zonotope, cfg, B=None) -> DenseResult:
    """The wrapping-free loop with dense exponentials and no Krylov errors."""
    A = _dense(A)
    n = A.shape[0]
    if n > SIZE_CAP:
        raise ValueError(f"dimension {n} exceeds oracle cap {SIZE_CAP}")
    uc, UG = np.asarray(U.center, float), np.asarray(U.generators, float)
    if B is not None:
        Bd = np.asarray(B.toarray() if hasattr(B, "toarray") else B, float)
        uc, UG = Bd @ uc, Bd @ UG
    delta = float(cfg.delta)
    N = cfg.steps
    eta_pol = cfg.eta_policy
    E = dense_expm(A, delta)
    Ad = A * delta
    rowabs = np.abs(A).sum(axis=1)

    def correction(X):
        # per column: sum_i [l_i, 0] (A delta)^i x / i! plus a Taylor tail box
        x = float(rowabs.max()) * delta
        eta = _order(x, eta_pol.eps_max, eta_pol.remainder_tol, eta_pol.cap)
        phi = _tail(x, eta) + 16 * _U * math.exp(x)
        cen = np.zeros_like(X)
        rad = np.zeros_like(X)
        Z = Ad @ X
        for i in range(2, eta + 1):
            Z = Ad @ Z / i
            li = _lemma_coeff(i)
            cen += 0.5 * li * Z
            rad += 0.5 * abs(li) * np.abs(Z)
        rad += phi * np.abs(X).max(axis=0)[None, :]
        return cen, rad

    def interval_set(c, G):
        mc, mG = E @ c, E @ G
        cen, rad = correction(np.column_stack([c, G]))
        hull_c = 0.5 * (c + mc)
        hull_G = np.hstack([0.5 * (G + mG), (0.5 * (c - mc))[:, None], 0.5 * (G - mG)])
        nrad = rad[:, 0] + (np.abs(cen[:, 1:]) + rad[:, 1:]).sum(axis=1)
        return hull_c + cen[:, 0], hull_G, nrad

    # input solution for one step
    W = np.column_stack([uc, UG])
    m = W.shape[1]
    if cfg.input_mode == "varying":
        rem = np.zeros(n)
        Tcols = []
        for j in range(m):
            u = W[:, j]
            if not np.any(u):
                Tcols.append([])
                continue
            x = float(max(np.max(rowabs + np.abs(u)), 0.0)) * delta
            eta = _order(x, eta_pol.eps_max, eta_pol.remainder_tol, eta_pol.cap)
            terms = []
            v = u * delta
            terms.append(v.copy())
            for jj in range(2, eta + 1):
                v = Ad @ v / jj
                terms.append(v.copy())
            Tcols.append(terms)
            rem += _tail(x, eta) + 16 * _U * math.exp(x)
        pc = np.sum(Tcols[0], axis=0) if Tcols[0] else np.zeros(n)
        q = m - 1
        emax = max((len(t) for t in Tcols[1:]), default=0)
        pG = np.zeros((n, q * emax))
        for i in range(q):
            for jj, term in enumerate(Tcols[i + 1]):
                pG[:, jj * q + i] = term
        b_c, b_G, b_err = pc, pG, rem
    else:
        Aug = np.zeros((n + m, n + m))
        Aug[:n, :n] = A
        Aug[:n, n:] = W
        Ea = dense_expm(Aug, delta)
        P = Ea[:n, n:]
        b_c, b_G, b_err = P[:, 0], P[:, 1:], np.zeros(n)

    hc, hG = np.asarray(X0.center, float), np.asarray(X0.generators, float)
    p_c = b_c.copy()
    p_r = np.abs(b_G).sum(axis=1) + b_err
    points, intervals = [], []
    for k in range(N):
        if k > 0:
            b_c, b_G = E @ b_c, E @ b_G
            b_err = np.abs(E) @ b_err
            p_c = p_c + b_c
            p_r = p_r + np.abs(b_G).sum(axis=1) + b_err
        ic, iG, nrad = interval_set(hc, hG)
        intervals.append(Zonotope(ic + p_c, np.hstack([iG, np.diag(nrad + p_r)])))
        hc, hG = E @ hc, E @ hG
        points.append(Zonotope(hc + p_c, np.hstack([hG, np.diag(p_r)])))
    return DenseResult(tuple(points), tuple(intervals), np.arange(1, N + 1) * delta,
                       {"steps": N, "n": n})


# ---------------------------------------------------------------- simulation

@dataclass(frozen=True)
class PiecewiseConstantSignal:
    """Value ``values[i]`` on [breakpoints[i], breakpoints[i+1])."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, float)
        vals = np.atleast_2d(np.asarray(self.values, float))
        if bp.ndim != 1 or bp.size != vals.shape[0] + 1:
            raise ValueError("need one more breakpoint than values")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    def __call__(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        i = min(max(i, 0), self.values.shape[0] - 1)
        return self.values[i]


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    input_signal: PiecewiseConstantSignal | None = None

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def sample_zonotope(Z: Zonotope, rng: np.random.Generator, size: int, vertex_fraction: float = 0.5) -> np.ndarray:
    """Points c + G beta, beta uniform in [-1, 1]^q or (a fraction) a random vertex."""
    q = Z.num_generators
    beta = rng.uniform(-1.0, 1.0, size=(size, q))
    vert = rng.random(size) < vertex_fraction
    beta[vert] = np.sign(beta[vert])
    return Z.center[None, :] + beta @ Z.generators.T


def random_signal(U: Zonotope, t_f: float, resolution: float, rng: np.random.Generator,
                  vertex_fraction: float = 0.5) -> PiecewiseConstantSignal:
    k = int(math.ceil(t_f / resolution - 1e-9))
    bp = np.arange(k + 1) * resolution
    bp[-1] = max(bp[-1], t_f)
    return PiecewiseConstantSignal(bp, sample_zonotope(U, rng, k, vertex_fraction))


def _segments(breaks, t_f):
    pts = sorted({0.0, float(t_f), *[float(b) for b in breaks if 0 < b < t_f]})
    return list(zip(pts[:-1], pts[1:]))


def simulate(A, B, x0, input_signal: PiecewiseConstantSignal | None, t_f: float, tol: float = 1e-10,
             t_eval=None) -> Trajectory:
    """Integrate x' = A x + B u(t) with RK45, restarting at every input breakpoint."""
    return simulate_many(A, B, np.asarray(x0, float)[None, :], [input_signal], t_f, tol, t_eval)[0]


def simulate_many(A, B, X0: np.ndarray, signals, t_f: float, tol: float = 1e-10, t_eval=None) -> list:
    """Several trajectories integrated as one stacked system.

    All signals must share their breakpoints (checked); the stacked
    state is integrated segment by segment so no step straddles a
    discontinuity.
    """
    As = A.to_scipy() if hasattr(A, "to_scipy") else A
    X0 = np.atleast_2d(np.asarray(X0, float))
    T, n = X0.shape
    Bd = None if B is None else (B.toarray() if hasattr(B, "toarray") else np.asarray(B, float))
    sig0 = signals[0]
    breaks = [] if sig0 is None else list(sig0.breakpoints)
    for s in signals[1:]:
        if (s is None) != (sig0 is None) or (s is not None and not np.array_equal(s.breakpoints, sig0.breakpoints)):
            raise ValueError("signals must share breakpoints")
    if sig0 is not None and (sig0.breakpoints[0] > 0 or sig0.breakpoints[-1] < t_f * (1 - 1e-12)):
        raise ValueError("input signal must cover [0, t_f]")
    te = np.array(sorted({*(np.asarray(t_eval, float) if t_eval is not None else []), 0.0, float(t_f)}))
    if te[0] < 0 or te[-1] > t_f:
        raise ValueError("evaluation times must lie in [0, t_f]")
    out = {0.0: X0.copy()}
    x = X0.reshape(-1).copy()  # trajectory j occupies x[j*n:(j+1)*n]
    for a, b in _segments(breaks, t_f):
        if sig0 is None:
            drive = np.zeros((T, n))
        else:
            mid = 0.5 * (a + b)
            Uv = np.array([s(mid) for s in signals])
            drive = Uv @ Bd.T if Bd is not None else Uv

        def rhs(_t, y, drive=drive):
            Y = y.reshape(T, n)
            return (As @ Y.T).T.reshape(-1) + drive.reshape(-1)

        inside = np.union1d(te[(te > a) & (te < b)], [b])
        sol = solve_ivp(rhs, (a, b), x, method="RK45", rtol=tol, atol=tol * 1e-3, t_eval=inside)
        if not sol.success:
            raise ArithmeticError(f"integration failed on [{a}, {b}]: {sol.message}")
        for i, tt in enumerate(sol.t):
            if tt in te:
                out[float(tt)] = sol.y[:, i].reshape(T, n)
        x = sol.y[:, -1].copy()
    times = np.array(sorted(out))
    trajs = []
    for j in range(T):
        states = np.array([out[t][j] for t in times])
        trajs.append(Trajectory(times, states, signals[j]))
    return trajs


def affine_steps(A, B, x0, signal: PiecewiseConstantSignal | None, t_f: float, times) -> np.ndarray:
    """States at ``times`` by exact exponential stepping over constant-input pieces."""
    A = _dense(A)
    n = A.shape[0]
    Bd = None if B is None else (B.toarray() if hasattr(B, "toarray") else np.asarray(B, float))
    breaks = [] if signal is None else list(signal.breakpoints)
    grid = sorted({0.0, float(t_f), *[float(t) for t in times], *[b for b in breaks if 0 < b < t_f]})
    x = np.asarray(x0, float).copy()
    want = {float(t) for t in times}
    res = {}
    if 0.0 in want:
        res[0.0] = x.copy()
    for a, b in zip(grid[:-1], grid[1:]):
        u = np.zeros(n) if signal is None else signal(0.5 * (a + b))
        if Bd is not None and signal is not None:
            u = Bd @ u
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = A
        M[:n, n] = u
        Ea = dense_expm(M, b - a)
        x = Ea[:n, :n] @ x + Ea[:n, n]
        if b in want:
            res[b] = x.copy()
    return np.array([res[float(t)] for t in times])
