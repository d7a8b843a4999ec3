"""Zonotopes, interval vectors and interval matrices.

A zonotope is stored as a center ``c`` of shape (n,) and a generator
matrix ``G`` of shape (n, p) holding one generator per column.  All-zero
generators are kept so generator indices stay stable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _vec(x, name="vector") -> np.ndarray:
    v = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} entries must be finite")
    return v


@dataclass(frozen=True, eq=False)
class Zonotope:
    center: np.ndarray
    generators: np.ndarray

    def __init__(self, center, generators=None):
        c = _vec(center, "center")
        n = c.shape[0]
        if generators is None:
            G = np.zeros((n, 0))
        else:
            G = np.array(generators, dtype=float)
            if G.ndim == 1:
                G = G.reshape(n, -1) if G.size else np.zeros((n, 0))
            if G.shape[0] != n:
                raise ValueError(f"generators have dimension {G.shape[0]}, center has {n}")
            if not np.all(np.isfinite(G)):
                raise ValueError("generator entries must be finite")
        c.flags.writeable = False
        G.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @classmethod
    def from_generator_list(cls, center, gens) -> "Zonotope":
        c = _vec(center)
        G = np.column_stack([_vec(g) for g in gens]) if len(gens) else np.zeros((c.size, 0))
        return cls(c, G)

    @classmethod
    def box(cls, center, radii) -> "Zonotope":
        """Axis-aligned box with one generator per dimension."""
        return cls(center, np.diag(_vec(radii)))

    @classmethod
    def point(cls, x) -> "Zonotope":
        return cls(x)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def num_generators(self) -> int:
        return self.generators.shape[1]

    @property
    def order(self) -> float:
        return self.num_generators / self.dim if self.dim else 0.0

    def generator_list(self) -> list[np.ndarray]:
        return [self.generators[:, i].copy() for i in range(self.num_generators)]

    def radius(self) -> np.ndarray:
        """Half-widths of the interval hull."""
        return np.abs(self.generators).sum(axis=1)

    def __add__(self, other):
        if isinstance(other, Zonotope):
            return minkowski_sum(self, other)
        if isinstance(other, IntervalVector):
            return minkowski_sum(self, interval_to_zonotope(other))
        return Zonotope(self.center + _vec(other), self.generators)

    def __rmatmul__(self, M):
        return linear_map(M, self)

    def __repr__(self) -> str:
        return f"Zonotope(dim={self.dim}, generators={self.num_generators})"


@dataclass(frozen=True, eq=False)
class IntervalVector:
    inf: np.ndarray
    sup: np.ndarray

    def __init__(self, inf, sup=None):
        lo = _vec(inf, "inf")
        hi = lo.copy() if sup is None else _vec(sup, "sup")
        if lo.shape != hi.shape:
            raise ValueError("inf and sup differ in length")
        if np.any(lo > hi):
            raise ValueError("interval with inf > sup")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "inf", lo)
        object.__setattr__(self, "sup", hi)

    @classmethod
    def symmetric(cls, radius) -> "IntervalVector":
        r = _vec(radius)
        if np.any(r < 0):
            raise ValueError("negative radius")
        return cls(-r, r)

    @classmethod
    def from_center_radius(cls, center, radius) -> "IntervalVector":
        c, r = _vec(center), _vec(radius)
        return cls(c - r, c + r)

    @classmethod
    def zeros(cls, n: int) -> "IntervalVector":
        return cls(np.zeros(n), np.zeros(n))

    @property
    def dim(self) -> int:
        return self.inf.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.inf + self.sup)

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * (self.sup - self.inf)

    def __add__(self, other: "IntervalVector") -> "IntervalVector":
        return IntervalVector(self.inf + other.inf, self.sup + other.sup)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _vec(x)
        return bool(np.all(x >= self.inf - tol) and np.all(x <= self.sup + tol))

    def __repr__(self) -> str:
        return f"IntervalVector(dim={self.dim})"


@dataclass(frozen=True, eq=False)
class IntervalMatrix:
    """The set M + [-S, S] with S >= 0."""

    center: np.ndarray
    radius: np.ndarray

    def __init__(self, center, radius=None):
        M = np.array(center, dtype=float)
        S = np.zeros_like(M) if radius is None else np.array(radius, dtype=float)
        if M.shape != S.shape or M.ndim != 2:
            raise ValueError("center and radius must be equal-shape matrices")
        if np.any(S < 0):
            raise ValueError("interval matrix radius must be nonnegative")
        object.__setattr__(self, "center", M)
        object.__setattr__(self, "radius", S)

    @property
    def shape(self):
        return self.center.shape

    def times_vector(self, x) -> IntervalVector:
        x = _vec(x)
        return IntervalVector.from_center_radius(self.center @ x, self.radius @ np.abs(x))


def _check_dims(Z1: Zonotope, Z2: Zonotope):
    if Z1.dim != Z2.dim:
        raise ValueError(f"dimension mismatch: {Z1.dim} vs {Z2.dim}")


def minkowski_sum(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    _check_dims(Z1, Z2)
    return Zonotope(Z1.center + Z2.center, np.hstack([Z1.generators, Z2.generators]))


def linear_map(M, Z: Zonotope) -> Zonotope:
    M = M.toarray() if hasattr(M, "toarray") else np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] != Z.dim:
        raise ValueError(f"dimension mismatch: map {M.shape}, zonotope dimension {Z.dim}")
    return Zonotope(M @ Z.center, M @ Z.generators)


def _pad(G: np.ndarray, p: int) -> np.ndarray:
    if G.shape[1] == p:
        return G
    return np.hstack([G, np.zeros((G.shape[0], p - G.shape[1]))])


def convex_hull_enclosure(Z1: Zonotope, Z2: Zonotope) -> Zonotope:
    """Zonotope enclosing conv(Z1 u Z2); shorter generator list is zero-padded.

    Generators are ordered as (g+h)/2, (c-d)/2, (g-h)/2.
    """
    _check_dims(Z1, Z2)
    p = max(Z1.num_generators, Z2.num_generators)
    G, H = _pad(Z1.generators, p), _pad(Z2.generators, p)
    c, d = Z1.center, Z2.center
    gens = np.hstack([0.5 * (G + H), (0.5 * (c - d))[:, None], 0.5 * (G - H)])
    return Zonotope(0.5 * (c + d), gens)


def interval_matrix_map(IM: IntervalMatrix, Z: Zonotope) -> Zonotope:
    """Enclosure of {N z : N in IM, z in Z}.

    Maps by the center matrix and appends n axis generators whose i-th
    half-width is row i of the radius matrix applied to |c| + sum |g|.
    """
    M, S = IM.center, IM.radius
    if M.shape[1] != Z.dim:
        raise ValueError(f"dimension mismatch: interval matrix {M.shape}, zonotope dimension {Z.dim}")
    s = S @ (np.abs(Z.center) + np.abs(Z.generators).sum(axis=1))
    return Zonotope(M @ Z.center, np.hstack([M @ Z.generators, np.diag(s)]))


def box_enclosure(Z: Zonotope) -> Zonotope:
    """Axis-aligned enclosure with exactly n diagonal generators."""
    return Zonotope(Z.center, np.diag(Z.radius()))


def interval_hull(Z: Zonotope) -> IntervalVector:
    r = Z.radius()
    return IntervalVector(Z.center - r, Z.center + r)


def interval_to_zonotope(iv: IntervalVector) -> Zonotope:
    """Midpoint center and one axis generator per nonzero-radius dimension."""
    r = iv.radius
    idx = np.flatnonzero(r > 0)
    G = np.zeros((iv.dim, idx.size))
    G[idx, np.arange(idx.size)] = r[idx]
    return Zonotope(iv.center, G)


def add_box(Z: Zonotope, radius) -> Zonotope:
    """Z plus the origin-centered box of given half-widths as n diagonal generators."""
    return Zonotope(Z.center, np.hstack([Z.generators, np.diag(_vec(radius))]))


def support(Z: Zonotope, direction) -> float:
    d = _vec(direction)
    if d.shape[0] != Z.dim:
        raise ValueError("direction dimension mismatch")
    return float(d @ Z.center + np.abs(d @ Z.generators).sum())


def support_many(Z: Zonotope, D: np.ndarray) -> np.ndarray:
    """Support values for each row of D."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    return D @ Z.center + np.abs(D @ Z.generators).sum(axis=1)


def _lp_residual(G: np.ndarray, r: np.ndarray) -> float:
    """min over beta in [-1,1]^p of ||G beta - r||_inf."""
    from scipy.optimize import linprog

    n, p = G.shape
    # variables: beta (p), s (1); minimize s
    cost = np.zeros(p + 1)
    cost[-1] = 1.0
    ones = np.ones((n, 1))
    A_ub = np.vstack([np.hstack([G, -ones]), np.hstack([-G, -ones])])
    b_ub = np.concatenate([r, -r])
    bounds = [(-1.0, 1.0)] * p + [(0.0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"containment LP failed: {res.message}")
    return float(res.x[-1])


def contains_points(Z: Zonotope, X, tol: float = 1e-9) -> np.ndarray:
    """Membership of each column of X (shape (n, m)).

    A point x is accepted when some beta in [-1,1]^p gives
    |c + G beta - x| <= tol * max(1, |x|_inf) componentwise.  Cheap
    rejection by the interval hull and cheap acceptance by a minimum-norm
    solution are tried before the linear program.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != Z.dim:
        raise ValueError(f"dimension mismatch: point {X.shape[0]}, zonotope {Z.dim}")
    m = X.shape[1]
    R = X - Z.center[:, None]
    scale = tol * np.maximum(1.0, np.abs(X).max(axis=0) if Z.dim else 1.0)
    G = Z.generators
    out = np.zeros(m, dtype=bool)
    outside = np.any(np.abs(R) > Z.radius()[:, None] + scale, axis=0)
    pending = np.flatnonzero(~outside)
    if pending.size == 0:
        return out
    if G.shape[1] == 0:
        out[pending] = np.all(np.abs(R[:, pending]) <= scale[pending], axis=0)
        return out
    B, *_ = np.linalg.lstsq(G, R[:, pending], rcond=None)
    resid = np.abs(G @ B - R[:, pending]).max(axis=0)
    fast = (np.abs(B).max(axis=0) <= 1.0) & (resid <= scale[pending])
    out[pending[fast]] = True
    for j in pending[~fast]:
        out[j] = _lp_residual(G, R[:, j]) <= scale[j]
    return out


def contains_point(Z: Zonotope, x, tol: float = 1e-9) -> bool:
    x = _vec(x)
    if x.shape[0] != Z.dim:
        raise ValueError(f"dimension mismatch: point {x.shape[0]}, zonotope {Z.dim}")
    return bool(contains_points(Z, x[:, None], tol)[0])


def project(Z: Zonotope, dims) -> Zonotope:
    dims = list(dims)
    return Zonotope(Z.center[dims], Z.generators[dims, :])


def polygon_2d(Z: Zonotope) -> np.ndarray:
    """Vertices (counter-clockwise) of a 2-D zonotope."""
    if Z.dim != 2:
        raise ValueError("polygon_2d expects a 2-D zonotope")
    G = Z.generators[:, np.abs(Z.generators).sum(axis=0) > 0]
    if G.shape[1] == 0:
        return Z.center[None, :].copy()
    # orient every generator into the upper half plane
    flip = (G[1] < 0) | ((G[1] == 0) & (G[0] < 0))
    G = np.where(flip, -G, G)
    G = G[:, np.argsort(np.arctan2(G[1], G[0]), kind="stable")]
    start = Z.center - G.sum(axis=1)
    lower = start + 2 * np.cumsum(G, axis=1).T
    upper = lower[-1] - 2 * np.cumsum(G, axis=1).T
    verts = np.vstack([start, lower[:-1], lower[-1:], upper[:-1]])
    return verts


def _fmt(v) -> str:
    return " ".join(repr(float(x)) for x in v)


def zonotope_to_text(Z: Zonotope) -> str:
    lines = [f"zonotope {Z.dim} {Z.num_generators}", _fmt(Z.center)]
    lines += [_fmt(Z.generators[:, i]) for i in range(Z.num_generators)]
    return "\n".join(lines) + "\n"


def interval_to_text(iv: IntervalVector) -> str:
    return f"interval {iv.dim}\n{_fmt(iv.inf)}\n{_fmt(iv.sup)}\n"


def from_text(text: str):
    """Parse the output of zonotope_to_text or interval_to_text."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    head = lines[0].split()
    rows = [np.array([float(t) for t in ln.split()]) for ln in lines[1:]]
    if head[0] == "zonotope":
        n, p = int(head[1]), int(head[2])
        if len(rows) != p + 1 or any(r.size != n for r in rows):
            raise ValueError("malformed zonotope text")
        G = np.column_stack(rows[1:]) if p else np.zeros((n, 0))
        return Zonotope(rows[0], G)
    if head[0] == "interval":
        if len(rows) != 2:
            raise ValueError("malformed interval text")
        return IntervalVector(rows[0], rows[1])
    raise ValueError(f"unknown set kind {head[0]!r}")
