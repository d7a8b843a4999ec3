"""Selection rules for the Krylov dimension and the Taylor order."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EtaInfeasibleError

_U = np.finfo(float).eps / 2


@dataclass(frozen=True)
class XiPolicy:
    """Krylov dimension: smallest xi whose certificate meets ``target``.

    ``target`` bounds the error per unit seed norm over one time step.
    ``fixed`` overrides the search (clipped to the system dimension).
    """

    target: float = 1e-12
    cap: int = 200
    fixed: int | None = None
    tol: float = 1e-14


@dataclass(frozen=True)
class EtaPolicy:
    """Taylor order for the correction and input terms.

    The order is the smallest eta with eps = x / (eta + 2) < ``eps_max``
    and remainder Phi <= ``remainder_tol``, where x = ||H||_inf * delta.
    """

    eps_max: float = 0.5
    remainder_tol: float = 1e-16
    cap: int = 64


@dataclass(frozen=True)
class EtaChoice:
    eta: int
    eps: float
    phi: float
    met: bool


def remainder_phi(x: float, eta: int) -> float:
    """x^(eta+1) / (eta+1)! / (1 - x/(eta+2)), the Taylor tail bound."""
    eps = x / (eta + 2)
    if eps >= 1:
        return math.inf
    if x == 0:
        return 0.0
    return math.exp((eta + 1) * math.log(x) - math.lgamma(eta + 2)) / (1 - eps)


def rounding_floor(x: float) -> float:
    """Allowance for rounding in exponentials of a matrix with ||H|| delta = x."""
    if x == 0:
        return 0.0
    return 16 * _U * math.exp(x)


def choose_eta(x: float, policy: EtaPolicy = EtaPolicy()) -> EtaChoice:
    """Smallest admissible order for x = ||H||_inf * delta."""
    if x < 0 or not math.isfinite(x):
        raise ValueError("x must be finite and nonnegative")
    first = None
    for eta in range(1, policy.cap + 1):
        eps = x / (eta + 2)
        if eps >= policy.eps_max:
            continue
        phi = remainder_phi(x, eta)
        if first is None:
            first = (eta, eps, phi)
        if phi <= policy.remainder_tol:
            return EtaChoice(eta, eps, phi, True)
    if first is None:
        raise EtaInfeasibleError(
            f"no Taylor order <= {policy.cap} gives ||H|| delta / (eta + 2) < {policy.eps_max} "
            f"(||H|| delta = {x:.3g}); reduce the time step")
    eta = policy.cap
    eps = x / (eta + 2)
    return EtaChoice(eta, eps, remainder_phi(x, eta), False)


def choose_eta_many(x: np.ndarray, policy: EtaPolicy = EtaPolicy()) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``choose_eta``: orders and remainder bounds (plus rounding floor) for an array of x."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("x must be finite and nonnegative")
    eta = np.arange(1, policy.cap + 1)[:, None]
    eps = x[None, :] / (eta + 2)
    with np.errstate(divide="ignore"):
        logx = np.log(x)[None, :]
    lg = np.array([math.lgamma(e + 2) for e in range(1, policy.cap + 1)])[:, None]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        phi = np.where(x[None, :] == 0, 0.0, np.exp((eta + 1) * logx - lg) / (1 - eps))
    phi = np.where(eps >= 1, np.inf, phi)
    admissible = eps < policy.eps_max
    if not np.all(admissible.any(axis=0)):
        bad = float(x[~admissible.any(axis=0)].max())
        raise EtaInfeasibleError(
            f"no Taylor order <= {policy.cap} gives ||H|| delta / (eta + 2) < {policy.eps_max} "
            f"(||H|| delta = {bad:.3g}); reduce the time step")
    good = admissible & (phi <= policy.remainder_tol)
    idx = np.where(good.any(axis=0), good.argmax(axis=0), policy.cap - 1)
    cols = np.arange(x.size)
    floor = np.where(x == 0, 0.0, 16 * _U * np.exp(x))
    return idx + 1, phi[idx, cols] + floor
