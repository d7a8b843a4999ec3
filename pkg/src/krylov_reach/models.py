"""Second-order structural models and a synthetic chain generator."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InputError
from .sets import Zonotope
from .sparse_linalg import SparseMatrix, as_sparse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SecondOrderInfo:
    diagonal_mass: bool
    residual: float


def assemble_second_order(M, D, K, return_info: bool = False):
    """State-space form of M q'' + D q' + K q = f with x = (q, q').

    A = [[0, I], [-M^-1 K, -M^-1 D]] and B = [[0], [M^-1]].  A diagonal M
    is inverted exactly; otherwise M is factorized once and the residual
    ||M (M^-1 K) - K||_inf is reported.
    """
    M, D, K = (as_sparse(X).to_scipy() for X in (M, D, K))
    m = M.shape[0]
    for name, X in (("M", M), ("D", D), ("K", K)):
        if X.shape != (m, m):
            raise InputError(f"{name} has shape {X.shape}, expected ({m}, {m})")
    off = M - sp.diags(M.diagonal())
    if off.count_nonzero() == 0:
        d = M.diagonal()
        if np.any(d == 0):
            raise InputError("singular mass matrix")
        Minv = sp.diags(1.0 / d).tocsr()
        MK, MD = Minv @ K, Minv @ D
        residual = 0.0
        diagonal = True
    else:
        try:
            lu = spla.splu(M.tocsc())
        except RuntimeError as exc:
            raise InputError(f"singular mass matrix: {exc}") from exc
        MK = sp.csr_matrix(lu.solve(K.toarray()))
        MD = sp.csr_matrix(lu.solve(D.toarray()))
        Minv = sp.csr_matrix(lu.solve(np.eye(m)))
        residual = float(np.abs((M @ MK - K).toarray()).sum(axis=1).max())
        diagonal = False
        log.info("mass matrix solve residual %.3g", residual)
    Z, I = sp.csr_matrix((m, m)), sp.identity(m, format="csr")
    A = sp.bmat([[Z, I], [-MK, -MD]], format="csr")
    B = sp.bmat([[sp.csr_matrix((m, m))], [Minv]], format="csr")
    A, B = SparseMatrix(A), SparseMatrix(B)
    if return_info:
        return A, B, SecondOrderInfo(diagonal, residual)
    return A, B


@dataclass(frozen=True)
class ChainModel:
    """Mass, damping and stiffness of the chain plus its load patterns."""

    M: SparseMatrix
    D: SparseMatrix
    K: SparseMatrix
    loads: np.ndarray  # (dof, 2): lateral and vertical patterns
    nodes: int


def synthetic_chain(nodes: int = 1260, stiffness: float = 1.0e4, ground: float = 50.0,
                    coupling: float = 0.05, damping: tuple = (0.05, 1.0e-4), seed: int = 0) -> ChainModel:
    """A beam-like chain with a lateral and a vertical degree of freedom per node.

    Adjacent nodes are joined by springs in both directions, every node has
    a ground spring and a weak lateral-vertical coupling, masses vary
    slightly around 1, and damping is Rayleigh: D = alpha M + beta K.
    The default size has 2520 degrees of freedom (state dimension 5040).
    """
    rng = np.random.default_rng(seed)
    m = 2 * nodes
    mass = 1.0 + 0.1 * rng.random(m)
    lap = sp.diags([-np.ones(nodes - 1), 2 * np.ones(nodes), -np.ones(nodes - 1)], [-1, 0, 1])
    k_lat = stiffness * lap + ground * sp.identity(nodes)
    k_ver = 1.5 * stiffness * lap + 2 * ground * sp.identity(nodes)
    c = coupling * ground * sp.identity(nodes)
    K = sp.bmat([[k_lat, -c], [-c, k_ver]], format="csr")
    M = sp.diags(mass, format="csr")
    alpha, beta = damping
    D = (alpha * M + beta * K).tocsr()
    x = (np.arange(nodes) + 0.5) / nodes
    loads = np.zeros((m, 2))
    loads[:nodes, 0] = np.sin(np.pi * x)
    loads[nodes:, 1] = np.sin(2 * np.pi * x) + 0.5
    return ChainModel(SparseMatrix(M), SparseMatrix(D), SparseMatrix(K), loads, nodes)


def chain_scenario(nodes: int = 1260, load: float = 1.0, x0_radius: float = 1e-3, x0_nodes: int = 4, seed: int = 0):
    """(A, B, X0, U) for the chain: bounded loads along the two patterns.

    X0 is a box around the origin in the displacements of the first
    ``x0_nodes`` lateral nodes; U = {w1 p_lat + w2 p_ver : |w_i| <= load}.
    """
    ch = synthetic_chain(nodes, seed=seed)
    A, B = assemble_second_order(ch.M, ch.D, ch.K)
    n = A.nrows
    m = ch.loads.shape[0]
    radii = np.zeros(n)
    radii[:x0_nodes] = x0_radius
    idx = np.flatnonzero(radii)
    G = np.zeros((n, idx.size))
    G[idx, np.arange(idx.size)] = radii[idx]
    X0 = Zonotope(np.zeros(n), G)
    U = Zonotope(np.zeros(m), load * ch.loads)
    return A, B, X0, U
