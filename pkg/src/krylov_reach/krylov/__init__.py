"""Arnoldi reduction, exponential action and error certificates."""
from .arnoldi import (DEFAULT_TOL, KrylovDecomposition, arnoldi, augmented_arnoldi, breakdown_bound,
                      exp_action, iter_arnoldi, small_expm)
from .certificate import (DimensionChoice, ErrorCertificate, OperatorInfo, choose_dimension, epsilon_norm,
                          optimize_q, solve_nu_m)
from .elliptic import elliptic_KE

__all__ = [
    "DEFAULT_TOL", "KrylovDecomposition", "arnoldi", "augmented_arnoldi", "breakdown_bound", "exp_action",
    "iter_arnoldi", "small_expm", "DimensionChoice", "ErrorCertificate", "OperatorInfo", "choose_dimension",
    "epsilon_norm", "optimize_q", "solve_nu_m", "elliptic_KE",
]
