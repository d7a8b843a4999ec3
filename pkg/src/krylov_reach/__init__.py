"""Reachability of sparse linear systems with Krylov-subspace exponentials."""
from .errors import CertificateError, EtaInfeasibleError, InputError, ReachError
from .homogeneous import KrylovOperator, hom_point_set, hom_point_single, time_interval_set
from .input_solution import const_input_point, const_uncertain_input_set, partial_input_point, varying_input_set
from .policy import EtaPolicy, XiPolicy
from .reach import ReachConfig, ReachResult, check_safety, reach
from .sets import IntervalMatrix, IntervalVector, Zonotope
from .sparse_linalg import SparseMatrix

__all__ = [
    "CertificateError", "EtaInfeasibleError", "InputError", "ReachError",
    "KrylovOperator", "hom_point_set", "hom_point_single", "time_interval_set",
    "const_input_point", "const_uncertain_input_set", "partial_input_point", "varying_input_set",
    "EtaPolicy", "XiPolicy", "ReachConfig", "ReachResult", "check_safety", "reach",
    "IntervalMatrix", "IntervalVector", "Zonotope", "SparseMatrix",
]
