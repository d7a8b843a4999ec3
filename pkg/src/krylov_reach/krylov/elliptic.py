"""Complete elliptic integrals of the first and second kind (parameter m)."""
from __future__ import annotations

import math


def elliptic_KE(m: float) -> tuple[float, float]:
    """Return (K(m), E(m)) by the arithmetic-geometric mean.

    K(1) is infinite and returned as ``math.inf``; E(1) = 1.
    """
    m = float(m)
    if not (0.0 <= m <= 1.0) or math.isnan(m):
        raise ValueError(f"elliptic parameter m={m} outside [0, 1]")
    if m == 1.0:
        return math.inf, 1.0
    a, b = 1.0, math.sqrt(1.0 - m)
    c = math.sqrt(m)
    acc = 0.5 * m
    power = 0.5
    for _ in range(64):
        if c <= 1e-17 * a:
            break
        # c_{k+1} = c_k^2 / (4 a_{k+1}) avoids the cancellation in (a - b) / 2
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        c = c * c / (4.0 * a)
        power *= 2.0
        acc += power * c * c
    K = math.pi / (2.0 * a)
    return K, K * (1.0 - acc)


def e_minus_k(m: float) -> float:
    """E(m) - (1-m) K(m), continuous on [0, 1] with value 1 at m = 1."""
    if m >= 1.0:
        return 1.0
    K, E = elliptic_KE(m)
    return E - (1.0 - m) * K
