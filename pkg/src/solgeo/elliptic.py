"""Complete elliptic integrals of the first and second kind via the
arithmetic-geometric mean.

Conventions: the parameter is m = k^2 (not the modulus k), so

    K(m) = int_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta)
    E(m) = int_0^{pi/2} sqrt(1 - m sin^2 theta) dtheta

K is computed from K(m) = (pi/2) / agm(sqrt(1-m), 1) and E from the
running sum of squared half-differences of the same AGM iteration.
Both converge quadratically; doubles are exhausted in ~8 iterations.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "agm",
    "agm_array",
    "ellip_k",
    "ellip_e",
    "ellip_k_deriv",
    "ellip_e_deriv",
    "ellip_k_log_asymptote",
]

# Relative stopping tolerance for the AGM iteration and a hard cap on
# the iteration count (quadratic convergence makes the cap generous).
_AGM_RTOL = 1e-15
_AGM_MAXIT = 64


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two nonnegative reals.

    Iterates (a, b) -> ((a+b)/2, sqrt(ab)) until |a - b| <= 1e-15 * a.
    agm(a, 0) = 0 for any a >= 0.
    """
    if a < 0.0 or b < 0.0:
        raise ValueError("agm requires nonnegative arguments")
    if a == 0.0 or b == 0.0:
        return 0.0
    if a < b:
        a, b = b, a
    for _ in range(_AGM_MAXIT):
        if abs(a - b) <= _AGM_RTOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def agm_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise AGM for numpy arrays (same stopping rule as agm)."""
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    if np.any(a < 0.0) or np.any(b < 0.0):
        raise ValueError("agm requires nonnegative arguments")
    zero = (a == 0.0) | (b == 0.0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    for _ in range(_AGM_MAXIT):
        if np.all(np.abs(hi - lo) <= _AGM_RTOL * np.maximum(hi, 1e-300)):
            break
        hi, lo = 0.5 * (hi + lo), np.sqrt(hi * lo)
        hi, lo = np.maximum(hi, lo), np.minimum(hi, lo)
    out = 0.5 * (hi + lo)
    out[zero] = 0.0
    return out


def ellip_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter m in [0, 1).

    Diverges logarithmically as m -> 1 (see ellip_k_log_asymptote).
    """
    if not 0.0 <= m < 1.0:
        raise ValueError(f"ellip_k requires 0 <= m < 1, got {m}")
    return 0.5 * math.pi / agm(math.sqrt(1.0 - m), 1.0)


def ellip_e(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter m in [0, 1].

    E(0) = pi/2, E(1) = 1.  Uses the AGM with the classical correction
    sum: E = K * (1 - sum_n 2^(n-1) c_n^2) with c_0 = sqrt(m).
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"ellip_e requires 0 <= m <= 1, got {m}")
    if m == 1.0:
        return 1.0
    a = 1.0
    b = math.sqrt(1.0 - m)
    c2_sum = 0.5 * m  # 2^(-1) * c_0^2 with c_0 = sqrt(m)
    pow2 = 1.0
    for _ in range(_AGM_MAXIT):
        if abs(a - b) <= _AGM_RTOL * a:
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        c2_sum += pow2 * c * c
        pow2 *= 2.0
    k_val = 0.5 * math.pi / (0.5 * (a + b))
    return k_val * (1.0 - c2_sum)


def ellip_k_deriv(m: float) -> float:
    """dK/dm = ((m - 1) K(m) + E(m)) / (2 m (1 - m)), for m in (0, 1)."""
    if not 0.0 < m < 1.0:
        raise ValueError(f"ellip_k_deriv requires 0 < m < 1, got {m}")
    return ((m - 1.0) * ellip_k(m) + ellip_e(m)) / (2.0 * m * (1.0 - m))


def ellip_e_deriv(m: float) -> float:
    """dE/dm = (E(m) - K(m)) / (2 m), for m in (0, 1)."""
    if not 0.0 < m < 1.0:
        raise ValueError(f"ellip_e_deriv requires 0 < m < 1, got {m}")
    return (ellip_e(m) - ellip_k(m)) / (2.0 * m)


def ellip_k_log_asymptote(m: float) -> tuple[float, float]:
    """Near m = 1, K(m) ~ -log((1-m)/16)/2.

    Returns (absolute deviation, guaranteed envelope), where the
    deviation |K(m) + log((1-m)/16)/2| is bounded by the envelope
    ((1-m)/8) * |log((1-m)/16)| for m close enough to 1.
    """
    mc = 1.0 - m
    dev = abs(ellip_k(m) + 0.5 * math.log(mc / 16.0))
    env = (mc / 8.0) * abs(math.log(mc / 16.0))
    return dev, env
