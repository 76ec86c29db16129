"""
Complete elliptic integrals of the first kind.
AGM iteration, vectorized over numpy arrays. Ratios K(k)/K(k') are the only
special-function input the conformal formulas need.
"""

import numpy as np

from engine.errors import DomainError

AGM_TOL = 1e-15
DEGENERATE_TOL = 1e-12
COMPLEMENT_TOL = 1e-12
_MAX_ITER = 64


def _as_output(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def _validate(k, lower_open: bool = False) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if not np.all(np.isfinite(k)):
        raise DomainError(f"modulus must be finite, got {k}")
    if lower_open and np.any(k <= 0.0):
        raise DomainError(f"modulus must lie in (0, 1), got {k}")
    if np.any(k < 0.0) or np.any(k >= 1.0):
        raise DomainError(f"modulus must lie in [0, 1), got {k}")
    return k


def _agm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    for _ in range(_MAX_ITER):
        if np.all(np.abs(a - b) <= AGM_TOL * a):
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return 0.5 * (a + b)


def complementary(k):
    """k' = sqrt(1 - k^2), evaluated as sqrt((1-k)(1+k))."""
    k = np.asarray(k, dtype=float)
    return _as_output(np.sqrt((1.0 - k) * (1.0 + k)))


def ellipk(k):
    """
    K(k) = pi / (2 AGM(1, k')).

    Moduli within DEGENERATE_TOL of 1 are rejected; callers take the k -> 1
    limit analytically instead.

        ellipk(0.0)  -> 1.5707963...
        ellipk(0.5)  -> 1.6857503...
    """
    k = _validate(k)
    if np.any(k >= 1.0 - DEGENERATE_TOL):
        raise DomainError(f"modulus too close to 1: {k}")
    kp = np.sqrt((1.0 - k) * (1.0 + k))
    return _as_output(np.pi / (2.0 * _agm(np.ones_like(k), kp)))


def k_ratio(k, kp=None):
    """
    K(k) / K(k') for 0 < k < 1.

    Both integrals come from AGMs seeded with k and k' directly. A rounded
    k' near 1 no longer determines k to full precision, so callers that know
    the complement in closed form pass it as `kp`.

        k_ratio(1 / 3)                  -> 0.6396307...
        k_ratio(1e-6, kp=cos(asin(1e-6))) -> 0.10333...
    """
    k = _validate(k, lower_open=True)
    if kp is None:
        kp = np.sqrt((1.0 - k) * (1.0 + k))
    else:
        kp = _validate(kp, lower_open=True)
        if np.any(np.abs(k * k + kp * kp - 1.0) > COMPLEMENT_TOL):
            raise DomainError(f"k={k} and kp={kp} are not complementary moduli")
    ones = np.ones_like(k)
    return _as_output(_agm(ones, k) / _agm(ones, kp))
