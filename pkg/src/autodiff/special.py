"""
Metaclust - Special Functions
=============================

Digamma and trigamma for positive arguments, vectorized over numpy arrays.

Both use the upward recurrence until every argument reaches the
asymptotic threshold, then a six-term asymptotic series:

    Ψ(x)  = Ψ(x+1)  - 1/x
    Ψ'(x) = Ψ'(x+1) + 1/x²
"""

import numpy as np

from ..errors import DomainError


ASYMPTOTIC_THRESHOLD = 8.0

# Bernoulli-number coefficients B_2k / (2k) for the digamma series
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)

# Coefficients B_2k for the trigamma series
_TRIGAMMA_SERIES = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)


def _check_positive(name: str, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(name, "argument must be finite")
    if np.any(x <= 0):
        raise DomainError(name, f"argument must be > 0, got min {np.min(x)!r}")


def digamma(x) -> np.ndarray:
    """
    Digamma function Ψ(x) = d/dx log Γ(x) for x > 0.

    Args:
        x: Scalar or array of positive reals

    Returns:
        Array of Ψ values with the shape of x

    Raises:
        DomainError: If any argument is non-positive
    """
    x = np.array(x, dtype=np.float64, copy=True)
    _check_positive("digamma", x)

    result = np.zeros_like(x)
    small = x < ASYMPTOTIC_THRESHOLD
    while np.any(small):
        result[small] -= 1.0 / x[small]
        x[small] += 1.0
        small = x < ASYMPTOTIC_THRESHOLD

    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    power = inv2
    for coef in _DIGAMMA_SERIES:
        series += coef * power
        power = power * inv2

    return result + np.log(x) - 0.5 * inv - series


def trigamma(x) -> np.ndarray:
    """
    Trigamma function Ψ'(x) for x > 0.

    Raises:
        DomainError: If any argument is non-positive
    """
    x = np.array(x, dtype=np.float64, copy=True)
    _check_positive("trigamma", x)

    result = np.zeros_like(x)
    small = x < ASYMPTOTIC_THRESHOLD
    while np.any(small):
        result[small] += 1.0 / (x[small] * x[small])
        x[small] += 1.0
        small = x < ASYMPTOTIC_THRESHOLD

    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    power = inv * inv2
    for coef in _TRIGAMMA_SERIES:
        series += coef * power
        power = power * inv2

    return result + inv + 0.5 * inv2 + series
