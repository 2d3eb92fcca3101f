"""Log-gamma, digamma, and trigamma for positive real arguments.

All three are computed the same way: push the argument above a cutoff with
the upward recurrence, then evaluate an asymptotic (Bernoulli-number) series.
Inputs may be scalars or numpy arrays; outputs follow numpy broadcasting.
Arguments must be strictly positive, which is all the Beta-distribution
machinery in this package ever needs.
"""

from __future__ import annotations

import numpy as np

_HALF_LN_TWO_PI = 0.9189385332046727

# Stirling series coefficients for ln Gamma: sum c_k / x^(2k-1).
_LGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
)

# Asymptotic tail of digamma: ln x - 1/(2x) - sum c_k / x^(2k).
_DIGAMMA_COEFFS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
)

# Asymptotic tail of trigamma: 1/x + 1/(2x^2) + sum c_k / x^(2k+1).
_TRIGAMMA_COEFFS = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
)


def _as_positive_array(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and not np.all(arr > 0.0):
        raise ValueError(f"{name} requires strictly positive arguments")
    return arr


def log_gamma(x):
    """Natural log of the Gamma function for x > 0."""
    arr = _as_positive_array(x, "log_gamma")
    scalar = np.isscalar(x) or arr.ndim == 0
    z = np.atleast_1d(arr.copy())
    shift = np.zeros_like(z)
    # Recurrence ln G(z) = ln G(z+1) - ln z, applied until z >= 8.
    for _ in range(8):
        low = z < 8.0
        if not low.any():
            break
        shift[low] -= np.log(z[low])
        z[low] += 1.0
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    power = 1.0 / z
    for c in _LGAMMA_COEFFS:
        series += c * power
        power *= inv2
    out = shift + (z - 0.5) * np.log(z) - z + _HALF_LN_TWO_PI + series
    return float(out[0]) if scalar else out.reshape(arr.shape)


def digamma(x):
    """Logarithmic derivative of Gamma, psi(x), for x > 0."""
    arr = _as_positive_array(x, "digamma")
    scalar = np.isscalar(x) or arr.ndim == 0
    z = np.atleast_1d(arr.copy())
    shift = np.zeros_like(z)
    # psi(z) = psi(z+1) - 1/z until z >= 6.
    for _ in range(6):
        low = z < 6.0
        if not low.any():
            break
        shift[low] -= 1.0 / z[low]
        z[low] += 1.0
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    power = inv2.copy()
    for c in _DIGAMMA_COEFFS:
        series += c * power
        power *= inv2
    out = shift + np.log(z) - 0.5 / z - series
    return float(out[0]) if scalar else out.reshape(arr.shape)


def trigamma(x):
    """Second derivative of ln Gamma, psi'(x), for x > 0."""
    arr = _as_positive_array(x, "trigamma")
    scalar = np.isscalar(x) or arr.ndim == 0
    z = np.atleast_1d(arr.copy())
    shift = np.zeros_like(z)
    # psi'(z) = psi'(z+1) + 1/z^2 until z >= 6.
    for _ in range(6):
        low = z < 6.0
        if not low.any():
            break
        shift[low] += 1.0 / (z[low] * z[low])
        z[low] += 1.0
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    power = inv * inv2
    for c in _TRIGAMMA_COEFFS:
        series += c * power
        power *= inv2
    out = shift + inv + 0.5 * inv2 + series
    return float(out[0]) if scalar else out.reshape(arr.shape)


def log_beta(a, b):
    """ln B(a, b) = ln G(a) + ln G(b) - ln G(a+b)."""
    return log_gamma(a) + log_gamma(b) - log_gamma(np.asarray(a) + np.asarray(b))


def softplus(x):
    """Numerically stable ln(1 + e^x); maps raw parameters to positive shapes."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def softplus_inverse(y):
    """Inverse of softplus for y > 0: ln(e^y - 1)."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0):
        raise ValueError("softplus_inverse requires positive input")
    # For large y, expm1(y) overflows harmlessly late; y > 30 is identity in float64.
    return np.where(y > 30.0, y, np.log(np.expm1(np.minimum(y, 30.0))))


def sigmoid(x):
    """Logistic function, overflow-safe on both tails."""
    x = np.asarray(x, dtype=np.float64)
    t = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + t), t / (1.0 + t))
