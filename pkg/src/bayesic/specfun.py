"""Special functions and numerically stable reductions.

The digamma routine shifts its argument upward with the recurrence
``psi(x) = psi(x + 1) - 1/x`` until ``x >= 20`` and then applies the
asymptotic series through the ``x**-10`` term, whose truncation error there
is below ``1e-17``.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DomainError

_ASYMPTOTIC_SHIFT = 20.0

# B_{2k} / (2k) for k = 1..5
_BERNOULLI_TERMS = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
)


def _check_positive(x: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise DomainError(f"{name} must be finite and strictly positive")


def digamma(x):
    """Digamma function psi(x) for real x > 0.

    Accepts a scalar or an array; scalars come back as ``float``.
    """
    arr = np.array(x, dtype=float, copy=True)
    _check_positive(arr, "digamma argument")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)

    shift = np.zeros_like(arr)
    small = arr < _ASYMPTOTIC_SHIFT
    while np.any(small):
        shift[small] -= 1.0 / arr[small]
        arr[small] += 1.0
        small = arr < _ASYMPTOTIC_SHIFT

    inv2 = 1.0 / (arr * arr)
    series = np.zeros_like(arr)
    # Horner in 1/x^2, highest order first
    for coef in reversed(_BERNOULLI_TERMS):
        series = (series + coef) * inv2
    out = np.log(arr) - 0.5 / arr - series + shift
    return float(out[0]) if scalar else out


def digamma_poincare(a):
    """Two-term approximation ``log(a) - 1/(2a)`` of the digamma function."""
    arr = np.asarray(a, dtype=float)
    _check_positive(arr, "digamma_poincare argument")
    out = np.log(arr) - 0.5 / arr
    return float(out) if out.ndim == 0 else out


def log_sum_exp(values) -> float:
    """Compute ``log(sum(exp(values)))`` without overflow.

    An all ``-inf`` input returns ``-inf``.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("log_sum_exp needs at least one value")
    if np.any(np.isnan(v)) or np.any(v == np.inf):
        raise ValueError("log_sum_exp values must be finite or -inf")
    top = v.max()
    if top == -np.inf:
        return -math.inf
    return float(top + np.log(np.sum(np.exp(v - top))))
