"""Input validation shared by the estimator, models and CLI."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DataError, DomainError


def check_observations(X, *, integer: bool = False) -> np.ndarray:
    """Return ``X`` as a finite 2-D float array with at least one row.

    A 1-D input is read as a single column. With ``integer=True`` every entry
    must be a non-negative whole number (geometric counts).
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    try:
        arr = check_array(arr, dtype=np.float64, ensure_2d=True, ensure_min_samples=1)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if integer:
        bad = (arr < 0) | (arr != np.floor(arr))
        if np.any(bad):
            row = int(np.argwhere(bad)[0][0]) + 1
            raise DomainError(f"geometric observations must be non-negative integers (row {row})")
    return arr


def check_positive(value, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite positive number, got {value!r}")
    return float(value)


def as_points(theta, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce ``theta`` to an ``(k, dim)`` array of parameter points.

    Returns the array and whether the input denoted a single point. For
    one-dimensional models a length-``k`` vector is ``k`` points (a single
    point when ``k == 1``); otherwise a length-``dim`` vector is one point.
    Pass 2-D arrays to evaluate many points unambiguously.
    """
    arr = np.asarray(theta, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dim == 1:
            return arr.reshape(-1, 1), arr.shape[0] == 1
        if arr.shape[0] != dim:
            raise DomainError(f"theta has length {arr.shape[0]}, expected {dim}")
        return arr.reshape(1, dim), True
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise DomainError(f"theta of shape {arr.shape} does not match dimension {dim}")
