"""Almost-sure large-sample limits of the criteria.

All three criteria share the limit ``-2 E[log p(X | theta0)]``; the functions
here take population moments directly so misspecified data can be probed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .exceptions import DomainError
from .models import LOG_2PI, GeometricDGP, LaplaceDGP, NormalDGP


@dataclass(frozen=True)
class LimitValue:
    model: str
    value: float
    inputs: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


def limit_geometric(ex: float) -> LimitValue:
    """``2 log(1 + EX) - 2 EX log(EX / (1 + EX))`` for geometric data with mean ``EX``."""
    if not (math.isfinite(ex) and ex > 0):
        raise DomainError(f"geometric limit needs EX > 0, got {ex}")
    value = 2.0 * math.log1p(ex) - 2.0 * ex * math.log(ex / (1.0 + ex))
    return LimitValue("geometric", value, {"ex": ex})


def limit_normal(p: int, e_norm_sq: float, norm_e_sq: float) -> LimitValue:
    """``p log(2 pi) + E||X||^2 - ||EX||^2``."""
    if p < 1:
        raise DomainError("dimension p must be at least 1")
    if not (norm_e_sq >= 0 and e_norm_sq >= norm_e_sq):
        raise DomainError("need E||X||^2 >= ||EX||^2 >= 0 (total variance cannot be negative)")
    value = p * LOG_2PI + (e_norm_sq - norm_e_sq)
    return LimitValue("normal", value, {"p": p, "e_norm_sq": e_norm_sq, "norm_e_sq": norm_e_sq})


def limit_laplace(gamma0: float) -> LimitValue:
    """``2 log(2 gamma0) + 2`` with ``gamma0 = E|X - Med(X)|``."""
    if not (math.isfinite(gamma0) and gamma0 > 0):
        raise DomainError(f"Laplace limit needs gamma0 > 0, got {gamma0}")
    return LimitValue("laplace", 2.0 * math.log(2.0 * gamma0) + 2.0, {"gamma0": gamma0})


def limit_for(dgp) -> LimitValue:
    """Limit implied by a data-generating process."""
    if isinstance(dgp, GeometricDGP):
        return limit_geometric(dgp.mean)
    if isinstance(dgp, NormalDGP):
        return limit_normal(dgp.dim, dgp.e_norm_sq, dgp.norm_e_sq)
    if isinstance(dgp, LaplaceDGP):
        return limit_laplace(dgp.b_star)
    raise TypeError(f"no limit for {type(dgp).__name__}")
