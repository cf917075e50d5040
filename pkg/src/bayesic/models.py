"""Likelihood families, data-generating processes and observed samples.

Three families are supported:

* ``GeometricModel``: ``p(x | theta) = (1 - theta)**x * theta`` on
  ``x = 0, 1, 2, ...`` with ``theta`` in ``(0, 1)`` and a Beta prior.
* ``NormalModel``: ``N(theta, I_p)`` with an ``N(mu, I_p)`` prior.
* ``LaplaceModel``: location ``mu`` and scale ``gamma`` restricted to the box
  ``[-m, m] x [1/s, s]`` with a strictly positive prior (uniform by default).

Every model evaluates its average log-likelihood at many parameter points in
one call; pass an ``(k, dim)`` array to get ``k`` values back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, ClassVar, Optional, Union

import numpy as np
from scipy.special import betaln

from ._validation import as_points, check_observations, check_positive
from .exceptions import ConfigurationError, DomainError

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class ObservedSample:
    """An immutable ``n x q`` data matrix with cached summary statistics."""

    values: np.ndarray
    integer: bool = False

    def __post_init__(self):
        arr = check_observations(self.values, integer=self.integer)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        mean = arr.mean(axis=0)
        centered = arr - mean
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sum_sq", float(np.sum(arr * arr)))
        object.__setattr__(self, "centered_sum_sq", float(np.sum(centered * centered)))

    @classmethod
    def geometric(cls, values) -> "ObservedSample":
        return cls(values, integer=True)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def xbar(self) -> float:
        """Scalar sample mean; only meaningful for one-column samples."""
        return float(self.mean[0])

    @cached_property
    def _sorted_column(self) -> tuple[np.ndarray, np.ndarray]:
        if self.dim != 1:
            raise DomainError("absolute deviations need a single-column sample")
        xs = np.sort(self.values[:, 0])
        prefix = np.concatenate(([0.0], np.cumsum(xs)))
        return xs, prefix

    def mean_abs_dev(self, mu):
        """Return ``(1/n) * sum_i |X_i - mu|`` for scalar or array ``mu``."""
        xs, prefix = self._sorted_column
        mu_arr = np.asarray(mu, dtype=float)
        k = np.searchsorted(xs, mu_arr, side="right")
        total = prefix[-1]
        below = mu_arr * k - prefix[k]
        above = (total - prefix[k]) - mu_arr * (self.n - k)
        out = (below + above) / self.n
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GeometricDGP:
    theta0: float

    def __post_init__(self):
        if not 0.0 < self.theta0 < 1.0:
            raise DomainError(f"geometric theta0 must lie in (0, 1), got {self.theta0}")

    @property
    def mean(self) -> float:
        return (1.0 - self.theta0) / self.theta0


@dataclass(frozen=True)
class NormalDGP:
    """``N(mean, I)`` data."""

    mean: tuple

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(v) for v in np.atleast_1d(self.mean)))

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def norm_e_sq(self) -> float:
        m = np.asarray(self.mean)
        return float(m @ m)

    @property
    def e_norm_sq(self) -> float:
        return self.norm_e_sq + self.dim


@dataclass(frozen=True)
class LaplaceDGP:
    mu_star: float = 0.0
    b_star: float = 1.0

    def __post_init__(self):
        check_positive(self.b_star, "b_star")

    def mean_abs_dev(self, mu):
        """``E|X - mu|`` in closed form."""
        d = np.abs(np.asarray(mu, dtype=float) - self.mu_star)
        return self.b_star * np.exp(-d / self.b_star) + d


DataGeneratingProcess = Union[GeometricDGP, NormalDGP, LaplaceDGP]


class _Model:
    kind: ClassVar[str]
    dgp_type: ClassVar[type]

    @property
    def dim(self) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    def _points(self, theta) -> tuple[np.ndarray, bool]:
        pts, single = as_points(theta, self.dim)
        if not np.all(self.contains(pts)):
            raise DomainError(f"theta outside the {self.kind} parameter space")
        return pts, single

    @staticmethod
    def _finish(values: np.ndarray, single: bool):
        return float(values[0]) if single else values

    def _check_dgp(self, dgp) -> None:
        if not isinstance(dgp, self.dgp_type):
            raise ValueError(f"{type(dgp).__name__} does not generate {self.kind} data")

    def avg_loglik(self, sample: ObservedSample, theta):
        """Mean of ``log p(X_i | theta)`` over the rows of ``sample``."""
        if sample.dim != self.data_dim:
            raise DomainError(f"sample has {sample.dim} columns, model expects {self.data_dim}")
        pts, single = self._points(theta)
        return self._finish(self._avg_loglik(sample, pts), single)

    def expected_loglik(self, dgp, theta):
        """Population objective ``E[log p(X | theta)]`` under ``dgp``."""
        self._check_dgp(dgp)
        pts, single = self._points(theta)
        return self._finish(self._expected_loglik(dgp, pts), single)

    def log_prior(self, theta):
        pts, single = self._points(theta)
        return self._finish(self._log_prior(pts), single)

    @property
    def data_dim(self) -> int:
        return 1


@dataclass(frozen=True)
class GeometricModel(_Model):
    """Geometric counts on ``{0, 1, ...}`` with a ``Beta(alpha, beta)`` prior."""

    alpha: float = 1.0
    beta: float = 1.0

    kind: ClassVar[str] = "geometric"
    dgp_type: ClassVar[type] = GeometricDGP

    def __post_init__(self):
        check_positive(self.alpha, "alpha")
        check_positive(self.beta, "beta")

    @property
    def dim(self) -> int:
        return 1

    @property
    def bounds(self) -> tuple:
        return ((0.0, 1.0),)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return (pts[:, 0] > 0.0) & (pts[:, 0] < 1.0)

    def log_density(self, x, theta) -> float:
        if x < 0 or x != math.floor(x):
            raise DomainError(f"geometric observation must be a non-negative integer, got {x}")
        (t,), _ = self._points(theta)
        return x * math.log1p(-t[0]) + math.log(t[0])

    def _avg_loglik(self, sample, pts):
        t = pts[:, 0]
        return sample.xbar * np.log1p(-t) + np.log(t)

    def _expected_loglik(self, dgp, pts):
        t = pts[:, 0]
        return dgp.mean * np.log1p(-t) + np.log(t)

    def _log_prior(self, pts):
        t = pts[:, 0]
        return (
            (self.alpha - 1.0) * np.log(t)
            + (self.beta - 1.0) * np.log1p(-t)
            - betaln(self.alpha, self.beta)
        )

    def true_theta0(self, dgp: GeometricDGP) -> np.ndarray:
        self._check_dgp(dgp)
        return np.array([1.0 / (1.0 + dgp.mean)])


@dataclass(frozen=True)
class NormalModel(_Model):
    """``N(theta, I_p)`` likelihood with an ``N(prior_mean, I_p)`` prior."""

    prior_mean: tuple = (0.0,)

    kind: ClassVar[str] = "normal"
    dgp_type: ClassVar[type] = NormalDGP

    def __post_init__(self):
        mu = tuple(float(v) for v in np.atleast_1d(self.prior_mean))
        if not mu or not all(math.isfinite(v) for v in mu):
            raise ConfigurationError("prior_mean must be a non-empty finite vector")
        object.__setattr__(self, "prior_mean", mu)

    @property
    def dim(self) -> int:
        return len(self.prior_mean)

    @property
    def data_dim(self) -> int:
        return self.dim

    @property
    def bounds(self):
        return None

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.all(np.isfinite(pts), axis=1)

    def log_density(self, x, theta) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise DomainError(f"normal observation must have length {self.dim}")
        (t,), _ = self._points(theta)
        d = x - t
        return -0.5 * self.dim * LOG_2PI - 0.5 * float(d @ d)

    def _avg_loglik(self, sample, pts):
        d = pts - sample.mean
        return -0.5 * self.dim * LOG_2PI - 0.5 * (
            sample.centered_sum_sq / sample.n + np.sum(d * d, axis=1)
        )

    def _expected_loglik(self, dgp, pts):
        if dgp.dim != self.dim:
            raise ValueError("data-generating process dimension does not match the model")
        ex = np.asarray(dgp.mean)
        return -0.5 * self.dim * LOG_2PI - 0.5 * (
            dgp.e_norm_sq - 2.0 * pts @ ex + np.sum(pts * pts, axis=1)
        )

    def _log_prior(self, pts):
        d = pts - np.asarray(self.prior_mean)
        return -0.5 * self.dim * LOG_2PI - 0.5 * np.sum(d * d, axis=1)

    def true_theta0(self, dgp: NormalDGP) -> np.ndarray:
        self._check_dgp(dgp)
        if dgp.dim != self.dim:
            raise ValueError("data-generating process dimension does not match the model")
        return np.asarray(dgp.mean, dtype=float)


@dataclass(frozen=True)
class LaplaceModel(_Model):
    """Laplace location-scale model on the box ``[-m, m] x [1/s, s]``.

    ``log_prior`` maps an ``(k, 2)`` array of ``(mu, gamma)`` points to log
    prior densities; ``None`` means uniform on the box.
    """

    m: float = 4.0
    s: float = 8.0
    log_prior_fn: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    kind: ClassVar[str] = "laplace"
    dgp_type: ClassVar[type] = LaplaceDGP

    def __post_init__(self):
        if not (math.isfinite(self.m) and self.m > 0):
            raise ConfigurationError(f"Laplace box needs m > 0, got {self.m}")
        if not (math.isfinite(self.s) and self.s > 1):
            raise ConfigurationError(f"Laplace box needs s > 1, got {self.s}")

    @property
    def dim(self) -> int:
        return 2

    @property
    def bounds(self) -> tuple:
        return ((-self.m, self.m), (1.0 / self.s, self.s))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        mu, gam = pts[:, 0], pts[:, 1]
        return (np.abs(mu) <= self.m) & (gam >= 1.0 / self.s) & (gam <= self.s)

    def log_density(self, x, theta) -> float:
        (t,), _ = self._points(theta)
        mu, gam = t
        return -math.log(2.0 * gam) - abs(float(x) - mu) / gam

    def _avg_loglik(self, sample, pts):
        mu, gam = pts[:, 0], pts[:, 1]
        return -np.log(2.0 * gam) - sample.mean_abs_dev(mu) / gam

    def _expected_loglik(self, dgp, pts):
        mu, gam = pts[:, 0], pts[:, 1]
        return -np.log(2.0 * gam) - dgp.mean_abs_dev(mu) / gam

    def _log_prior(self, pts):
        if self.log_prior_fn is not None:
            return np.asarray(self.log_prior_fn(pts), dtype=float)
        area = 2.0 * self.m * (self.s - 1.0 / self.s)
        return np.full(pts.shape[0], -math.log(area))

    def true_theta0(self, dgp: LaplaceDGP) -> np.ndarray:
        self._check_dgp(dgp)
        theta0 = np.array([dgp.mu_star, dgp.b_star])
        if not self.contains(theta0.reshape(1, 2))[0]:
            raise ConfigurationError(
                f"theta0 = ({dgp.mu_star}, {dgp.b_star}) lies outside the box "
                f"[-{self.m}, {self.m}] x [1/{self.s}, {self.s}]"
            )
        return theta0


ModelSpec = Union[GeometricModel, NormalModel, LaplaceModel]


def make_sample(model: ModelSpec, values) -> ObservedSample:
    """Validate ``values`` for ``model`` and wrap them in an ``ObservedSample``."""
    sample = ObservedSample(values, integer=isinstance(model, GeometricModel))
    if sample.dim != model.data_dim:
        raise DomainError(f"{model.kind} data needs {model.data_dim} column(s), got {sample.dim}")
    return sample


def log_density(model: ModelSpec, x, theta) -> float:
    return model.log_density(x, theta)


def avg_loglik(model: ModelSpec, sample: ObservedSample, theta):
    return model.avg_loglik(sample, theta)


def expected_loglik(model: ModelSpec, dgp: DataGeneratingProcess, theta):
    return model.expected_loglik(dgp, theta)


def true_theta0(model: ModelSpec, dgp: DataGeneratingProcess) -> np.ndarray:
    return model.true_theta0(dgp)
