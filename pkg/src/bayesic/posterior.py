"""Power and Gibbs posteriors, temperature schedules, and consistency diagnostics.

A posterior is one of three immutable representations:

``BetaPosterior``
    conjugate geometric power posterior ``Beta(a, b)``;
``NormalPosterior``
    conjugate normal power posterior ``N(m, v I)``;
``GridPosterior``
    normalized weights on a tensor-product midpoint grid over a box.

Grid kernels are normalized in log space, so kernels like
``exp(n * beta_n * f_n)`` at ``n = 1e7`` never overflow.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats
from scipy.special import betainc, betaincc, ndtr

from ._validation import as_points, check_positive
from .exceptions import DegenerateKernelError, DomainError, UnsupportedFunctionalError
from .specfun import digamma, log_sum_exp

MIN_NODES_PER_AXIS = 16
DEFAULT_NODES_1D = 4096
DEFAULT_NODES_2D = (256, 256)


class BetaSchedule(enum.Enum):
    """Temperature sequences ``beta_n`` for power posteriors."""

    INV_LOG_N = "inv-log-n"
    INV_LOG_LOG_N = "inv-log-log-n"
    ONE = "one"
    INV_SQRT_N = "inv-sqrt-n"
    INV_N = "inv-n"
    INV_N_LOG_N = "inv-n-log-n"

    @property
    def n_min(self) -> int:
        return _N_MIN[self]

    @property
    def satisfies_growth(self) -> bool:
        """Whether ``n * beta_n`` diverges."""
        return self in _GROWTH

    def evaluate(self, n: int) -> float:
        if n < self.n_min:
            raise ValueError(f"schedule {self.value} is defined for n >= {self.n_min}, got n = {n}")
        return _FORMULAS[self](float(n))

    @classmethod
    def parse(cls, value: Union[str, "BetaSchedule"]) -> "BetaSchedule":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown schedule {value!r}; choose from {names}") from None


_FORMULAS = {
    BetaSchedule.INV_LOG_N: lambda n: 1.0 / math.log(n),
    BetaSchedule.INV_LOG_LOG_N: lambda n: 1.0 / math.log(math.log(n)),
    BetaSchedule.ONE: lambda n: 1.0,
    BetaSchedule.INV_SQRT_N: lambda n: 1.0 / math.sqrt(n),
    BetaSchedule.INV_N: lambda n: 1.0 / n,
    BetaSchedule.INV_N_LOG_N: lambda n: 1.0 / (n * math.log(n)),
}
_N_MIN = {
    BetaSchedule.INV_LOG_N: 2,
    BetaSchedule.INV_LOG_LOG_N: 3,
    BetaSchedule.ONE: 1,
    BetaSchedule.INV_SQRT_N: 1,
    BetaSchedule.INV_N: 2,
    BetaSchedule.INV_N_LOG_N: 2,
}
_GROWTH = frozenset(
    {BetaSchedule.INV_LOG_N, BetaSchedule.INV_LOG_LOG_N, BetaSchedule.ONE, BetaSchedule.INV_SQRT_N}
)


# --------------------------------------------------------------------------
# representations


@dataclass(frozen=True)
class BetaPosterior:
    a: float
    b: float
    beta_n: Optional[float] = 1.0

    def __post_init__(self):
        check_positive(self.a, "a")
        check_positive(self.b, "b")

    dim = 1

    def mean(self) -> np.ndarray:
        return np.array([self.a / (self.a + self.b)])

    def expect(self, g):
        a, b = self.a, self.b
        if g == "identity":
            return a / (a + b)
        if g in ("square", "sq_norm"):
            return a * (a + 1.0) / ((a + b) * (a + b + 1.0))
        if g == "log":
            return digamma(a) - digamma(a + b)
        if g == "log1m":
            return digamma(b) - digamma(a + b)
        raise UnsupportedFunctionalError(f"no closed form for {g!r} under a Beta posterior")

    def ball_mass(self, center, eps: float) -> float:
        c = float(np.ravel(center)[0])
        lo, hi = max(c - eps, 0.0), min(c + eps, 1.0)
        if hi <= lo:
            return 0.0
        mass = 1.0 - betainc(self.a, self.b, lo) - betaincc(self.a, self.b, hi)
        return float(min(max(mass, 0.0), 1.0))


@dataclass(frozen=True)
class NormalPosterior:
    mean_vec: tuple
    var: float
    beta_n: Optional[float] = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean_vec", tuple(float(v) for v in np.atleast_1d(self.mean_vec)))
        check_positive(self.var, "var")

    @property
    def dim(self) -> int:
        return len(self.mean_vec)

    def mean(self) -> np.ndarray:
        return np.asarray(self.mean_vec)

    def expect(self, g):
        m = self.mean()
        if g == "identity":
            return m
        if g == "square":
            return m * m + self.var
        if g == "sq_norm":
            return float(m @ m) + self.dim * self.var
        raise UnsupportedFunctionalError(f"no closed form for {g!r} under a normal posterior")

    def ball_mass(self, center, eps: float) -> float:
        c = np.atleast_1d(np.asarray(center, dtype=float))
        m = self.mean()
        sd = math.sqrt(self.var)
        if self.dim == 1:
            lo = (c[0] - eps - m[0]) / sd
            hi = (c[0] + eps - m[0]) / sd
            return float(min(max(1.0 - ndtr(lo) - ndtr(-hi), 0.0), 1.0))
        # ||theta - c||^2 / v is noncentral chi-square with dim degrees of freedom
        nc = float(np.sum((m - c) ** 2)) / self.var
        x = eps * eps / self.var
        if nc == 0.0:
            return float(stats.chi2.cdf(x, self.dim))
        return float(stats.ncx2.cdf(x, self.dim, nc))


@dataclass(frozen=True, eq=False)
class GridPosterior:
    """Normalized weights on midpoint nodes of a box."""

    bounds: tuple
    shape: tuple
    nodes: np.ndarray
    log_weights: np.ndarray
    beta_n: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def mean(self) -> np.ndarray:
        return self.weights @ self.nodes

    def expect(self, g):
        if isinstance(g, str):
            name, g = g, _GRID_FUNCTIONALS.get(g)
            if g is None:
                raise UnsupportedFunctionalError(f"unknown functional {name!r}; pass a callable")
        vals = np.asarray(g(self.nodes), dtype=float)
        out = self.weights @ vals
        return float(out) if np.ndim(out) == 0 else out

    def ball_mass(self, center, eps: float) -> float:
        c = np.atleast_1d(np.asarray(center, dtype=float))
        d2 = np.sum((self.nodes - c) ** 2, axis=1)
        return float(min(np.sum(self.weights[d2 <= eps * eps]), 1.0))


_GRID_FUNCTIONALS = {
    "identity": lambda t: t,
    "square": lambda t: t * t,
    "sq_norm": lambda t: np.sum(t * t, axis=1),
    "log": lambda t: np.log(t[:, 0]),
    "log1m": lambda t: np.log1p(-t[:, 0]),
}

PowerPosterior = Union[BetaPosterior, NormalPosterior, GridPosterior]


# --------------------------------------------------------------------------
# constructors


def geometric_power_posterior(alpha: float, beta: float, n: int, xbar: float, beta_n: float) -> BetaPosterior:
    """Beta power posterior of the geometric model.

    Raising the likelihood to ``beta_n`` scales its exponents, giving
    ``Beta(n*beta_n + alpha, n*beta_n*xbar + beta)``.
    """
    check_positive(beta_n, "beta_n")
    if n < 1 or xbar < 0:
        raise DomainError("need n >= 1 and xbar >= 0")
    nb = n * beta_n
    return BetaPosterior(nb + alpha, nb * xbar + beta, beta_n=beta_n)


def normal_power_posterior(mu, n: int, xbar, beta_n: float) -> NormalPosterior:
    check_positive(beta_n, "beta_n")
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    xbar = np.atleast_1d(np.asarray(xbar, dtype=float))
    if mu.shape != xbar.shape:
        raise DomainError("prior mean and sample mean have different lengths")
    nb = n * beta_n
    return NormalPosterior(tuple((nb * xbar + mu) / (nb + 1.0)), 1.0 / (nb + 1.0), beta_n=beta_n)


def midpoint_nodes(bounds: Sequence[Sequence[float]], nodes_per_axis) -> tuple[np.ndarray, tuple]:
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    counts = np.broadcast_to(np.asarray(nodes_per_axis, dtype=int), (len(bounds),))
    if np.any(counts < MIN_NODES_PER_AXIS):
        raise ValueError(f"need at least {MIN_NODES_PER_AXIS} nodes per axis")
    axes = []
    for (lo, hi), k in zip(bounds, counts):
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise DomainError(f"grid box [{lo}, {hi}] must be finite and non-empty")
        h = (hi - lo) / k
        axes.append(lo + h * (np.arange(k) + 0.5))
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=1)
    return nodes, tuple(int(k) for k in counts)


def _normalize(log_kernel_values: np.ndarray) -> np.ndarray:
    lk = np.asarray(log_kernel_values, dtype=float)
    if np.any(np.isnan(lk)) or np.any(lk == np.inf):
        raise ValueError("log kernel must be finite or -inf at every node")
    top = np.max(lk)
    if top == -math.inf:
        raise DegenerateKernelError("log kernel is -inf at every grid node")
    # shift first: subtracting the max is exact for nearby values, so large
    # kernel offsets do not leak rounding into the weights
    shifted = lk - top
    return shifted - log_sum_exp(shifted)


def grid_posterior(
    log_kernel: Callable[[np.ndarray], np.ndarray],
    bounds,
    nodes_per_axis=DEFAULT_NODES_1D,
    beta_n: Optional[float] = None,
) -> GridPosterior:
    """Discretize ``exp(log_kernel)`` on a tensor-product midpoint grid.

    ``log_kernel`` receives an ``(k, dim)`` array of nodes and returns ``k``
    log kernel values.
    """
    nodes, shape = midpoint_nodes(bounds, nodes_per_axis)
    lw = _normalize(log_kernel(nodes))
    nodes.setflags(write=False)
    lw.setflags(write=False)
    return GridPosterior(tuple(tuple(b) for b in bounds), shape, nodes, lw, beta_n=beta_n)


def _uniform_log_prior(nodes: np.ndarray) -> np.ndarray:
    return np.zeros(nodes.shape[0])


def gibbs_posterior(
    utility: Callable[[np.ndarray], np.ndarray],
    gamma_n: float,
    bounds,
    nodes_per_axis=DEFAULT_NODES_1D,
    log_prior: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> GridPosterior:
    """Generalized posterior with density proportional to ``exp(gamma_n * u_n) * prior``."""
    check_positive(gamma_n, "gamma_n")
    log_prior = log_prior or _uniform_log_prior

    def kernel(nodes):
        return gamma_n * np.asarray(utility(nodes), dtype=float) + log_prior(nodes)

    return grid_posterior(kernel, bounds, nodes_per_axis)


def eta_rescaled_posterior(
    utility: Callable[[np.ndarray], np.ndarray],
    gamma_n: float,
    k: int,
    bounds,
    nodes_per_axis=DEFAULT_NODES_1D,
    log_prior: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> GridPosterior:
    """Gibbs posterior with the exponent passed through ``x -> x**(2k+1)``."""
    check_positive(gamma_n, "gamma_n")
    if int(k) != k or k < 0:
        raise ValueError(f"k must be a non-negative integer, got {k}")
    power = 2 * int(k) + 1
    log_prior = log_prior or _uniform_log_prior

    def kernel(nodes):
        scaled = gamma_n * np.asarray(utility(nodes), dtype=float)
        return scaled**power + log_prior(nodes)

    return grid_posterior(kernel, bounds, nodes_per_axis)


def power_posterior(model, sample, beta_n: float, *, method: str = "auto", nodes_per_axis=None, bounds=None):
    """Power posterior of ``model`` given ``sample`` at temperature ``beta_n``.

    ``method="auto"`` uses the conjugate closed form where one exists and a
    grid otherwise; ``method="grid"`` forces quadrature. Normal grids default
    to ``m +/- 8 sqrt(v)`` per axis around the conjugate solution.
    """
    from .models import GeometricModel, NormalModel

    check_positive(beta_n, "beta_n")
    if method not in ("auto", "grid"):
        raise ValueError(f"unknown posterior method {method!r}")
    if method == "auto":
        if isinstance(model, GeometricModel):
            return geometric_power_posterior(model.alpha, model.beta, sample.n, sample.xbar, beta_n)
        if isinstance(model, NormalModel):
            return normal_power_posterior(model.prior_mean, sample.n, sample.mean, beta_n)

    if bounds is None:
        if isinstance(model, NormalModel):
            exact = normal_power_posterior(model.prior_mean, sample.n, sample.mean, beta_n)
            half = 8.0 * math.sqrt(exact.var)
            bounds = tuple((c - half, c + half) for c in exact.mean_vec)
        else:
            bounds = model.bounds
    if nodes_per_axis is None:
        nodes_per_axis = DEFAULT_NODES_1D if model.dim == 1 else DEFAULT_NODES_2D
    nb = sample.n * beta_n

    def kernel(nodes):
        return nb * model.avg_loglik(sample, nodes) + model.log_prior(nodes)

    return grid_posterior(kernel, bounds, nodes_per_axis, beta_n=beta_n)


# --------------------------------------------------------------------------
# queries


def posterior_mean(post: PowerPosterior) -> np.ndarray:
    return post.mean()


def posterior_expect(post: PowerPosterior, g):
    """Posterior expectation of ``g``.

    Closed forms accept the registered names ``identity``, ``square``,
    ``sq_norm`` and, for Beta posteriors, ``log`` and ``log1m``. Grids also
    accept any callable mapping an ``(k, dim)`` node array to values.
    """
    if callable(g) and not isinstance(post, GridPosterior):
        raise UnsupportedFunctionalError("arbitrary functionals need a grid posterior")
    return post.expect(g)


def ball_mass(post: PowerPosterior, center, eps: float) -> float:
    """Posterior mass of the closed Euclidean ball of radius ``eps`` about ``center``."""
    check_positive(eps, "eps")
    return post.ball_mass(center, eps)


def aui_tail_diagnostic(post: GridPosterior, f_values, deltas) -> list[tuple[float, float]]:
    """Tail integrals ``sum |f| 1{|f| >= delta} w`` for each ``delta``.

    ``f_values`` is a callable on the node array or a precomputed vector.
    """
    if not isinstance(post, GridPosterior):
        raise TypeError("the tail diagnostic needs a grid posterior")
    vals = f_values(post.nodes) if callable(f_values) else f_values
    absf = np.abs(np.asarray(vals, dtype=float))
    w = post.weights
    out = []
    for delta in deltas:
        check_positive(delta, "delta")
        out.append((float(delta), float(np.sum(absf[absf >= delta] * w[absf >= delta]))))
    return out


@dataclass(frozen=True)
class QuasiconcavityResult:
    passed: bool
    witness: Optional[tuple] = None  # (theta, tau, lam, f_mix, f_min)

    def __bool__(self) -> bool:
        return self.passed


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    u = rng.random(size)
    while np.any(u == 0.0):
        zero = u == 0.0
        u[zero] = rng.random(int(zero.sum()))
    return u


def quasiconcavity_check(f, bounds, n_triples: int = 1000, tol: float = 1e-10, seed=0) -> QuasiconcavityResult:
    """Randomized test of ``f(lam*theta + (1-lam)*tau) >= min(f(theta), f(tau)) - tol``.

    Points are drawn uniformly from the open box; ``f`` is evaluated on
    ``(k, dim)`` arrays. Returns the first violating triple as a witness.
    """
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    dim = lo.size
    theta = lo + (hi - lo) * _open_uniform(rng, (n_triples, dim))
    tau = lo + (hi - lo) * _open_uniform(rng, (n_triples, dim))
    lam = rng.random((n_triples, 1))
    mix = lam * theta + (1.0 - lam) * tau
    f_theta = np.asarray(f(theta), dtype=float)
    f_tau = np.asarray(f(tau), dtype=float)
    f_mix = np.asarray(f(mix), dtype=float)
    floor = np.minimum(f_theta, f_tau)
    bad = np.flatnonzero(f_mix < floor - tol)
    if bad.size == 0:
        return QuasiconcavityResult(True)
    i = bad[0]
    return QuasiconcavityResult(
        False, (theta[i].copy(), tau[i].copy(), float(lam[i, 0]), float(f_mix[i]), float(floor[i]))
    )


def as_theta(theta, dim: int) -> np.ndarray:
    """Single parameter point as a length-``dim`` vector."""
    pts, single = as_points(theta, dim)
    if not single:
        raise DomainError("expected a single parameter point")
    return pts[0]
