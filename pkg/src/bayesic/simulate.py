"""Random-variate generation and the replicated convergence experiments.

Every experiment cell draws from its own ``Philox`` stream whose key is
derived from the run seed and the cell's grid indices, so results do not
depend on how many worker processes execute the cells.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .criteria import bpic, dic, dic_geometric_approx, dic_geometric_exact, wbic
from .exceptions import ConfigurationError
from .limits import limit_geometric, limit_laplace, limit_normal
from .models import LaplaceDGP, LaplaceModel, NormalModel, ObservedSample
from .posterior import (
    BetaSchedule,
    ball_mass,
    eta_rescaled_posterior,
    geometric_power_posterior,
    normal_power_posterior,
    power_posterior,
    _open_uniform,
)

DIC_GEOMETRIC = "dic-geometric"
WBIC_NORMAL = "wbic-normal"
LAPLACE = "laplace"
CONSISTENCY = "consistency"
EXPERIMENTS = (DIC_GEOMETRIC, WBIC_NORMAL, LAPLACE, CONSISTENCY)
_EXPERIMENT_TAG = {name: i for i, name in enumerate(EXPERIMENTS)}

_UINT64 = 2**64


# --------------------------------------------------------------------------
# random variates


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for the cell identified by ``key`` under run seed ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def sample_geometric(theta0: float, n: int, seed) -> ObservedSample:
    """``n`` geometric counts by inversion: ``floor(log U / log(1 - theta0))``."""
    if not 0.0 < theta0 < 1.0:
        raise ValueError(f"theta0 must lie in (0, 1), got {theta0}")
    u = _open_uniform(make_rng(seed), n)
    x = np.floor(np.log(u) / math.log1p(-theta0))
    return ObservedSample(x, integer=True)


def sample_normal(mean, n: int, seed) -> ObservedSample:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    z = make_rng(seed).standard_normal((n, mean.size))
    return ObservedSample(z + mean)


def sample_laplace(mu_star: float, b_star: float, n: int, seed) -> ObservedSample:
    """Laplace draws by inversion: ``mu - b sgn(U - 1/2) log(1 - 2|U - 1/2|)``."""
    if not b_star > 0:
        raise ValueError(f"b_star must be positive, got {b_star}")
    c = _open_uniform(make_rng(seed), n) - 0.5
    x = mu_star - b_star * np.sign(c) * np.log1p(-2.0 * np.abs(c))
    return ObservedSample(x)


# --------------------------------------------------------------------------
# configuration and records


_DEFAULT_N_GRID = {
    DIC_GEOMETRIC: (100, 1_000, 10_000, 100_000, 1_000_000),
    WBIC_NORMAL: (10, 100, 1_000, 10_000, 100_000),
    LAPLACE: (100, 1_000, 10_000, 100_000),
    CONSISTENCY: (100, 1_000, 10_000, 100_000),
}
_DEFAULT_SCHEDULES = {
    DIC_GEOMETRIC: (),
    WBIC_NORMAL: tuple(BetaSchedule),
    LAPLACE: (BetaSchedule.INV_LOG_N,),
    CONSISTENCY: (BetaSchedule.ONE, BetaSchedule.INV_LOG_N),
}
_DEFAULT_THETA0 = {
    DIC_GEOMETRIC: tuple(round(0.1 * k, 1) for k in range(1, 10)),
    CONSISTENCY: (0.5,),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One replicated experiment.

    ``theta0s`` are geometric success probabilities; ``normal_theta0`` is the
    normal data mean; the Laplace fields describe data and parameter box.
    """

    kind: str
    n_grid: tuple = ()
    replicates: int = 10
    seed: int = 0
    theta0s: tuple = ()
    alphas: tuple = (1.0, 10.0, 100.0)
    betas: tuple = (1.0, 10.0, 100.0)
    normal_theta0: float = 1.0
    prior_mean: float = 0.0
    schedules: Optional[tuple] = None
    eps: tuple = (0.05,)
    laplace_mu: float = 0.0
    laplace_b: float = 1.0
    box_m: float = 4.0
    box_s: float = 8.0
    nodes: tuple = (256, 256)
    gibbs: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.kind not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.kind!r}; choose from {', '.join(EXPERIMENTS)}")
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_("n_grid", tuple(int(n) for n in (self.n_grid or _DEFAULT_N_GRID[self.kind])))
        schedules = self.schedules if self.schedules is not None else _DEFAULT_SCHEDULES[self.kind]
        set_("schedules", tuple(BetaSchedule.parse(s) for s in schedules))
        set_("theta0s", tuple(float(t) for t in (self.theta0s or _DEFAULT_THETA0.get(self.kind, (0.5,)))))
        set_("alphas", tuple(float(a) for a in self.alphas))
        set_("betas", tuple(float(b) for b in self.betas))
        set_("eps", tuple(float(e) for e in self.eps))
        set_("nodes", tuple(int(k) for k in np.broadcast_to(self.nodes, (2,))))

        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigurationError("n_grid must be strictly increasing")
        if not self.n_grid or self.n_grid[0] < 1:
            raise ConfigurationError("n_grid must contain positive sample sizes")
        n_min = max([s.n_min for s in self.schedules], default=1)
        if self.n_grid[0] < n_min:
            raise ConfigurationError(f"n_grid starts below {n_min}, the smallest n every schedule supports")
        if self.replicates < 1:
            raise ConfigurationError("replicates must be at least 1")
        if not 0 <= self.seed < _UINT64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")
        if any(not 0.0 < t < 1.0 for t in self.theta0s):
            raise ConfigurationError("geometric theta0 values must lie in (0, 1)")
        if any(v <= 0 for v in self.alphas + self.betas):
            raise ConfigurationError("Beta prior hyperparameters must be positive")
        if any(e <= 0 for e in self.eps):
            raise ConfigurationError("eps values must be positive")
        if self.kind == CONSISTENCY and any(not s.satisfies_growth for s in self.schedules):
            raise ConfigurationError("consistency curves need schedules with n * beta_n -> infinity")
        if self.kind == LAPLACE:
            LaplaceModel(self.box_m, self.box_s).true_theta0(LaplaceDGP(self.laplace_mu, self.laplace_b))


def default_config(kind: str, **overrides) -> ExperimentConfig:
    return ExperimentConfig(kind=kind, **overrides)


@dataclass(frozen=True)
class RunRecord:
    experiment: str
    model: str
    criterion: str
    schedule: str
    theta0: str
    alpha: Optional[float]
    beta: Optional[float]
    n: int
    replicate: int
    seed: int
    value: float
    limit: float
    abs_error: float = field(init=False)
    satisfies_growth: Optional[bool] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "abs_error", abs(self.value - self.limit))

    def rescaled(self) -> "RunRecord":
        """Criterion on the conventional ``n``-multiplied scale (``n/2`` for WBIC)."""
        base = self.criterion.split("-")[0]
        if base not in ("DIC", "BPIC", "WBIC"):
            return self
        factor = self.n / 2.0 if base == "WBIC" else float(self.n)
        return replace(self, value=self.value * factor, limit=self.limit * factor)


def _fmt_theta(values) -> str:
    return ";".join(repr(float(v)) for v in np.atleast_1d(values))


# --------------------------------------------------------------------------
# cells


def _dic_geometric_cell(args):
    config, i_theta, i_alpha, i_beta, i_n, rep = args
    theta0 = config.theta0s[i_theta]
    alpha, beta = config.alphas[i_alpha], config.betas[i_beta]
    n = config.n_grid[i_n]
    seed = derive_seed(config.seed, _EXPERIMENT_TAG[DIC_GEOMETRIC], i_theta, i_alpha, i_beta, i_n, rep)
    xbar = sample_geometric(theta0, n, seed).xbar
    limit = limit_geometric((1.0 - theta0) / theta0).value
    common = dict(
        experiment=DIC_GEOMETRIC, model="geometric", schedule="-", theta0=_fmt_theta(theta0),
        alpha=alpha, beta=beta, n=n, replicate=rep, seed=seed, limit=limit,
    )
    return [
        RunRecord(criterion="DIC-poincare", value=dic_geometric_approx(alpha, beta, n, xbar).value, **common),
        RunRecord(criterion="DIC-exact", value=dic_geometric_exact(alpha, beta, n, xbar).value, **common),
    ]


def _wbic_normal_cell(args):
    config, i_n, rep = args
    n = config.n_grid[i_n]
    seed = derive_seed(config.seed, _EXPERIMENT_TAG[WBIC_NORMAL], 0, i_n, rep)
    sample = sample_normal(config.normal_theta0, n, seed)
    model = NormalModel((config.prior_mean,))
    limit = limit_normal(1, config.normal_theta0**2 + 1.0, config.normal_theta0**2).value
    out = []
    for schedule in config.schedules:
        value = wbic(model, sample, schedule).value
        out.append(
            RunRecord(
                experiment=WBIC_NORMAL, model="normal", criterion="WBIC", schedule=schedule.value,
                theta0=_fmt_theta(config.normal_theta0), alpha=None, beta=None, n=n, replicate=rep,
                seed=seed, value=value, limit=limit, satisfies_growth=schedule.satisfies_growth,
            )
        )
    return out


def _laplace_cell(args):
    config, i_n, rep = args
    n = config.n_grid[i_n]
    seed = derive_seed(config.seed, _EXPERIMENT_TAG[LAPLACE], 0, i_n, rep)
    sample = sample_laplace(config.laplace_mu, config.laplace_b, n, seed)
    model = LaplaceModel(config.box_m, config.box_s)
    limit = limit_laplace(config.laplace_b).value
    common = dict(
        experiment=LAPLACE, model="laplace", theta0=_fmt_theta((config.laplace_mu, config.laplace_b)),
        alpha=None, beta=None, n=n, replicate=rep, seed=seed, limit=limit,
    )
    post = power_posterior(model, sample, 1.0, method="grid", nodes_per_axis=config.nodes)
    out = [
        RunRecord(criterion="DIC", schedule="-", value=dic(model, sample, post).value, **common),
        RunRecord(criterion="BPIC", schedule="-", value=bpic(model, sample, post).value, **common),
    ]
    for schedule in config.schedules:
        value = wbic(model, sample, schedule, method="grid", nodes_per_axis=config.nodes).value
        out.append(
            RunRecord(criterion="WBIC", schedule=schedule.value, value=value,
                      satisfies_growth=schedule.satisfies_growth, **common)
        )
    return out


def _mass_label(eps: float, prefix: str = "") -> str:
    return f"{prefix}ball_mass(eps={eps!r})"


def _consistency_cell(args):
    """Ball-mass curves along one nested sample path per model and replicate."""
    config, model_name, i_theta, rep = args
    n_max = config.n_grid[-1]
    out = []
    if model_name == "geometric":
        theta0 = config.theta0s[i_theta]
        seed = derive_seed(config.seed, _EXPERIMENT_TAG[CONSISTENCY], 0, i_theta, rep)
        path = sample_geometric(theta0, n_max, seed).values[:, 0]
        center = np.array([theta0])
        alpha, beta = config.alphas[0], config.betas[0]
    else:
        theta0 = config.normal_theta0
        seed = derive_seed(config.seed, _EXPERIMENT_TAG[CONSISTENCY], 1, 0, rep)
        path = sample_normal(theta0, n_max, seed).values[:, 0]
        center = np.array([theta0])
        alpha = beta = None
    partial = np.cumsum(path)
    for n in config.n_grid:
        xbar = partial[n - 1] / n
        for schedule in config.schedules:
            beta_n = schedule.evaluate(n)
            if model_name == "geometric":
                post = geometric_power_posterior(alpha, beta, n, xbar, beta_n)
            else:
                post = normal_power_posterior(config.prior_mean, n, xbar, beta_n)
            for eps in config.eps:
                out.append(
                    RunRecord(
                        experiment=CONSISTENCY, model=model_name, criterion=_mass_label(eps),
                        schedule=schedule.value, theta0=_fmt_theta(theta0), alpha=alpha, beta=beta,
                        n=n, replicate=rep, seed=seed, value=ball_mass(post, center, eps), limit=1.0,
                        satisfies_growth=True,
                    )
                )
            if config.gibbs and model_name == "geometric":
                out.extend(_gibbs_records(config, n, xbar, schedule, theta0, rep, seed))
    return out


def _gibbs_records(config, n, xbar, schedule, theta0, rep, seed):
    gamma_n = n * schedule.evaluate(n)
    mean_x = float(xbar)

    def utility(nodes):
        t = nodes[:, 0]
        return mean_x * np.log1p(-t) + np.log(t)

    out = []
    for k in (0, 1):
        post = eta_rescaled_posterior(utility, gamma_n, k, ((0.0, 1.0),))
        for eps in config.eps:
            out.append(
                RunRecord(
                    experiment=CONSISTENCY, model="geometric", criterion=_mass_label(eps, f"gibbs_k{k}_"),
                    schedule=schedule.value, theta0=_fmt_theta(theta0), alpha=None, beta=None, n=n,
                    replicate=rep, seed=seed, value=ball_mass(post, [theta0], eps), limit=1.0,
                    satisfies_growth=True,
                )
            )
    return out


def _cells(config: ExperimentConfig):
    reps = range(config.replicates)
    n_idx = range(len(config.n_grid))
    if config.kind == DIC_GEOMETRIC:
        grid = product(range(len(config.theta0s)), range(len(config.alphas)), range(len(config.betas)), n_idx, reps)
        return _dic_geometric_cell, [(config, *key) for key in grid]
    if config.kind == WBIC_NORMAL:
        return _wbic_normal_cell, [(config, i, r) for i, r in product(n_idx, reps)]
    if config.kind == LAPLACE:
        return _laplace_cell, [(config, i, r) for i, r in product(n_idx, reps)]
    cells = [(config, "geometric", i, r) for i, r in product(range(len(config.theta0s)), reps)]
    cells += [(config, "normal", 0, r) for r in reps]
    return _consistency_cell, cells


def run_experiment(config: ExperimentConfig, jobs: Optional[int] = None) -> list[RunRecord]:
    """Run every cell of ``config`` and return records in cell order.

    Output is identical for any ``jobs``: cells are independent and results
    are reassembled in the order the cells were enumerated.
    """
    jobs = config.jobs if jobs is None else jobs
    fn, cells = _cells(config)
    if jobs <= 1 or len(cells) <= 1:
        chunks = [fn(c) for c in cells]
    else:
        chunksize = max(1, len(cells) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(fn, cells, chunksize=chunksize))
    return [rec for chunk in chunks for rec in chunk]


def run_dic_geometric(config: ExperimentConfig, jobs: Optional[int] = None) -> list[RunRecord]:
    _expect(config, DIC_GEOMETRIC)
    return run_experiment(config, jobs)


def run_wbic_normal(config: ExperimentConfig, jobs: Optional[int] = None) -> list[RunRecord]:
    _expect(config, WBIC_NORMAL)
    return run_experiment(config, jobs)


def run_laplace(config: ExperimentConfig, jobs: Optional[int] = None) -> list[RunRecord]:
    _expect(config, LAPLACE)
    return run_experiment(config, jobs)


def run_consistency(config: ExperimentConfig, jobs: Optional[int] = None) -> list[RunRecord]:
    _expect(config, CONSISTENCY)
    return run_experiment(config, jobs)


def _expect(config: ExperimentConfig, kind: str) -> None:
    if config.kind != kind:
        raise ConfigurationError(f"expected a {kind} configuration, got {config.kind}")


# --------------------------------------------------------------------------
# summaries


DEFAULT_GROUP = ("experiment", "model", "criterion", "schedule", "n")


@dataclass(frozen=True)
class SummaryRow:
    key: tuple
    count: int
    median_value: float
    median_abs_error: float
    min_value: float
    max_value: float


def lower_median(values: Sequence[float]) -> float:
    """Median taking the lower middle element for even counts."""
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def summarize(records: Sequence[RunRecord], by: Sequence[str] = DEFAULT_GROUP) -> list[SummaryRow]:
    """One row per group: lower medians of value and abs_error, plus min and max."""
    if not records:
        raise ValueError("cannot summarize an empty record list")
    groups: dict[tuple, list[RunRecord]] = {}
    for rec in records:
        groups.setdefault(tuple(getattr(rec, k) for k in by), []).append(rec)
    rows = []
    for key, recs in groups.items():
        values = [r.value for r in recs]
        rows.append(
            SummaryRow(
                key=key,
                count=len(recs),
                median_value=lower_median(values),
                median_abs_error=lower_median([r.abs_error for r in recs]),
                min_value=min(values),
                max_value=max(values),
            )
        )
    return rows
