"""DIC, BPIC and WBIC on the per-observation scale.

With ``f_n(theta) = (1/n) sum_i log p(X_i | theta)``:

* ``DIC_n  = -4 E[f_n] + 2 f_n(posterior mean)`` under the ordinary posterior,
* ``BPIC_n = -2 E[f_n] + 2 p / n`` under the ordinary posterior,
* ``WBIC_n = -2 E[f_n]`` under the power posterior at temperature ``beta_n``.

Multiplying by ``n`` (``n / 2`` for WBIC) recovers the conventional scalings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .exceptions import ContractError, DomainError
from .models import LOG_2PI, GeometricModel, LaplaceModel, NormalModel, ObservedSample
from .posterior import (
    BetaPosterior,
    BetaSchedule,
    GridPosterior,
    NormalPosterior,
    power_posterior,
)
from .specfun import digamma, digamma_poincare

KINDS = ("DIC", "BPIC", "WBIC")
CLOSED_FORM = "ClosedForm"
POINCARE = "PoincareApprox"
QUADRATURE = "Quadrature"


@dataclass(frozen=True)
class CriterionValue:
    kind: str
    n: int
    beta_n: float
    value: float
    method: str
    limit: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if self.kind not in KINDS:
            raise ValueError(f"unknown criterion {self.kind!r}")
        if not math.isfinite(self.value):
            raise DomainError(f"{self.kind} evaluated to a non-finite value")
        if self.kind in ("DIC", "BPIC") and self.beta_n != 1.0:
            raise ContractError(f"{self.kind} is defined under the beta_n = 1 posterior")

    def rescaled(self) -> float:
        """Value on the conventional scale: ``n * DIC``, ``n * BPIC``, ``n * WBIC / 2``."""
        factor = self.n / 2.0 if self.kind == "WBIC" else float(self.n)
        return self.value * factor


def _method(post) -> str:
    return QUADRATURE if isinstance(post, GridPosterior) else CLOSED_FORM


def expected_avg_loglik(model, sample: ObservedSample, post) -> float:
    """Posterior expectation of the average log-likelihood ``E[f_n(theta)]``."""
    if isinstance(post, GridPosterior):
        return float(post.weights @ model.avg_loglik(sample, post.nodes))
    if isinstance(model, GeometricModel) and isinstance(post, BetaPosterior):
        return sample.xbar * post.expect("log1m") + post.expect("log")
    if isinstance(model, NormalModel) and isinstance(post, NormalPosterior):
        m = post.mean()
        d = m - sample.mean
        # E||X_i - theta||^2 averaged over i: centered spread + bias + posterior trace
        spread = sample.centered_sum_sq / sample.n + float(d @ d) + model.dim * post.var
        return -0.5 * model.dim * LOG_2PI - 0.5 * spread
    raise TypeError(f"{type(post).__name__} does not match a {model.kind} model")


def _require_unit_temperature(post, kind: str) -> None:
    if post.beta_n != 1.0:
        raise ContractError(f"{kind} needs the ordinary posterior (beta_n = 1), got beta_n = {post.beta_n}")


def bpic(model, sample: ObservedSample, post) -> CriterionValue:
    _require_unit_temperature(post, "BPIC")
    value = -2.0 * expected_avg_loglik(model, sample, post) + 2.0 * model.dim / sample.n
    return CriterionValue("BPIC", sample.n, 1.0, value, _method(post))


def dic(model, sample: ObservedSample, post) -> CriterionValue:
    _require_unit_temperature(post, "DIC")
    plug_in = model.avg_loglik(sample, post.mean().reshape(1, -1))[0]
    value = -4.0 * expected_avg_loglik(model, sample, post) + 2.0 * plug_in
    return CriterionValue("DIC", sample.n, 1.0, value, _method(post))


def resolve_beta_n(schedule: Union[BetaSchedule, str, float], n: int) -> float:
    if isinstance(schedule, (int, float)) and not isinstance(schedule, bool):
        if not (math.isfinite(schedule) and schedule > 0):
            raise DomainError(f"beta_n must be positive, got {schedule}")
        return float(schedule)
    return BetaSchedule.parse(schedule).evaluate(n)


def wbic(
    model,
    sample: ObservedSample,
    schedule: Union[BetaSchedule, str, float] = BetaSchedule.INV_LOG_N,
    *,
    method: str = "auto",
    nodes_per_axis=None,
) -> CriterionValue:
    """WBIC at temperature ``schedule`` (a named schedule or an explicit ``beta_n``)."""
    beta_n = resolve_beta_n(schedule, sample.n)
    post = power_posterior(model, sample, beta_n, method=method, nodes_per_axis=nodes_per_axis)
    if isinstance(post, NormalPosterior):
        # tr(S) - 2 xbar'm + ||m||^2 + tr(Sigma), with S the raw second moment
        m = post.mean()
        xbar = sample.mean
        value = (
            model.dim * LOG_2PI
            + sample.sum_sq / sample.n
            - 2.0 * float(xbar @ m)
            + float(m @ m)
            + model.dim * post.var
        )
    else:
        value = -2.0 * expected_avg_loglik(model, sample, post)
    return CriterionValue("WBIC", sample.n, beta_n, value, _method(post))


def criterion(
    model,
    sample: ObservedSample,
    kind: str,
    schedule: Union[BetaSchedule, str, float] = BetaSchedule.INV_LOG_N,
    *,
    method: str = "auto",
    nodes_per_axis=None,
) -> CriterionValue:
    """Evaluate one criterion by name; ``schedule`` only matters for WBIC."""
    kind = kind.upper()
    if kind == "WBIC":
        return wbic(model, sample, schedule, method=method, nodes_per_axis=nodes_per_axis)
    post = power_posterior(model, sample, 1.0, method=method, nodes_per_axis=nodes_per_axis)
    if kind == "DIC":
        return dic(model, sample, post)
    if kind == "BPIC":
        return bpic(model, sample, post)
    raise ValueError(f"unknown criterion {kind!r}")


def laplace_criteria(
    model: LaplaceModel,
    sample: ObservedSample,
    schedule: Union[BetaSchedule, str, float] = 1.0,
    which: str = "WBIC",
    nodes_per_axis=(256, 256),
) -> CriterionValue:
    """Laplace DIC/BPIC/WBIC by quadrature over the parameter box."""
    if not isinstance(model, LaplaceModel):
        raise TypeError("laplace_criteria needs a LaplaceModel")
    return criterion(model, sample, which, schedule, method="grid", nodes_per_axis=nodes_per_axis)


# --------------------------------------------------------------------------
# geometric DIC fast paths


def _geometric_ab(alpha: float, beta: float, n: int, xbar: float) -> tuple[float, float]:
    if n < 1 or xbar < 0:
        raise DomainError("need n >= 1 and xbar >= 0")
    return n + alpha, n * xbar + beta


def dic_geometric_exact(alpha: float, beta: float, n: int, xbar: float) -> CriterionValue:
    """Geometric DIC from Beta posterior log-moments (digamma differences)."""
    a, b = _geometric_ab(alpha, beta, n, xbar)
    psi_ab = digamma(a + b)
    e_log = digamma(a) - psi_ab
    e_log1m = digamma(b) - psi_ab
    plug = xbar * math.log(b / (a + b)) + math.log(a / (a + b))
    value = -4.0 * (xbar * e_log1m + e_log) + 2.0 * plug
    return CriterionValue("DIC", n, 1.0, value, CLOSED_FORM)


def dic_geometric_approx(alpha: float, beta: float, n: int, xbar: float) -> CriterionValue:
    """Large-n geometric DIC with ``psi(a) ~ log(a) - 1/(2a)``.

    Substituting the two-term digamma approximation into the exact form gives
    ``-2 log(a/(a+b)) + 2b/(a(a+b)) - 2 xbar log(b/(a+b)) + 2 xbar a/(b(a+b))``.
    """
    a, b = _geometric_ab(alpha, beta, n, xbar)
    if b <= 0:
        raise DomainError("n*xbar + beta must be positive")
    s = a + b
    value = (
        -2.0 * math.log(a / s)
        + 2.0 * b / (a * s)
        - 2.0 * xbar * math.log(b / s)
        + 2.0 * a * xbar / (b * s)
    )
    return CriterionValue("DIC", n, 1.0, value, POINCARE)


def dic_geometric_poincare_terms(alpha: float, beta: float, n: int, xbar: float) -> float:
    """The same approximation assembled term by term from ``digamma_poincare``.

    Kept as an audit path: it must agree with ``dic_geometric_approx`` to
    rounding error.
    """
    a, b = _geometric_ab(alpha, beta, n, xbar)
    psi_ab = digamma_poincare(a + b)
    e_log = digamma_poincare(a) - psi_ab
    e_log1m = digamma_poincare(b) - psi_ab
    plug = xbar * math.log(b / (a + b)) + math.log(a / (a + b))
    return -4.0 * (xbar * e_log1m + e_log) + 2.0 * plug


def dic_geometric(alpha: float, beta: float, n: int, xbar: float, method: str = CLOSED_FORM) -> CriterionValue:
    if method == CLOSED_FORM:
        return dic_geometric_exact(alpha, beta, n, xbar)
    if method == POINCARE:
        return dic_geometric_approx(alpha, beta, n, xbar)
    if method == QUADRATURE:
        model = GeometricModel(alpha, beta)
        sample = _summary_sample(n, xbar)
        post = power_posterior(model, sample, 1.0, method="grid")
        return dic(model, sample, post)
    raise ValueError(f"unknown DIC method {method!r}")


class _SummarySample:
    """Stand-in exposing only ``n`` and ``xbar`` for geometric quadrature."""

    dim = 1

    def __init__(self, n: int, xbar: float):
        self.n = int(n)
        self.mean = np.array([float(xbar)])

    @property
    def xbar(self) -> float:
        return float(self.mean[0])


def _summary_sample(n: int, xbar: float) -> _SummarySample:
    return _SummarySample(n, xbar)
