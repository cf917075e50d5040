"""Information criteria (DIC, BPIC, WBIC) for simple Bayesian models.

Closed-form and quadrature evaluation, their large-sample limits, posterior
consistency diagnostics, and replicated simulation experiments.
"""

from .criteria import CriterionValue, bpic, criterion, dic, dic_geometric, laplace_criteria, wbic
from .estimator import InformationCriteria
from .exceptions import (
    ConfigurationError,
    ContractError,
    DataError,
    DegenerateKernelError,
    DomainError,
    UnsupportedFunctionalError,
)
from .limits import LimitValue, limit_for, limit_geometric, limit_laplace, limit_normal
from .models import (
    GeometricDGP,
    GeometricModel,
    LaplaceDGP,
    LaplaceModel,
    NormalDGP,
    NormalModel,
    ObservedSample,
    make_sample,
)
from .posterior import BetaSchedule, ball_mass, power_posterior
from .simulate import ExperimentConfig, RunRecord, run_experiment, summarize
from .specfun import digamma, digamma_poincare, log_sum_exp

__version__ = "0.1.0"

__all__ = [
    "BetaSchedule",
    "ConfigurationError",
    "ContractError",
    "CriterionValue",
    "DataError",
    "DegenerateKernelError",
    "DomainError",
    "ExperimentConfig",
    "GeometricDGP",
    "GeometricModel",
    "InformationCriteria",
    "LaplaceDGP",
    "LaplaceModel",
    "LimitValue",
    "NormalDGP",
    "NormalModel",
    "ObservedSample",
    "RunRecord",
    "UnsupportedFunctionalError",
    "ball_mass",
    "bpic",
    "criterion",
    "dic",
    "dic_geometric",
    "digamma",
    "digamma_poincare",
    "laplace_criteria",
    "limit_for",
    "limit_geometric",
    "limit_laplace",
    "limit_normal",
    "log_sum_exp",
    "make_sample",
    "power_posterior",
    "run_experiment",
    "summarize",
    "wbic",
]
