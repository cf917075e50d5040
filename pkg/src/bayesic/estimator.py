"""Scikit-learn style front end computing DIC, BPIC and WBIC for one dataset."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .criteria import bpic, dic, wbic
from .exceptions import ConfigurationError
from .models import GeometricModel, LaplaceModel, NormalModel, make_sample
from .posterior import DEFAULT_NODES_2D, BetaSchedule, power_posterior

MODEL_KINDS = ("geometric", "normal", "laplace")


class InformationCriteria(BaseEstimator):
    """Fit a posterior and report the three information criteria.

    Parameters
    ----------
    model : {"geometric", "normal", "laplace"}
        Likelihood family.
    alpha, beta : float
        Beta prior hyperparameters of the geometric model.
    prior_mean : float or sequence of float, optional
        Prior mean of the normal model. ``None`` means the zero vector of the
        data's dimension.
    box : (float, float)
        ``(m, s)`` of the Laplace parameter box ``[-m, m] x [1/s, s]``.
    schedule : str or float
        WBIC temperature: a schedule name such as ``"inv-log-n"`` or an
        explicit ``beta_n``.
    nodes : int or (int, int), optional
        Grid size for quadrature (Laplace only by default).

    Attributes
    ----------
    dic_, bpic_, wbic_ : CriterionValue
        Criteria on the per-observation scale.
    theta_mean_ : ndarray
        Posterior mean under the ordinary (``beta_n = 1``) posterior.
    """

    def __init__(
        self,
        model="geometric",
        alpha=1.0,
        beta=1.0,
        prior_mean=None,
        box=(4.0, 8.0),
        schedule="inv-log-n",
        nodes=None,
    ):
        self.model = model
        self.alpha = alpha
        self.beta = beta
        self.prior_mean = prior_mean
        self.box = box
        self.schedule = schedule
        self.nodes = nodes

    def _build_model(self, n_features: int):
        if self.model == "geometric":
            return GeometricModel(float(self.alpha), float(self.beta))
        if self.model == "normal":
            mu = np.zeros(n_features) if self.prior_mean is None else np.atleast_1d(self.prior_mean)
            if mu.size != n_features:
                raise ConfigurationError(f"prior_mean has length {mu.size}, data has {n_features} column(s)")
            return NormalModel(tuple(mu))
        if self.model == "laplace":
            m, s = self.box
            return LaplaceModel(float(m), float(s))
        raise ConfigurationError(f"unknown model {self.model!r}; choose from {', '.join(MODEL_KINDS)}")

    def fit(self, X, y=None):
        arr = np.asarray(X, dtype=float)
        n_features = 1 if arr.ndim == 1 else arr.shape[1]
        model = self._build_model(n_features)
        sample = make_sample(model, arr)
        if not isinstance(self.schedule, (int, float)):
            BetaSchedule.parse(self.schedule)
        method = "grid" if isinstance(model, LaplaceModel) else "auto"
        nodes = self.nodes
        if nodes is None and isinstance(model, LaplaceModel):
            nodes = DEFAULT_NODES_2D

        post = power_posterior(model, sample, 1.0, method=method, nodes_per_axis=nodes)
        self.model_ = model
        self.sample_ = sample
        self.posterior_ = post
        self.dic_ = dic(model, sample, post)
        self.bpic_ = bpic(model, sample, post)
        self.wbic_ = wbic(model, sample, self.schedule, method=method, nodes_per_axis=nodes)
        self.theta_mean_ = np.asarray(post.mean(), dtype=float)
        self.n_samples_ = sample.n
        self.n_features_in_ = sample.dim
        return self

    def criteria(self, rescale_n: bool = False) -> dict:
        """``{"DIC": ..., "BPIC": ..., "WBIC": ...}`` as floats."""
        check_is_fitted(self, "dic_")
        values = (self.dic_, self.bpic_, self.wbic_)
        return {c.kind: (c.rescaled() if rescale_n else c.value) for c in values}

    def score(self, X, y=None) -> float:
        """Average log-likelihood of ``X`` at the posterior mean."""
        check_is_fitted(self, "theta_mean_")
        sample = make_sample(self.model_, X)
        return float(self.model_.avg_loglik(sample, self.theta_mean_.reshape(1, -1))[0])
