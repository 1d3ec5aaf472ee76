"""Scikit-learn style front end for the partial-likelihood fitter.

``CoxIntensityModel`` follows the estimator conventions (constructor takes
only hyperparameters, ``fit`` sets trailing-underscore attributes,
``get_params``/``set_params``/``clone`` work), so fits compose with the
usual tooling.  The training input is an event log (object or file path)
rather than a feature matrix.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .events import EventLog, window
from .fitter import FitConfig, fit_trace, wald_significance
from .likelihood import RiskSetPolicy, breslow_baseline, build_trace, evaluate
from .validation import as_covariate_spec, as_event_log, normalize_sentiment

__all__ = ["CoxIntensityModel"]

_DAY = 86400.0


class CoxIntensityModel(BaseEstimator):
    """Cox intensity model for one sentiment stream on an event log.

    Parameters
    ----------
    sentiment : 'positive' or 'negative'
        Which message stream the model explains.
    covariates : 'focal', 'full', name list, or CovariateSpec
        Covariate registry used for every node.
    window_days : float or None
        Analysis window length ending at the log's last event; earlier
        events feed the covariate history only.
    window_start, window_end : float or None
        Explicit window bounds (seconds); override ``window_days``.
    risk_set : 'all_nodes' or 'ever_active'
    standardize : bool
        Z-score covariates over the window's risk-set evaluations.
    confidence_level : float
    max_iter : int
    tol : float
        Convergence threshold on the max-norm of the score.

    Attributes
    ----------
    coef_ : ndarray of shape (p,)
    standard_errors_ : ndarray of shape (p,)
    conf_int_ : ndarray of shape (p, 2)
    loglik_ : float
    n_iter_ : int
    converged_ : bool
    feature_names_ : tuple of str
    result_ : FitResult with the full diagnostics
    """

    def __init__(
        self,
        sentiment="positive",
        covariates="focal",
        window_days=None,
        window_start=None,
        window_end=None,
        risk_set="all_nodes",
        standardize=False,
        confidence_level=0.95,
        max_iter=100,
        tol=1e-8,
    ):
        self.sentiment = sentiment
        self.covariates = covariates
        self.window_days = window_days
        self.window_start = window_start
        self.window_end = window_end
        self.risk_set = risk_set
        self.standardize = standardize
        self.confidence_level = confidence_level
        self.max_iter = max_iter
        self.tol = tol

    def _window_bounds(self, log: EventLog) -> tuple[float, float]:
        if self.window_start is not None or self.window_end is not None:
            lo = float(self.window_start) if self.window_start is not None else float("-inf")
            hi = float(self.window_end) if self.window_end is not None else float("inf")
            return lo, hi
        if self.window_days is not None:
            if log.n_events == 0:
                return float("-inf"), float("inf")
            hi = float(log.times[-1])
            return hi - float(self.window_days) * _DAY, hi
        return float("-inf"), float("inf")

    def fit(self, X, y=None):
        """Fit on an event log (EventLog, path, or lines); y is ignored."""
        log = as_event_log(X)
        spec = as_covariate_spec(self.covariates)
        normalize_sentiment(self.sentiment)
        lo, hi = self._window_bounds(log)
        history, analysis = window(log, lo, hi)
        policy = RiskSetPolicy(mode=self.risk_set)
        config = FitConfig(
            max_iterations=self.max_iter,
            grad_tol=self.tol,
            confidence_level=self.confidence_level,
            standardize=self.standardize,
        )
        trace = build_trace(history, analysis, spec, policy)
        result = fit_trace(trace, self.sentiment, config)

        self.result_ = result
        self.coef_ = result.beta
        self.standard_errors_ = result.se
        self.conf_int_ = np.column_stack([result.ci_lower, result.ci_upper])
        self.loglik_ = result.loglik
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.feature_names_ = result.names
        self._spec = spec
        self._policy = policy
        self._trace = trace
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise AttributeError("model is not fitted; call fit() first")

    def significance_(self):
        self._check_fitted()
        return wald_significance(self.result_)

    def predict_partial_hazard(self, X):
        """Relative risk exp(coef . s(i, end)) per node after replaying X."""
        self._check_fitted()
        log = as_event_log(X)
        from .covariates import CovariateCache
        from .state import NetworkState

        state = NetworkState(log.n_nodes)
        state.replay(log)
        cache = CovariateCache(state, self._spec)
        mat = cache.matrix
        if self.result_.standardized:
            mat = (mat - self.result_.center) / self.result_.scale
        return np.exp(mat @ self.coef_)

    def score(self, X, y=None):
        """Log partial likelihood of X's window under the fitted coefficients."""
        self._check_fitted()
        log = as_event_log(X)
        lo, hi = self._window_bounds(log)
        history, analysis = window(log, lo, hi)
        trace = build_trace(history, analysis, self._spec, self._policy)
        value = evaluate(
            trace,
            self.coef_,
            self.sentiment,
            order=0,
            center=self.result_.center,
            scale=self.result_.scale,
        )
        return value.loglik

    def baseline_hazard_(self):
        """Breslow cumulative baseline hazard over the training window."""
        self._check_fitted()
        return breslow_baseline(
            self._trace,
            self.coef_,
            self.sentiment,
            center=self.result_.center,
            scale=self.result_.scale,
        )
