"""scikit-learn compatible wrappers.

Generators follow ``fit(X)`` then ``sample(n_paths)``, where ``X`` is a
``(n_periods, n_assets)`` matrix of historical period returns. The
allocation solver is an estimator fitted on scenarios; ``MomentMatcher``
and ``PCAReturnGenerator`` are transformers. All of them support
``get_params``/``set_params`` and ``clone``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .calibration import calibrate
from .exceptions import ValidationError
from .generation import (
    bootstrap,
    gbm_paths,
    gbm_scenarios,
    generate_linear,
    moment_match_affine,
    pca_fit,
    pca_generate,
)
from .optimization import enumerate_grid, grid_moments, portfolio_returns, solve_grid
from .types import AssetModel, ObjectiveSpec, ScenarioSet


def _as_scenarios(X):
    if isinstance(X, ScenarioSet):
        return X
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[:, None, :]
    return ScenarioSet(X)


class _CalibratedGenerator(BaseEstimator):
    """Shared ``fit`` for parametric generators: calibrate an AssetModel."""

    def fit(self, X, y=None, names=None):
        if names is None and hasattr(X, "columns"):
            names = [str(c) for c in X.columns]
        X = check_array(X, ensure_min_samples=2)
        self.model_ = calibrate(X, self.periods_per_year, names=names)
        self.n_features_in_ = X.shape[1]
        return self

    def set_model(self, model):
        """Use a known :class:`AssetModel` instead of calibrating."""
        if not isinstance(model, AssetModel):
            raise ValidationError("model must be an AssetModel")
        self.model_ = model
        self.n_features_in_ = model.n_assets
        return self


class GaussianReturnGenerator(_CalibratedGenerator):
    """Correlated Gaussian period returns ``mu*dt + sigma*sqrt(dt)*eps``.

    Parameters
    ----------
    dt : float, default=1.0
        Period length of generated scenarios in years.
    periods_per_year : int, default=12
        Frequency of the data passed to ``fit``.
    antithetic : bool, default=False
    moment_match : bool, default=False
        Force each generated period to the model's exact mean and covariance.
    random_state : int or None
    """

    def __init__(self, dt=1.0, periods_per_year=12, antithetic=False, moment_match=False, random_state=None):
        self.dt = dt
        self.periods_per_year = periods_per_year
        self.antithetic = antithetic
        self.moment_match = moment_match
        self.random_state = random_state

    def sample(self, n_paths, n_periods=1, random_state=None):
        check_is_fitted(self, "model_")
        seed = self.random_state if random_state is None else random_state
        s = generate_linear(self.model_, n_paths, n_periods, self.dt, seed, self.antithetic)
        if self.moment_match:
            s = moment_match_affine(s, self.model_.mu * self.dt, self.model_.covariance(self.dt))
        return s


class GBMGenerator(_CalibratedGenerator):
    """Exact-step correlated geometric Brownian motion."""

    def __init__(self, dt=1.0, periods_per_year=12, antithetic=False, random_state=None):
        self.dt = dt
        self.periods_per_year = periods_per_year
        self.antithetic = antithetic
        self.random_state = random_state

    def sample(self, n_paths, n_periods=1, random_state=None):
        check_is_fitted(self, "model_")
        seed = self.random_state if random_state is None else random_state
        return gbm_scenarios(self.model_, n_paths, n_periods, self.dt, seed, self.antithetic)

    def sample_paths(self, s0, n_paths, n_periods=1, random_state=None):
        check_is_fitted(self, "model_")
        seed = self.random_state if random_state is None else random_state
        return gbm_paths(s0, self.model_, n_paths, n_periods, self.dt, seed, self.antithetic)


class BootstrapGenerator(BaseEstimator):
    """Resample whole historical return rows with replacement."""

    def __init__(self, random_state=None):
        self.random_state = random_state

    def fit(self, X, y=None):
        self.history_ = check_array(X, ensure_min_samples=1)
        self.n_features_in_ = self.history_.shape[1]
        return self

    def sample(self, n_paths, n_periods=1, random_state=None):
        check_is_fitted(self, "history_")
        seed = self.random_state if random_state is None else random_state
        return bootstrap(self.history_, n_paths, n_periods, seed)


class PCAReturnGenerator(TransformerMixin, _CalibratedGenerator):
    """Simulate returns through the leading principal components.

    ``fit`` calibrates the annualized model and decomposes its covariance;
    ``transform`` maps period returns to component scores and
    ``inverse_transform`` maps scores back.
    """

    def __init__(self, n_components=None, dt=1.0, periods_per_year=12, random_state=None):
        self.n_components = n_components
        self.dt = dt
        self.periods_per_year = periods_per_year
        self.random_state = random_state

    def fit(self, X, y=None, names=None):
        super().fit(X, y, names=names)
        X = check_array(X)
        k = self.n_components or self.n_features_in_
        self.basis_ = pca_fit(self.model_.covariance(1.0), self.model_.mu, k)
        self.components_ = self.basis_.components
        self.explained_variance_ = self.basis_.eigenvalues
        self.explained_variance_ratio_ = self.basis_.explained_variance_ratio
        self.mean_ = X.mean(axis=0)
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        return check_array(X) @ self.components_ + self.mean_

    def sample(self, n_paths, n_periods=1, random_state=None):
        check_is_fitted(self, "basis_")
        seed = self.random_state if random_state is None else random_state
        return pca_generate(self.basis_, n_paths, n_periods, self.dt, seed, names=self.model_.names)


class MomentMatcher(TransformerMixin, BaseEstimator):
    """Affine two-moment matching of scenario sets.

    With ``target_mean``/``target_cov`` left as None, ``fit(X)`` takes them
    from the sample moments (ddof=1) of ``X``.
    """

    def __init__(self, target_mean=None, target_cov=None):
        self.target_mean = target_mean
        self.target_cov = target_cov

    def fit(self, X, y=None):
        if self.target_mean is not None and self.target_cov is not None:
            self.mean_ = np.asarray(self.target_mean, dtype=float)
            self.cov_ = np.asarray(self.target_cov, dtype=float)
        else:
            X = check_array(X, ensure_min_samples=2)
            self.mean_ = X.mean(axis=0) if self.target_mean is None else np.asarray(self.target_mean, dtype=float)
            self.cov_ = np.cov(X, rowvar=False, ddof=1).reshape(X.shape[1], X.shape[1]) if self.target_cov is None else np.asarray(self.target_cov, dtype=float)
        return self

    def transform(self, X):
        check_is_fitted(self, "mean_")
        if isinstance(X, ScenarioSet):
            return moment_match_affine(X, self.mean_, self.cov_)
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 2
        s = ScenarioSet(X[:, None, :] if squeeze else X)
        out = moment_match_affine(s, self.mean_, self.cov_).returns
        return out[:, 0, :] if squeeze else out


class GridAllocationOptimizer(BaseEstimator):
    """Minimum-volatility allocation on a weight grid with a return floor.

    Parameters
    ----------
    m0 : float, default=0.04
        Minimum expected portfolio return over the scenario horizon.
    step : float, default=0.05
        Grid step; ``1/step`` must be an integer.

    Attributes
    ----------
    weights_ : ndarray of shape (n_assets,)
    objective_ : float
        Empirical std of the optimal portfolio return.
    expected_ : float
    feasible_count_ : int
    outcome_ : OptimizationOutcome
    """

    def __init__(self, m0=0.04, step=0.05):
        self.m0 = m0
        self.step = step

    def fit(self, X, y=None):
        s = _as_scenarios(X)
        spec = ObjectiveSpec(self.m0, self.step)
        self.grid_ = enumerate_grid(s.n_assets, spec.step)
        self.outcome_ = solve_grid(s, spec, self.grid_)
        self.feasible_count_ = self.outcome_.feasible_count
        self.n_features_in_ = s.n_assets
        if not self.outcome_.feasible:
            self.weights_ = np.full(s.n_assets, np.nan)
            self.objective_ = self.expected_ = float("nan")
        else:
            self.weights_ = self.outcome_.best.as_array
            self.objective_ = self.outcome_.objective
            self.expected_ = self.outcome_.expected
        return self

    def predict(self, X):
        """Horizon portfolio return of every scenario under the fitted weights."""
        check_is_fitted(self, "weights_")
        if not self.outcome_.feasible:
            raise ValidationError("the fitted problem was infeasible")
        return portfolio_returns(self.outcome_.best, _as_scenarios(X))

    def score(self, X, y=None):
        """Negated std of the fitted portfolio on ``X``; ``-inf`` if it misses ``m0``."""
        check_is_fitted(self, "weights_")
        if not self.outcome_.feasible:
            return float("-inf")
        means, stds = grid_moments(_as_scenarios(X), [self.weights_])
        return float(-stds[0]) if means[0] >= self.m0 else float("-inf")
