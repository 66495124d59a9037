"""scikit-learn style wrappers around the fitting pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import DegenerateTargetError, FeatureProductSpec, estimate_delta_y, expand_matrix
from .objective import DesignMatrix
from .optimize import OptimizerConfig, fit_clr
from .ratcode import DEFAULT_CONSTANTS


def _spec(features: str, n_in: int, include_bias: bool) -> FeatureProductSpec:
    return FeatureProductSpec.from_dict({"preset": features, "include_bias": include_bias}, n_in)


class FeatureProduct(TransformerMixin, BaseEstimator):
    """Append squares or pairwise products of the columns, plus an optional bias column."""

    def __init__(self, features="squares", include_bias=True):
        self.features = features
        self.include_bias = include_bias

    def fit(self, X, y=None):
        X = validate_data(self, X)
        self.spec_ = _spec(self.features, self.n_features_in_, self.include_bias)
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = validate_data(self, X, reset=False)
        out, _, _ = expand_matrix(X.T, self.spec_)
        return out.T

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "spec_")
        names = input_features if input_features is not None else [f"x{i + 1}" for i in range(self.n_features_in_)]
        _, out, _ = expand_matrix(np.zeros((self.n_features_in_, 1)), self.spec_, names)
        return np.asarray(out, dtype=object)


class CLRRegressor(RegressorMixin, BaseEstimator):
    """Sparse linear regression by minimum description length.

    Parameters are chosen to minimize the smooth two-part code length; features
    whose precision exceeds their magnitude are dropped and the fit repeated.
    ``delta_y=None`` estimates the target grid from the data.
    """

    def __init__(self, features="identity", include_bias=True, delta_y=None,
                 tol=1e-3, max_iter_per_dim=400, max_cull_rounds=20, restarts=0,
                 compute_exact=True, constants=None):
        self.features = features
        self.include_bias = include_bias
        self.delta_y = delta_y
        self.tol = tol
        self.max_iter_per_dim = max_iter_per_dim
        self.max_cull_rounds = max_cull_rounds
        self.restarts = restarts
        self.compute_exact = compute_exact
        self.constants = constants

    def _config(self) -> OptimizerConfig:
        return OptimizerConfig(max_iter_per_dim=self.max_iter_per_dim, tol=self.tol,
                               max_cull_rounds=self.max_cull_rounds, restarts=self.restarts)

    def _design(self, X):
        return expand_matrix(X.T, self.spec_)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        if X.shape[0] < 2:
            raise ValueError(f"n_samples={X.shape[0]}; at least 2 are needed")
        self.spec_ = _spec(self.features, self.n_features_in_, self.include_bias)
        Xe, self.feature_names_out_, self.bias_index_ = self._design(X)
        if np.ptp(y) == 0:
            raise DegenerateTargetError("target is constant")
        self.delta_y_ = float(self.delta_y) if self.delta_y is not None else estimate_delta_y(y)
        self.offset_ = float(np.min(y))
        dm = DesignMatrix(Xe, y, self.delta_y_)
        exempt = () if self.bias_index_ is None else (self.bias_index_,)
        self.model_ = fit_clr(dm, self._config(), self.constants or DEFAULT_CONSTANTS,
                              exempt=exempt, offset=self.offset_, compute_exact=self.compute_exact)
        self.coef_ = self.model_.full_theta(sharp=True)
        self.delta_ = self.model_.full_delta()
        self.description_length_ = self.model_.description_length_bits
        self.exact_bits_ = self.model_.exact_bits
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = validate_data(self, X, reset=False)
        return self._design(X)[0].T @ self.coef_

    def select_features(self, X):
        """Expanded design restricted to the surviving features."""
        check_is_fitted(self, "model_")
        X = validate_data(self, X, reset=False)
        return self._design(X)[0][list(self.model_.active_features)].T

    def n_nonzero(self) -> int:
        """Surviving features, bias excluded."""
        check_is_fitted(self, "model_")
        return int(sum(1 for i in self.model_.active_features if i != self.bias_index_))
