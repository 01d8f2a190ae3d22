"""scikit-learn transformer over token positions.

``RotaryFeatures`` compiles a scale plan in ``fit`` and maps a column of
positions to the cosine/sine rotary features the plan would apply, so scaled
encodings can be dropped into pipelines and tuned with grid search.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .extensions import DEFAULT_ALPHA, DEFAULT_BETA, compile_plan, effective_frequencies
from .rope_core import TWO_PI, RopeParams


class RotaryFeatures(TransformerMixin, BaseEstimator):
    """Positions -> ``[cos(m theta'_1..D_r), sin(m theta'_1..D_r)]``.

    Parameters mirror :func:`radixrope.extensions.compile_plan`. ``fit``
    ignores ``X`` apart from validating it; the plan depends only on the
    geometry and method.

    Attributes
    ----------
    params_ : RopeParams
    plan_ : ScalePlan
    thetas_ : ndarray of shape (D_r,)
        Frequencies after scaling (PI folds its position division in here).
    """

    def __init__(self, base=10000.0, head_dim=128, trained_len=4096, method="none",
                 scale=1.0, alpha=DEFAULT_ALPHA, beta_hp=DEFAULT_BETA, bounds=None):
        self.base = base
        self.head_dim = head_dim
        self.trained_len = trained_len
        self.method = method
        self.scale = scale
        self.alpha = alpha
        self.beta_hp = beta_hp
        self.bounds = bounds

    def fit(self, X=None, y=None):
        if X is not None:
            self._check_positions(X, reset=True)
        self.params_ = RopeParams(self.base, self.head_dim, self.trained_len)
        self.plan_ = compile_plan(self.params_, self.method, self.scale, self.alpha,
                                  self.beta_hp, bounds=self.bounds)
        self.thetas_ = effective_frequencies(self.params_, self.plan_).thetas
        return self

    def transform(self, X):
        check_is_fitted(self, "plan_")
        m = self._check_positions(X, reset=False)
        angles = np.fmod(np.multiply.outer(m, self.thetas_), TWO_PI)
        return np.hstack([np.cos(angles), np.sin(angles)])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "plan_")
        n = self.thetas_.size
        return np.array([f"cos_{j}" for j in range(1, n + 1)] + [f"sin_{j}" for j in range(1, n + 1)],
                        dtype=object)

    def _check_positions(self, X, reset):
        X = check_array(X, ensure_2d=False, dtype=np.float64)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError(f"expected a single column of positions, got {X.shape[1]} columns")
            X = X[:, 0]
        if np.any(X < 0):
            raise ValueError("positions must be nonnegative")
        if reset:
            self.n_features_in_ = 1
        return X
