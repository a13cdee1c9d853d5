"""Scikit-learn style estimator wrapping the block James-Stein fit."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dgp import CandidateModel, TrainingSample
from .exceptions import InvalidArgumentError
from .mspe import empirical_mspe
from .shrinkage import ShrinkageConfig, fit as _fit


class BlockJamesSteinRegressor(BaseEstimator, RegressorMixin):
    """Linear regressor on a two-block submodel with positive-part
    James-Stein shrinkage applied to each orthogonalized block.

    Parameters
    ----------
    block1, block2 : sequences of 0-based column indices (disjoint, each of
        size >= 3).  The model uses only these columns; all other
        coefficients are exactly zero.
    c1, c2 : nonnegative shrinkage tuning constants; None selects the
        classical positive-part constant (|block| - 2)/|block|.
    """

    def __init__(self, block1=None, block2=None, c1=None, c2=None):
        self.block1 = block1
        self.block2 = block2
        self.c1 = c1
        self.c2 = c2

    def fit(self, X, y):
        if self.block1 is None or self.block2 is None:
            raise InvalidArgumentError("block1 and block2 must be provided")
        X, y = check_X_y(X, y, y_numeric=True)
        model = CandidateModel(block1=tuple(self.block1),
                               block2=tuple(self.block2))
        sample = TrainingSample(X=X, Y=np.asarray(y, dtype=float))
        cfg = ShrinkageConfig(c1=self.c1, c2=self.c2)
        fitted = _fit(sample, model, cfg)
        self.fit_ = fitted
        self.coef_ = fitted.beta_hat
        self.shrinkage_factors_ = (fitted.a1, fitted.a2)
        self.sigma_hat_sq_ = fitted.sigma_hat_sq
        self.mspe_estimate_ = empirical_mspe(sample, model, fitted)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise InvalidArgumentError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_
