"""Linear output layers trained by one-shot regression, and error scoring."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .validation import check_2d


class LinearReadout(BaseEstimator, RegressorMixin):
    """Ridge-regularised linear map from observed states to targets.

    A bias column is always appended to the states. With ``ridge=0`` the
    fit degrades to plain least squares solved by pseudo-inverse, which
    returns the minimum-norm solution on rank-deficient state matrices.
    Multiple targets may be fitted at once by passing a 2-D ``y``.
    """

    def __init__(self, ridge=1e-8):
        self.ridge = ridge

    def fit(self, X, y):
        X = check_2d(X, "states")
        y = np.asarray(y, dtype=float)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"states and target lengths differ: {X.shape[0]} vs {y.shape[0]}")
        if self.ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {self.ridge}")
        z = np.hstack([X, np.ones((X.shape[0], 1))])
        if self.ridge > 0:
            # Stacked-rows formulation keeps the solve well conditioned.
            k = z.shape[1]
            z = np.vstack([z, np.sqrt(self.ridge) * np.eye(k)])
            y_fit = np.concatenate([y, np.zeros((k,) + y.shape[1:])])
        else:
            y_fit = y
        self.coef_, *_ = np.linalg.lstsq(z, y_fit, rcond=None)
        return self

    def predict(self, X):
        X = check_2d(X, "states")
        z = np.hstack([X, np.ones((X.shape[0], 1))])
        return z @ self.coef_


def nmse(pred, target) -> float:
    """Mean squared error normalised by the target variance.

    Predicting the target mean scores exactly 1. Undefined (raises) for
    constant targets.
    """
    pred = np.asarray(pred, dtype=float).ravel()
    target = np.asarray(target, dtype=float).ravel()
    if pred.size == 0 or pred.size != target.size:
        raise ValueError(f"prediction and target must be equal-length and non-empty, got {pred.size} vs {target.size}")
    var = float(np.var(target))
    if var == 0.0:
        raise ValueError("target variance is zero; NMSE is undefined")
    return float(np.mean((pred - target) ** 2) / var)
