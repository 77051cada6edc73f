"""Estimator-style wrappers around the recording and fitting pipeline.

ReservoirStateEncoder turns an input sequence into the matrix of sampled
neuron voltages (a transformer), and LinearReadout is the batch
least-squares readout (a regressor).  Both follow the fit/transform/predict
and get_params conventions so they compose with pipelines and grid search.
The simulator itself stays imperative; only the learning stack benefits
from this shape.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fabric import ReservoirConfig
from .openloop import lsm_fit, record


def _as_sequence(X) -> np.ndarray:
    arr = check_array(X, ensure_2d=False, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(
                f"expected a single input sequence, got {arr.shape[1]} columns"
            )
        arr = arr[:, 0]
    return arr


class ReservoirStateEncoder(TransformerMixin, BaseEstimator):
    """Transformer from a scalar input sequence to reservoir state rows.

    X is the input sequence, one sample per row (a column vector or a flat
    array); transform drives the reservoir from reset and returns the
    (T, n_neurons) matrix of estimated voltages.
    """

    def __init__(self, config: ReservoirConfig | None = None, sample_period: float = 120e-6):
        self.config = config
        self.sample_period = sample_period

    def fit(self, X, y=None):
        if self.config is None:
            raise ValueError("config must be set before fitting")
        if self.sample_period <= 0.0:
            raise ValueError("sample_period must be positive")
        _as_sequence(X)
        self.n_features_in_ = 1
        self.n_neurons_ = self.config.n
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_neurons_")
        u = _as_sequence(X)
        return record(self.config, u, self.sample_period).states

    def _more_tags(self):
        return {"stateless": True}


class LinearReadout(RegressorMixin, BaseEstimator):
    """Least-squares linear readout with an automatic ridge guard.

    No intercept is fitted: reservoir states carry a quasi-constant
    component of their own.
    """

    def __init__(self, ridge: float | str | None = "auto"):
        self.ridge = ridge

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if y.ndim not in (1, 2) or y.shape[0] != X.shape[0]:
            raise ValueError(
                f"target shape {y.shape} does not match {X.shape[0]} samples"
            )
        self.coef_ = lsm_fit(X, y, self.ridge)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return X @ self.coef_
